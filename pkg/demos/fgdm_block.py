"""Build a frequency-guided block from a spectral prior and train a small
forecaster on a synthetic series."""

import numpy as np

from anchor.backbone import Backbone, BackboneConfig, StageConfig
from anchor.interpolation import InterpKernel
from anchor.spectral import extract_prior
from anchor.synth import Component, SignalSpec, generate, sliding_windows
from anchor.training import Adam, metric_suite, predict, train

spec = SignalSpec("multi_tone", 900, (Component(12.4), Component(30.0, 0.5)), noise_std=0.05)
series = generate(spec).batch.data[0]
X, Y = sliding_windows(series[:, :700], lookback=96, horizon=16, stride=2)
Xv, Yv = sliding_windows(series[:, 700 - 96:], lookback=96, horizon=16, stride=2)

prior = extract_prior(X, 2)
print("prior periods:", prior.periods)

cfg = BackboneConfig(1, 96, 6, (StageConfig(1, 6, 1),), 3, (3, 5), InterpKernel.gaussian(1.0),
                     horizon=16)
model = Backbone(cfg, prior, np.random.default_rng(0))
print("routes (kernel:period):",
      [f"{r.kernel}:{r.period}" for r in model.route_assignments[0].routes])

for rec in train(model, (X, Y), Adam(3e-3), epochs=5, seed=0):
    print(f"epoch {rec.epoch}  train loss {rec.train_loss:.5f}")
print("validation:", metric_suite(predict(model, Xv), Yv))
