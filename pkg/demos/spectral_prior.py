"""Find the dominant periods of a noisy two-tone series and turn them into
dilation anchors."""

import numpy as np

from anchor.spectral import extract_prior, spectral_energy

rng = np.random.default_rng(0)
t = np.arange(96)
x = np.sin(2 * np.pi * t / 24) + 0.5 * np.sin(2 * np.pi * t / 8)
x = x + 0.1 * rng.standard_normal(96)
batch = x[None, None, :]

energy = spectral_energy(batch)
print("strongest bins:", np.argsort(energy)[::-1][:4])

prior = extract_prior(batch, 2)
for f, p, e in zip(prior.top_freqs, prior.periods, prior.top_energies):
    print(f"frequency {f:2d} -> period {p:2d}  (energy {e:.3f})")

# after a stride-2 downsampling the same prior is reused at half the period
print("rescaled for stride 2:", prior.rescaled(2).periods)
