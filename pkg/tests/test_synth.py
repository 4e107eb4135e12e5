import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anchor.errors import ConfigError, ValidationError
from anchor.numerics import make_rng
from anchor.spectral import extract_prior
from anchor.synth import (DEFAULT_FRACTIONAL_PERIODS, Component, SignalSpec, generate,
                          inverse_standardize, load_csv, sliding_windows, theoretical_offsets)


class TestGenerate:
    def test_fractional_decomposition(self):
        gen = generate(SignalSpec("fractional_sine", 200, (Component(10.5),)))
        assert gen.integer_periods == (10,)
        assert gen.theoretical_offsets[10.5] == [-0.5, 0.0, 0.5]
        assert theoretical_offsets(10.5, 5) == [-1.0, -0.5, 0.0, 0.5, 1.0]

    def test_tone_matches_formula(self):
        gen = generate(SignalSpec("multi_tone", 50, ((7.0, 2.0, 0.3), (3.5, 0.5, 1.0))))
        t = np.arange(50)
        expected = 2.0 * np.sin(2 * np.pi * t / 7 + 0.3) + 0.5 * np.sin(2 * np.pi * t / 3.5 + 1.0)
        np.testing.assert_allclose(gen.batch.data[0, 0], expected, atol=1e-14)

    def test_cross_module_period(self):
        gen = generate(SignalSpec("fractional_sine", 96, (Component(24.0),)))
        assert extract_prior(gen.batch, 1).periods == (24,)

    @given(st.integers(0, 2**32 - 1))
    def test_deterministic(self, seed):
        spec = SignalSpec("multi_tone", 64, ((8.0, 1.0, 0.0),), noise_std=0.3, seed=seed,
                          channels=2)
        np.testing.assert_array_equal(generate(spec).batch.data, generate(spec).batch.data)

    def test_seed_changes_noise(self):
        a = generate(SignalSpec("multi_tone", 64, ((8.0,),), noise_std=0.3, seed=1))
        b = generate(SignalSpec("multi_tone", 64, ((8.0,),), noise_std=0.3, seed=2))
        assert not np.array_equal(a.batch.data, b.batch.data)

    def test_trend(self):
        gen = generate(SignalSpec("trend_plus_season", 40, ((10.0, 0.0),), trend=0.5))
        np.testing.assert_allclose(gen.batch.data[0, 0], 0.5 * np.arange(40), atol=1e-14)

    def test_anomalies(self):
        gen = generate(SignalSpec("anomaly_injected", 60, ((12.0,),),
                                  anomaly_positions=(5, 30), anomaly_magnitudes=(3.0, -2.0)))
        clean = np.sin(2 * np.pi * np.arange(60) / 12)
        np.testing.assert_allclose(gen.batch.data[0, 0, [5, 30]], clean[[5, 30]] + [3.0, -2.0])
        assert np.flatnonzero(gen.anomaly_labels).tolist() == [5, 30]

    def test_pulse_train(self):
        spec = SignalSpec("pulse_train", 200, ((10.4, 1.0, 0.0),), seed=3)
        x = generate(spec).batch.data[0, 0]
        assert np.all(x >= 0) and x.max() <= 1.0
        peaks = [x[int(round(10.4 * k))] for k in range(1, 8)]
        # heights follow the logistic map, so consecutive peaks are not constant
        assert np.ptp(peaks) > 0.1

    def test_metadata_json(self):
        gen = generate(SignalSpec("fractional_sine", 100, ((12.25,),)))
        meta = json.loads(json.dumps(gen.metadata()))
        assert meta["integer_periods"] == [12]
        assert meta["theoretical_offsets"]["12.25"] == [-0.25, 0.0, 0.25]

    def test_short_signal_warns(self):
        with pytest.warns(UserWarning, match="cycles"):
            SignalSpec("fractional_sine", 30, ((10.5,),))

    @pytest.mark.parametrize("kw", [dict(kind="square"), dict(components=()),
                                    dict(components=((1.0,),)), dict(length=3),
                                    dict(noise_std=-1.0), dict(anomaly_positions=(1,)),
                                    dict(kind="fractional_sine", components=((5.5,), (6.5,))),
                                    dict(kernel_size=4),
                                    dict(anomaly_positions=(99,), anomaly_magnitudes=(1.0,))])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            SignalSpec(**{"kind": "multi_tone", "length": 40, "components": ((8.0,),), **kw})

    def test_default_periods_fractional(self):
        assert len(DEFAULT_FRACTIONAL_PERIODS) == 9
        assert all(p != int(p) for p in DEFAULT_FRACTIONAL_PERIODS)


class TestCsv:
    def write(self, tmp_path, text, name="data.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    def test_shape(self, tmp_path):
        data = make_rng(0).standard_normal((100, 3))
        path = tmp_path / "d.csv"
        np.savetxt(path, data, delimiter=",")
        batch, meta = load_csv(path)
        assert batch.shape == (1, 3, 100)
        np.testing.assert_allclose(batch.data[0], data.T, rtol=1e-15)
        assert meta.names is None

    def test_header(self, tmp_path):
        path = self.write(tmp_path, "a,b\n1,2\n3,4\n")
        batch, meta = load_csv(path, header=True)
        assert batch.shape == (1, 2, 2)
        assert meta.names == ["a", "b"]

    def test_ragged_names_row(self, tmp_path):
        path = self.write(tmp_path, "1,2\n3,4\n5\n")
        with pytest.raises(ValidationError, match="row 3"):
            load_csv(path)

    def test_non_numeric_names_cell(self, tmp_path):
        path = self.write(tmp_path, "x,y\n1,2\n3,oops\n")
        with pytest.raises(ValidationError, match="row 3, column 2"):
            load_csv(path, header=True)

    def test_empty(self, tmp_path):
        with pytest.raises(ValidationError):
            load_csv(self.write(tmp_path, ""))
        with pytest.raises(ValidationError):
            load_csv(self.write(tmp_path, "a,b\n", "h.csv"), header=True)

    def test_missing(self, tmp_path):
        with pytest.raises(ValidationError, match="nope.csv"):
            load_csv(tmp_path / "nope.csv")

    def test_standardize_round_trip(self, tmp_path):
        data = make_rng(1).normal(5.0, 3.0, size=(80, 2))
        path = tmp_path / "d.csv"
        np.savetxt(path, data, delimiter=",", fmt="%.17g")
        batch, meta = load_csv(path, standardize=True)
        np.testing.assert_allclose(batch.data.mean(axis=2), 0.0, atol=1e-12)
        np.testing.assert_allclose(batch.data.std(axis=2), 1.0, atol=1e-12)
        np.testing.assert_allclose(inverse_standardize(batch.data, meta)[0], data.T, atol=1e-10)


class TestWindows:
    def test_shapes_and_alignment(self):
        series = np.arange(20.0)[None]
        X, Y = sliding_windows(series, 5, 2, stride=3)
        assert X.shape == (5, 1, 5) and Y.shape == (5, 1, 2)
        np.testing.assert_array_equal(X[1, 0], [3, 4, 5, 6, 7])
        np.testing.assert_array_equal(Y[1, 0], [8, 9])

    def test_too_short(self):
        with pytest.raises(ValidationError):
            sliding_windows(np.zeros((1, 5)), 4, 2)
