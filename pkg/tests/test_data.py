import numpy as np
import pytest
from statsmodels.tsa.stattools import adfuller

from canet import synthetic
from canet.data import (
    NoiseSpec,
    SeriesFrame,
    adf_statistic,
    add_noise,
    chrono_split,
    destandardize,
    fit_standardizer,
    frame_adf,
    frame_from_array,
    iter_batches,
    load_csv,
    schwert_lag,
    standardize,
    window,
)
from canet.errors import ConfigError, DataError

FIXTURES = __import__("pathlib").Path(__file__).parent / "fixtures"


class TestLoadCsv:
    def test_basic(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("a,b\n1,2\n3,4\n5,6\n7,8\n9,10\n")
        f = load_csv(p)
        assert f.names == ("a", "b") and f.values.shape == (2, 5)
        np.testing.assert_array_equal(f.values[1], [2, 4, 6, 8, 10])
        assert f.timestamps is None

    def test_blank_cell_names_row_and_column(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("a,b\n1,2\n3,\n")
        with pytest.raises(DataError, match=r"row 3.*'b'"):
            load_csv(p)

    def test_ragged_row(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("a,b\n1,2\n3\n")
        with pytest.raises(DataError, match="row 3"):
            load_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(tmp_path / "nope.csv")

    def test_date_column_becomes_timestamps(self):
        f = load_csv(FIXTURES / "ett_small.csv")
        assert f.names == ("HUFL", "HULL", "OT")
        assert f.length == 30 and len(f.timestamps) == 30

    def test_values_read_only(self):
        f = frame_from_array(np.zeros((1, 4)))
        with pytest.raises(ValueError):
            f.values[0, 0] = 1


class TestSplits:
    @pytest.mark.parametrize("t,sizes", [(100, (70, 10, 20)), (966, (676, 96, 194)), (10, (7, 1, 2))])
    def test_sizes(self, t, sizes):
        f = frame_from_array(np.arange(float(t))[None])
        parts = chrono_split(f)
        assert tuple(p.length for p in parts) == sizes
        np.testing.assert_array_equal(np.concatenate([p.values for p in parts], axis=1), f.values)

    def test_too_short(self):
        with pytest.raises(DataError):
            chrono_split(frame_from_array(np.zeros((1, 9))))

    def test_standardize_uses_train_stats(self, rng):
        f = frame_from_array(rng.standard_normal((2, 50)) * 3 + 1)
        train, val, _ = chrono_split(f)
        stats = fit_standardizer(train)
        z = standardize(train, stats).values
        np.testing.assert_allclose(z.mean(axis=1), 0, atol=1e-12)
        np.testing.assert_allclose(z.std(axis=1), 1, atol=1e-12)
        np.testing.assert_allclose(destandardize(standardize(val, stats).values, stats), val.values, atol=1e-12)

    def test_constant_channel_floor(self):
        stats = fit_standardizer(frame_from_array(np.full((1, 20), 3.0)))
        assert stats[1][0] == 1e-5


class TestWindow:
    def test_count_and_contents(self):
        w = window(np.arange(10.0)[None], 3, 2)
        assert len(w) == 6
        np.testing.assert_array_equal(w.inputs[0, 0], [0, 1, 2])
        np.testing.assert_array_equal(w.targets[0, 0], [3, 4])
        np.testing.assert_array_equal(w.inputs[-1, 0], [5, 6, 7])
        np.testing.assert_array_equal(w.targets[-1, 0], [8, 9])

    def test_too_short_warns(self):
        with pytest.warns(UserWarning):
            w = window(np.zeros((2, 4)), 3, 2)
        assert len(w) == 0 and w.inputs.shape == (0, 2, 3)

    def test_bad_sizes(self):
        with pytest.raises(ConfigError):
            window(np.zeros((1, 10)), 0, 2)

    def test_batches_cover_everything(self, rng):
        w = window(np.arange(40.0)[None], 5, 2)
        seen = np.concatenate([b.origins for b in iter_batches(w, 7, rng)])
        assert sorted(seen) == list(w.origins)


class TestNoise:
    def test_zero_level_is_copy(self):
        x = np.ones(5)
        y = add_noise(x, NoiseSpec(0.0))
        np.testing.assert_array_equal(x, y)
        assert y is not x

    def test_scaled_draw(self):
        x = np.zeros(20_000)
        a = add_noise(x, NoiseSpec(0.3, seed=5))
        b = add_noise(x, NoiseSpec(0.1, seed=5))
        np.testing.assert_allclose(a, 3 * b)
        assert abs(a.std() - 0.3) < 0.01

    def test_negative_level(self):
        with pytest.raises(ConfigError):
            NoiseSpec(-0.1)


class TestAdf:
    def test_lag_rule(self):
        assert schwert_lag(1000) == 21
        assert schwert_lag(100) == 12

    def test_white_noise(self):
        assert adf_statistic(synthetic.white_noise(1000, seed=0)) < -10

    def test_random_walk(self):
        assert adf_statistic(synthetic.random_walk(1000, seed=0)) > -3

    def test_translation_invariant(self, rng):
        x = rng.standard_normal(300).cumsum()
        assert adf_statistic(x + 100) == pytest.approx(adf_statistic(x), abs=1e-8)

    @pytest.mark.parametrize("seed,t,k", [(0, 200, None), (1, 500, 3), (2, 1000, None), (3, 60, 0)])
    def test_fixed_lag_matches_statsmodels(self, seed, t, k):
        x = np.random.default_rng(seed).standard_normal(t).cumsum() * 0.3 + np.random.default_rng(seed + 9).standard_normal(t)
        lag = schwert_lag(t) if k is None else k
        ref = adfuller(x, maxlag=lag, autolag=None, regression="c")[0]
        assert adf_statistic(x, lags=lag) == pytest.approx(ref, abs=1e-8)

    @pytest.mark.parametrize("seed,t", [(0, 1000), (1, 200), (2, 60), (3, 500)])
    def test_selected_lag_matches_statsmodels(self, seed, t):
        x = np.random.default_rng(seed).standard_normal(t).cumsum() * 0.3 + np.random.default_rng(seed + 9).standard_normal(t)
        ref = adfuller(x, maxlag=schwert_lag(t), autolag="AIC", regression="c")[0]
        assert adf_statistic(x) == pytest.approx(ref, abs=1e-8)

    def test_too_short(self):
        with pytest.raises(DataError):
            adf_statistic(np.arange(19.0))

    def test_constant_series(self):
        with pytest.raises(DataError):
            adf_statistic(np.ones(100))

    def test_frame_mean(self):
        a, b = synthetic.white_noise(400, seed=1), synthetic.random_walk(400, seed=2)
        f = SeriesFrame(("a", "b"), np.stack([a, b]))
        assert frame_adf(f) == pytest.approx((adf_statistic(a) + adf_statistic(b)) / 2)
