"""Error-rate metrics and aggregation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voxisac import MetricReport, ber, ber_symbols, get_constellation, mse_v, ser, voer
from voxisac.errors import ShapeError


class TestVoer:
    def test_perfect_estimate(self):
        v = np.array([0.0, 1.0, 0.0, 1.0])
        assert voer(v, v) == 0.0

    def test_blind_empty_equals_sparsity(self):
        rng = np.random.default_rng(90)
        v = (rng.random(512) < 0.1).astype(float)
        assert voer(v, np.zeros(512)) == pytest.approx(np.count_nonzero(v) / 512)

    def test_complement_is_one(self):
        v = np.array([0.0, 1.0, 1.0, 0.0])
        assert voer(v, 1.0 - v) == 1.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            voer(np.zeros(3), np.zeros(4))


class TestBerSer:
    def test_identical_and_complement(self):
        bits = np.array([[0, 1], [1, 0]])
        assert ber(bits, bits) == 0.0
        assert ber(bits, 1 - bits) == 1.0

    def test_single_flip_of_eight(self):
        bits = np.zeros((4, 2), dtype=int)
        est = bits.copy()
        est[2, 1] = 1
        assert ber(bits, est) == pytest.approx(0.125)

    def test_all_symbols_wrong(self):
        c = get_constellation("4qam")
        sym = np.full((2, 3), c.points[0])
        assert ser(sym, np.full((2, 3), c.points[1])) == 1.0

    def test_gray_ber_ser_bounds(self):
        # BER <= SER and SER <= BER * bits-per-symbol for Gray labels.
        c = get_constellation("4qam")
        rng = np.random.default_rng(91)
        for _ in range(50):
            true = c.random_symbols(200, rng)
            noisy = true.copy()
            flip = rng.random(200) < 0.2
            noisy[flip] = c.random_symbols(int(flip.sum()), rng)
            s = ser(true, noisy)
            b = ber_symbols(true, noisy, c)
            assert b <= s + 1e-12
            assert s <= b * c.bits_per_symbol + 1e-12


class TestMse:
    def test_identical_is_zero(self):
        v = np.array([0.2, 0.8])
        assert mse_v(v, v) == 0.0

    def test_prior_mean_estimate_matches_variance(self):
        rng = np.random.default_rng(92)
        e_v = 0.3
        v = (rng.random(200_000) < e_v).astype(float)
        got = mse_v(v, np.full_like(v, e_v))
        assert got == pytest.approx(e_v * (1 - e_v), rel=0.01)


class TestReport:
    def test_mean_and_half_width(self):
        report = MetricReport.from_samples("voer", [0.0, 0.5, 1.0, 0.5])
        assert report.mean == pytest.approx(0.5)
        assert report.trials == 4
        expected_hw = 1.959963984540054 * np.std([0.0, 0.5, 1.0, 0.5], ddof=1) / 2.0
        assert report.half_width == pytest.approx(expected_hw)

    def test_single_trial_zero_width(self):
        report = MetricReport.from_samples("ber", [0.25])
        assert report.half_width == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            MetricReport.from_samples("ber", [])

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=50))
    def test_rates_stay_in_unit_interval(self, values):
        report = MetricReport.from_samples("voer", values)
        assert 0.0 <= report.mean <= 1.0
        assert report.half_width >= 0.0
