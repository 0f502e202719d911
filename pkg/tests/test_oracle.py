"""Exhaustive inference: MAP, marginals, guards, tiebreaks."""

import numpy as np
import pytest

from voxisac import exact_joint_map, exact_marginals, get_constellation


def tiny_instance(rng, nv=2, m=4, nu=1, n_pilot=2, n_data=2, snr_db=20.0, e_v=0.25):
    c = get_constellation("4qam")
    v = (rng.random(nv) < e_v).astype(float)
    h = (rng.standard_normal((m, nu)) + 1j * rng.standard_normal((m, nu))) / np.sqrt(2)
    a = (rng.standard_normal((m, nv)) + 1j * rng.standard_normal((m, nv))) / np.sqrt(2)
    b = (rng.standard_normal((nv, nu)) + 1j * rng.standard_normal((nv, nu))) / np.sqrt(2)
    x = c.random_symbols((nu, n_pilot + n_data), rng)
    g = h + (a * v) @ b
    n0 = 0.0 if np.isinf(snr_db) else 10.0 ** (-snr_db / 10.0)
    t = n_pilot + n_data
    w = np.sqrt(n0 / 2) * (rng.standard_normal((m, t)) + 1j * rng.standard_normal((m, t))) if n0 else 0.0
    return g @ x + w, h, a, b, x, v, n0, c


class TestJointMap:
    def test_noiseless_identifiable_instance_recovers_truth(self):
        rng = np.random.default_rng(80)
        for _ in range(20):
            y, h, a, b, x, v, n0, c = tiny_instance(rng, snr_db=np.inf)
            v_map, xd_map = exact_joint_map(y, h, a, b, x[:, :2], c, 0.25, 0.0)
            assert np.array_equal(v_map, v)
            assert np.array_equal(xd_map, x[:, 2:])

    def test_tie_breaks_to_lowest_index(self):
        # A zero observation with a zero channel makes every hypothesis
        # equally likely: the all-empty environment and the first symbol
        # tuple must win.
        c = get_constellation("4qam")
        y = np.zeros((2, 2), complex)
        h = np.zeros((2, 1), complex)
        a = np.zeros((2, 2), complex)
        b = np.zeros((2, 1), complex)
        pilots = c.points[[0]].reshape(1, 1)
        v_map, xd_map = exact_joint_map(y, h, a, b, pilots, c, 0.5, 1.0)
        assert np.array_equal(v_map, np.zeros(2))
        assert xd_map[0, 0] == c.points[0]

    def test_size_guard(self):
        c = get_constellation("4qam")
        rng = np.random.default_rng(81)
        y = np.zeros((2, 3), complex)
        with pytest.raises(ValueError):
            exact_joint_map(
                y, np.zeros((2, 1), complex), np.zeros((2, 11), complex),
                np.zeros((11, 1), complex), np.zeros((1, 1), complex), c, 0.5, 1.0,
            )
        with pytest.raises(ValueError):
            exact_joint_map(
                np.zeros((2, 10), complex), np.zeros((2, 1), complex),
                np.zeros((2, 2), complex), np.zeros((2, 1), complex),
                np.zeros((1, 1), complex), c, 0.5, 1.0,
            )


class TestMarginals:
    def test_marginals_normalize(self):
        rng = np.random.default_rng(82)
        y, h, a, b, x, v, n0, c = tiny_instance(rng, snr_db=10.0)
        res = exact_marginals(y, h, a, b, x[:, :2], c, 0.25, n0)
        assert np.all((res.occupancy >= 0) & (res.occupancy <= 1))
        np.testing.assert_allclose(res.symbols.sum(axis=-1), 1.0, atol=1e-9)

    def test_symmetric_instance_marginal_is_half(self):
        # Zero channels carry no evidence: the occupancy posterior equals the
        # prior, and a 0.5 prior gives marginal 0.5.
        c = get_constellation("4qam")
        y = np.zeros((2, 2), complex)
        res = exact_marginals(
            y, np.zeros((2, 1), complex), np.zeros((2, 2), complex),
            np.zeros((2, 1), complex), c.points[[0]].reshape(1, 1), c, 0.5, 1.0,
        )
        np.testing.assert_allclose(res.occupancy, 0.5, atol=1e-12)
        np.testing.assert_allclose(res.symbols, 0.25, atol=1e-12)

    def test_vanishing_noise_concentrates_on_map(self):
        rng = np.random.default_rng(83)
        y, h, a, b, x, v, n0, c = tiny_instance(rng, snr_db=np.inf)
        v_map, xd_map = exact_joint_map(y, h, a, b, x[:, :2], c, 0.25, 0.0)
        res = exact_marginals(y, h, a, b, x[:, :2], c, 0.25, 0.0)
        np.testing.assert_allclose(res.occupancy, v_map, atol=1e-9)
        picked = c.points[np.argmax(res.symbols, axis=-1)]
        assert np.array_equal(picked, xd_map)

    def test_map_is_argmax_of_enumeration(self):
        # Cross-check the MAP against an explicit maximization over the
        # enumerated posterior of every (environment, symbols) hypothesis.
        rng = np.random.default_rng(84)
        import itertools

        y, h, a, b, x, v, n0, c = tiny_instance(rng, nv=2, n_data=1, snr_db=8.0)
        v_map, xd_map = exact_joint_map(y, h, a, b, x[:, :2], c, 0.25, n0)
        best, best_cost = None, np.inf
        for bits in itertools.product([0.0, 1.0], repeat=2):
            hyp_v = np.array(bits)
            g = h + (a * hyp_v) @ b
            for sym in c.points:
                xd = np.array([[sym]])
                full = np.concatenate([x[:, :2], xd], axis=1)
                resid = y - g @ full
                prior = np.sum(np.log(np.where(hyp_v == 1, 0.25, 0.75)))
                cost = np.sum(np.abs(resid) ** 2) / n0 - prior
                if cost < best_cost:
                    best_cost, best = cost, (hyp_v, xd)
        assert np.array_equal(v_map, best[0])
        assert np.array_equal(xd_map, best[1])
