"""Joint bilinear estimator: reductions, loop reference, pinning, quality."""

import numpy as np
import pytest

import reference_impl as ref
from voxisac import (
    BilinearEstimator,
    DampingConfig,
    EnvironmentEstimator,
    GabpConfig,
    StopRule,
    SymbolEstimator,
    get_constellation,
    run_bi_isac,
)
from voxisac.gabp import bernoulli_mse


def random_instance(rng, nv=2, m=3, nu=2, n_pilot=2, n_data=2, snr_db=12.0, e_v=0.25):
    c = get_constellation("4qam")
    v = (rng.random(nv) < e_v).astype(float)
    h = (rng.standard_normal((m, nu)) + 1j * rng.standard_normal((m, nu))) / np.sqrt(2)
    a = (rng.standard_normal((m, nv)) + 1j * rng.standard_normal((m, nv))) / np.sqrt(2)
    b = (rng.standard_normal((nv, nu)) + 1j * rng.standard_normal((nv, nu))) / np.sqrt(2)
    x = c.random_symbols((nu, n_pilot + n_data), rng)
    g = h + (a * v) @ b
    n0 = 10.0 ** (-snr_db / 10.0)
    t = n_pilot + n_data
    w = np.sqrt(n0 / 2) * (rng.standard_normal((m, t)) + 1j * rng.standard_normal((m, t)))
    y = g @ x + w
    return y, h, a, b, x, v, n0, c


def config(eta_v=0.9, eta_x=0.5, iters=100, variance_mode="coherent"):
    return GabpConfig(
        damping=DampingConfig(eta_v=eta_v, eta_x=eta_x),
        stop=StopRule(max_iterations=iters),
        variance_mode=variance_mode,
    )


class TestAgainstLoopReference:
    @pytest.mark.parametrize("variance_mode", ["coherent", "incoherent"])
    def test_full_sweep_matches(self, variance_mode):
        rng = np.random.default_rng(61)
        for trial in range(5):
            y, h, a, b, x, v, n0, c = random_instance(rng, nv=2, nu=1, m=2, n_pilot=1, n_data=2)
            e_v, eta_v, eta_x = 0.25, 0.6, 0.4
            est = BilinearEstimator(
                y, h, a, b, x[:, :1], n0, e_v, c, config(eta_v, eta_x, variance_mode=variance_mode)
            )
            state = est.initialize()
            # Randomize the committed state to exercise every term.
            state.env.replica = rng.random(state.env.replica.shape)
            state.env.mse = bernoulli_mse(state.env.replica, e_v)
            data = state.sym.replica[:, :, 1:]
            state.sym.replica[:, :, 1:] = 0.4 * (
                rng.standard_normal(data.shape) + 1j * rng.standard_normal(data.shape)
            )
            state.sym.mse[:, :, 1:] = rng.uniform(0.1, 1.0, data.shape)
            v_rep0, v_mse0 = state.env.replica.copy(), state.env.mse.copy()
            x_rep0, x_mse0 = state.sym.replica.copy(), state.sym.mse.copy()
            est.iterate(state)
            (want_v, want_vm), (want_x, want_xm) = ref.joint_sweep(
                y, h, a, b, n0, e_v, c.avg_power, v_rep0, v_mse0, x_rep0, x_mse0,
                n_pilot=1, eta_v=eta_v, eta_x=eta_x, variance_mode=variance_mode,
            )
            np.testing.assert_allclose(state.env.replica, want_v, atol=1e-12, rtol=1e-9)
            np.testing.assert_allclose(state.env.mse, want_vm, atol=1e-12, rtol=1e-9)
            np.testing.assert_allclose(state.sym.replica, want_x, atol=1e-12, rtol=1e-9)
            np.testing.assert_allclose(state.sym.mse, want_xm, atol=1e-12, rtol=1e-9)


class TestReductions:
    def test_all_symbols_pinned_equals_environment_module(self):
        # Frame declared all-pilot: symbol edges pinned to the truth with
        # zero MSE.  Every sweep must match the known-symbol module exactly.
        rng = np.random.default_rng(62)
        for trial in range(50):
            nv = int(rng.integers(1, 4))
            nu = int(rng.integers(1, 3))
            m = int(rng.integers(2, 4))
            n_data = int(rng.integers(1, 3))
            y, h, a, b, x, v, n0, c = random_instance(
                rng, nv=nv, nu=nu, m=m, n_pilot=2, n_data=n_data
            )
            cfg = config(eta_v=0.9, eta_x=0.5)
            bi = BilinearEstimator(y, h, a, b, x, n0, 0.25, c, cfg)  # pin all slots
            lin = EnvironmentEstimator(y, h, a, b, x, n0, 0.25, cfg)
            bi_state = bi.initialize()
            lin_state = lin.initialize()
            for _ in range(3):
                bi.iterate(bi_state)
                lin.iterate(lin_state)
                np.testing.assert_allclose(
                    bi_state.env.replica, lin_state.replica, atol=1e-12, rtol=1e-9
                )
                np.testing.assert_allclose(
                    bi_state.env.mse, lin_state.mse, atol=1e-12, rtol=1e-9
                )
            np.testing.assert_allclose(
                bi.finalize(bi_state).environment.soft,
                lin.consensus(lin_state).soft,
                atol=1e-12, rtol=1e-9,
            )

    def test_environment_pinned_equals_symbol_module(self):
        # Environment replicas pinned to the truth with zero MSE: one sweep's
        # symbol messages must match the known-environment module exactly.
        rng = np.random.default_rng(63)
        for trial in range(50):
            nv = int(rng.integers(1, 4))
            nu = int(rng.integers(1, 3))
            m = int(rng.integers(2, 5))
            y, h, a, b, x, v, n0, c = random_instance(
                rng, nv=nv, nu=nu, m=m, n_pilot=2, n_data=3
            )
            cfg = config(eta_v=0.9, eta_x=0.5)
            g = h + (a * v) @ b
            bi = BilinearEstimator(y, h, a, b, x[:, :2], n0, 0.25, c, cfg)
            bi_state = bi.initialize(environment_replicas=v, environment_mse=0.0)
            lin = SymbolEstimator(y[:, 2:], g, n0, c, cfg)
            lin_state = lin.initialize()
            bi.iterate(bi_state)
            lin.iterate(lin_state)
            np.testing.assert_allclose(
                bi_state.sym.replica[:, :, 2:], lin_state.replica, atol=1e-12, rtol=1e-9
            )
            np.testing.assert_allclose(
                bi_state.sym.mse[:, :, 2:], lin_state.mse, atol=1e-12, rtol=1e-9
            )

    def test_empty_prior_reduces_to_los_symbol_detection(self):
        # Zero occupancy prior pins the environment to zeros, so the joint
        # estimator becomes symbol detection through the direct channel.
        rng = np.random.default_rng(64)
        y, h, a, b, x, v, n0, c = random_instance(rng, nv=3, e_v=0.0)
        cfg = config()
        bi = BilinearEstimator(y, h, a, b, x[:, :2], n0, 0.0, c, cfg)
        bi_state = bi.initialize()
        assert np.all(bi_state.env.replica == 0) and np.all(bi_state.env.mse == 0)
        lin = SymbolEstimator(y[:, 2:], h, n0, c, cfg)
        lin_state = lin.initialize()
        bi.iterate(bi_state)
        lin.iterate(lin_state)
        np.testing.assert_allclose(bi_state.sym.replica[:, :, 2:], lin_state.replica, atol=1e-12)


class TestPilotPins:
    def test_pins_bit_identical_across_iterations(self):
        rng = np.random.default_rng(65)
        y, h, a, b, x, v, n0, c = random_instance(rng, n_pilot=2, n_data=3)
        est = BilinearEstimator(y, h, a, b, x[:, :2], n0, 0.25, c, config(iters=10))
        state = est.initialize()
        pins = state.sym.replica[:, :, :2].copy()
        for i in range(10):
            est.iterate(state, i)
            assert np.array_equal(state.sym.replica[:, :, :2], pins)
            assert np.all(state.sym.mse[:, :, :2] == 0.0)

    def test_init_moments(self):
        rng = np.random.default_rng(66)
        y, h, a, b, x, v, n0, c = random_instance(rng, n_pilot=2, n_data=3)
        est = BilinearEstimator(y, h, a, b, x[:, :2], n0, 0.015, c)
        state = est.initialize()
        np.testing.assert_allclose(state.env.replica, 0.015)
        np.testing.assert_allclose(state.env.mse, 0.015 - 0.015**2)
        assert np.all(state.sym.replica[:, :, 2:] == 0)
        np.testing.assert_allclose(state.sym.mse[:, :, 2:], c.avg_power)
        np.testing.assert_allclose(state.sym.replica[:, :, :2], np.broadcast_to(x[:, None, :2], (2, 3, 2)))


class TestInvariants:
    def test_conditional_variances_at_least_noise(self):
        rng = np.random.default_rng(67)
        y, h, a, b, x, v, n0, c = random_instance(rng, n_pilot=2, n_data=3)
        for mode in ("coherent", "incoherent"):
            est = BilinearEstimator(y, h, a, b, x[:, :2], n0, 0.25, c,
                                    config(variance_mode=mode))
            state = est.initialize()
            for i in range(5):
                est.iterate(state, i)
                assert np.all(state.env.cond_var >= n0)
                assert np.all(state.sym.cond_var >= n0)

    def test_replica_change_settles_with_damping(self):
        # Median replica change over seeds must decay between the first and
        # last stretch of iterations under the default damping.
        changes = []
        for seed in range(20):
            rng = np.random.default_rng(100 + seed)
            y, h, a, b, x, v, n0, c = random_instance(
                rng, nv=8, nu=2, m=4, n_pilot=2, n_data=8, snr_db=15.0, e_v=0.1
            )
            res = run_bi_isac(y, h, a, b, x[:, :2], n0, 0.1, c,
                              config(eta_v=0.9, eta_x=0.5, iters=40))
            changes.append(res.replica_changes)
        changes = np.array(changes)
        early = np.median(changes[:, :10], axis=0).mean()
        late = np.median(changes[:, -10:], axis=0).mean()
        assert late < early


class TestJointQuality:
    def test_high_snr_tiny_instance_agreement(self):
        # Joint hard decisions must recover the truth in nearly all trials
        # at 20 dB on a well-determined tiny instance.
        rng = np.random.default_rng(68)
        hits = 0
        trials = 60
        for _ in range(trials):
            y, h, a, b, x, v, n0, c = random_instance(
                rng, nv=2, nu=1, m=4, n_pilot=2, n_data=2, snr_db=20.0
            )
            res = run_bi_isac(y, h, a, b, x[:, :2], n0, 0.25, c, config())
            ok = np.array_equal(res.environment.hard, v) and np.array_equal(
                res.symbols.hard, x[:, 2:]
            )
            hits += ok
        assert hits / trials >= 0.9
