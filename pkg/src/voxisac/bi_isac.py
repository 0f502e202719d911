"""Bilinear GaBP: joint estimation of the environment and the data symbols.

Messages flow on a tripartite factor graph: every received entry (m, t) is a
factor connected to all n_voxels environment variables and to that slot's
n_ue symbol variables.  Pilot-slot symbol edges are pinned to their known
values with zero MSE and are never recomputed; environment edges span all
slots.  Each sweep jointly cancels interference using both replica sets and
propagates both families' uncertainties through the conditional variances.

Effective per-edge gains (built from the counterpart family's replicas):

    environment edge (k; m, t):  a[m,k] * chat[k,m,t],  chat = sum_u b[k,u] xhat[u,m,t]
    symbol edge      (n; m, t):  ghat[n,m,t] = h[m,n] + sum_i a[m,i] vhat[i,m,t] b[i,n]

With one family pinned to the truth at zero MSE, a sweep reduces exactly to
the corresponding known-input linear module (in the default "coherent"
variance mode, which keeps the cross products of summed gains; the
"incoherent" mode drops them, keeping per-entry magnitude products only).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .gabp import (
    EdgeState,
    GabpConfig,
    bernoulli_mse,
    damp,
    denoise_bernoulli,
)
from .linear_v import EnvironmentConsensus
from .linear_x import SymbolConsensus, _denoise_symbols
from .signals import Constellation


@dataclass
class BiState:
    """Joint edge state: environment edges over all slots, symbol edges with pilot pins."""

    env: EdgeState
    sym: EdgeState
    n_pilot: int


@dataclass
class BiResult:
    environment: EnvironmentConsensus
    symbols: SymbolConsensus        # data slots only
    state: BiState
    replica_changes: list[float] = field(default_factory=list)


class BilinearEstimator:
    """Message-passing machinery for one joint (Y, H, A, B, X_P) instance."""

    def __init__(
        self,
        received: np.ndarray,
        los: np.ndarray,
        voxel_to_ap: np.ndarray,
        ue_to_voxel: np.ndarray,
        pilots: np.ndarray,
        noise_var: float,
        occupancy_prob: float,
        constellation: Constellation,
        config: GabpConfig | None = None,
    ):
        self.config = config or GabpConfig()
        self.noise_var = float(noise_var)
        self.occupancy_prob = float(occupancy_prob)
        self.constellation = constellation
        self.received = received
        self.los = los
        self.voxel_to_ap = voxel_to_ap
        self.ue_to_voxel = ue_to_voxel
        self.pilots = pilots
        self.n_rx, self.n_slots = received.shape
        self.n_ue = los.shape[1]
        self.n_voxels = voxel_to_ap.shape[1]
        self.n_pilot = pilots.shape[1]
        if los.shape[0] != self.n_rx or voxel_to_ap.shape[0] != self.n_rx:
            raise ShapeError("H/A row count must match the received matrix")
        if ue_to_voxel.shape != (self.n_voxels, self.n_ue):
            raise ShapeError("B must be (n_voxels, n_ue)")
        if pilots.shape[0] != self.n_ue or self.n_pilot > self.n_slots:
            raise ShapeError(f"pilot block {pilots.shape} incompatible with Y {received.shape}")
        # Constants reused every sweep.
        self._at = voxel_to_ap.T.copy()            # (n_voxels, n_rx)
        self._aat = np.abs(self._at) ** 2
        self._bb = np.abs(ue_to_voxel) ** 2        # (n_voxels, n_ue)
        self._ht = los.T.copy()                    # (n_ue, n_rx)
        self._hht = np.abs(self._ht) ** 2
        # Prior second moments entering the self-gain uncertainty terms.
        self._env_power = occupancy_prob           # E[|v|^2] for binary occupancy
        self._sym_power = constellation.avg_power

    # -- state ----------------------------------------------------------------

    def initialize(self, environment_replicas=None, environment_mse=None) -> BiState:
        """Pilot-pinned symbol edges, prior-mean data and environment edges.

        ``environment_replicas`` (vector or full edge tensor) warm-starts or,
        together with ``environment_mse=0``, pins the environment for
        reduction checks.
        """
        v_shape = (self.n_voxels, self.n_rx, self.n_slots)
        if environment_replicas is None:
            v_rep = np.full(v_shape, self.occupancy_prob, dtype=float)
        else:
            v_rep = np.asarray(environment_replicas, dtype=float)
            if v_rep.ndim == 1:
                v_rep = np.broadcast_to(v_rep[:, np.newaxis, np.newaxis], v_shape).copy()
            elif v_rep.shape != v_shape:
                raise ShapeError(f"environment replicas must be ({self.n_voxels},) or {v_shape}")
            else:
                v_rep = v_rep.copy()
        if environment_mse is None:
            v_mse = bernoulli_mse(v_rep, self.occupancy_prob)
        else:
            v_mse = np.broadcast_to(np.asarray(environment_mse, dtype=float), v_shape).copy()
        x_shape = (self.n_ue, self.n_rx, self.n_slots)
        x_rep = np.zeros(x_shape, dtype=complex)
        x_mse = np.full(x_shape, self._sym_power)
        x_rep[:, :, : self.n_pilot] = self.pilots[:, np.newaxis, :]
        x_mse[:, :, : self.n_pilot] = 0.0
        return BiState(
            env=EdgeState(replica=v_rep, mse=np.ascontiguousarray(v_mse)),
            sym=EdgeState(replica=x_rep, mse=x_mse),
            n_pilot=self.n_pilot,
        )

    # -- one sweep ------------------------------------------------------------

    def _sweep_messages(self, state: BiState):
        """All per-edge messages (soft-IC residuals, variances, gains) for the state."""
        n0 = self.noise_var
        floor = max(n0, self.config.variance_floor)
        vr, vm = state.env.replica, state.env.mse
        xr, xm = state.sym.replica, state.sym.mse
        nv, nu, m, t = self.n_voxels, self.n_ue, self.n_rx, self.n_slots
        b = self.ue_to_voxel

        xr_flat = xr.reshape(nu, m * t)
        xm_flat = xm.reshape(nu, m * t)
        chat = (b @ xr_flat).reshape(nv, m, t)                 # incident replicas per factor
        q2 = (self._bb @ xm_flat).reshape(nv, m, t)            # incident MSE spread
        av = self._at[:, :, np.newaxis] * vr
        ghat = self._ht[:, :, np.newaxis] + (b.T @ av.reshape(nv, m * t)).reshape(nu, m, t)
        fv = self._at[:, :, np.newaxis] * chat                 # environment edge gains

        # Joint soft interference cancellation.
        hx = np.einsum("mu,umt->mt", self.los, xr)
        sv = (av * chat).sum(axis=0)
        ybar_v = (self.received - hx - sv)[np.newaxis, :, :] + av * chat
        sx = (ghat * xr).sum(axis=0)
        ybar_x = (self.received - sx)[np.newaxis, :, :] + ghat * xr

        # Conditional variances, propagating both families' uncertainties.
        aat3 = self._aat[:, :, np.newaxis]
        ghat2 = np.abs(ghat) ** 2
        chat2 = np.abs(chat) ** 2
        w1 = (xm * ghat2).sum(axis=0)                          # sum_u psi_x |ghat_u|^2
        c_full = (aat3 * vm * chat2).sum(axis=0)               # sum_i Aa psi_v |chat_i|^2
        d_full = (aat3 * vm * q2).sum(axis=0)                  # cross psi_v psi_x spread
        self_gain_v = self._env_power * aat3 * q2
        if self.config.variance_mode == "coherent":
            w2 = (np.conj(b) @ (xm * ghat).reshape(nu, m * t)).reshape(nv, m, t)
            nu_v = (
                self_gain_v
                + w1[np.newaxis, :, :]
                - 2.0 * np.real(np.conj(av) * w2)
                + np.abs(av) ** 2 * q2
                + c_full[np.newaxis, :, :]
                - aat3 * vm * chat2
                + d_full[np.newaxis, :, :]
                - aat3 * vm * q2
                + n0
            )
        else:
            q1 = (self._bb @ (np.abs(xr_flat) ** 2)).reshape(nv, m, t)
            hmse = np.einsum("um,umt->mt", self._hht, xm)
            own = aat3 * (vm * q1 + (np.abs(vr) ** 2 + vm) * q2)
            nu_v = self_gain_v + hmse[np.newaxis, :, :] + own.sum(axis=0)[np.newaxis, :, :] - own + n0
        np.maximum(nu_v, floor, out=nu_v)

        p = self.n_pilot
        vm_flat = (self._aat[:, :, np.newaxis] * vm).reshape(nv, m * t)
        u1 = (self._bb.T @ vm_flat).reshape(nu, m, t)          # sum_i Aa psi_v Bb[., n]
        if self.config.variance_mode == "coherent":
            v2 = (np.conj(b).T @ (self._aat[:, :, np.newaxis] * vm * chat).reshape(nv, m * t)).reshape(nu, m, t)
            nu_x = (
                self._sym_power * u1[:, :, p:]
                + w1[np.newaxis, :, p:]
                - xm[:, :, p:] * ghat2[:, :, p:]
                + c_full[np.newaxis, :, p:]
                - 2.0 * np.real(np.conj(xr[:, :, p:]) * v2[:, :, p:])
                + np.abs(xr[:, :, p:]) ** 2 * u1[:, :, p:]
                + d_full[np.newaxis, :, p:]
                - xm[:, :, p:] * u1[:, :, p:]
                + n0
            )
        else:
            u2 = (self._bb.T @ (self._aat[:, :, np.newaxis] * (np.abs(vr) ** 2 + vm)).reshape(nv, m * t)).reshape(nu, m, t)
            hmse = np.einsum("um,umt->mt", self._hht, xm)
            own_x = np.abs(xr) ** 2 * u1 + xm * u2
            term2 = hmse[np.newaxis, :, :] - self._hht[:, :, np.newaxis] * xm
            nu_x = (
                self._sym_power * u1[:, :, p:]
                + term2[:, :, p:]
                + own_x.sum(axis=0)[np.newaxis, :, p:]
                - own_x[:, :, p:]
                + n0
            )
        np.maximum(nu_x, floor, out=nu_x)
        return ybar_v, nu_v, fv, ybar_x[:, :, p:], nu_x, ghat

    def _extrinsic_env(self, evidence, precision):
        floor = self.config.variance_floor
        if self.config.exclusion == "pair":
            prec = precision.sum(axis=(1, 2))[:, np.newaxis, np.newaxis] - precision
            num = evidence.sum(axis=(1, 2))[:, np.newaxis, np.newaxis] - evidence
        else:
            prec = (
                precision.sum(axis=(1, 2))[:, np.newaxis, np.newaxis]
                - precision.sum(axis=2)[:, :, np.newaxis]
                - precision.sum(axis=1)[:, np.newaxis, :]
                + precision
            )
            num = (
                evidence.sum(axis=(1, 2))[:, np.newaxis, np.newaxis]
                - evidence.sum(axis=2)[:, :, np.newaxis]
                - evidence.sum(axis=1)[:, np.newaxis, :]
                + evidence
            )
        # Precision floored, variance left faithful (see environment module).
        prec = np.maximum(prec, floor)
        ext_var = 1.0 / prec
        return ext_var * num, ext_var

    def iterate(self, state: BiState, iteration: int = 0) -> float:
        """One synchronous sweep over both variable families; pilot pins untouched."""
        ybar_v, nu_v, fv, ybar_x, nu_x, ghat = self._sweep_messages(state)
        p = self.n_pilot

        ev_v = np.conj(fv) * ybar_v / nu_v
        pr_v = np.abs(fv) ** 2 / nu_v
        mu_v, psi_v = self._extrinsic_env(ev_v, pr_v)
        new_vr, new_vm = denoise_bernoulli(mu_v, psi_v, self.occupancy_prob)

        g_d = ghat[:, :, p:]
        ev_x = np.conj(g_d) * ybar_x / nu_x
        pr_x = np.abs(g_d) ** 2 / nu_x
        floor = self.config.variance_floor
        prec_x = np.maximum(pr_x.sum(axis=1)[:, np.newaxis, :] - pr_x, floor)
        psi_x = 1.0 / prec_x
        mu_x = psi_x * (ev_x.sum(axis=1)[:, np.newaxis, :] - ev_x)
        new_xr, new_xm = _denoise_symbols(mu_x, psi_x, self.constellation)

        eta_v = self.config.damping.eta_v
        eta_x = self.config.damping.eta_x
        old_v = state.env.replica
        old_x = state.sym.replica[:, :, p:]
        state.env.replica = damp(old_v, new_vr, eta_v)
        state.env.mse = damp(state.env.mse, new_vm, eta_v)
        state.sym.replica[:, :, p:] = damp(old_x, new_xr, eta_x)
        state.sym.mse[:, :, p:] = damp(state.sym.mse[:, :, p:], new_xm, eta_x)
        state.env.cond_var, state.env.ext_mean, state.env.ext_var = nu_v, mu_v, psi_v
        state.sym.cond_var, state.sym.ext_mean, state.sym.ext_var = nu_x, mu_x, psi_x
        state.env.check_finite(iteration, "environment")
        state.sym.check_finite(iteration, "symbol")
        change_v = float(np.mean(np.abs(state.env.replica - old_v)))
        if old_x.size:
            change_x = float(np.mean(np.abs(state.sym.replica[:, :, p:] - old_x)))
            return 0.5 * (change_v + change_x)
        return change_v

    # -- consensus ------------------------------------------------------------

    def finalize(self, state: BiState) -> BiResult:
        """Full-sum consensus for both families; data symbols projected."""
        ybar_v, nu_v, fv, ybar_x, nu_x, ghat = self._sweep_messages(state)
        floor = self.config.variance_floor
        p = self.n_pilot

        ev_v = np.conj(fv) * ybar_v / nu_v
        pr_v = np.abs(fv) ** 2 / nu_v
        prec = np.maximum(pr_v.sum(axis=(1, 2)), floor)
        var_v = 1.0 / prec
        mean_v = var_v * ev_v.sum(axis=(1, 2))
        soft_v, _ = denoise_bernoulli(mean_v, var_v, self.occupancy_prob)
        env = EnvironmentConsensus(
            mean=mean_v, var=var_v, soft=soft_v, hard=(soft_v >= 0.5).astype(float)
        )

        g_d = ghat[:, :, p:]
        ev_x = np.conj(g_d) * ybar_x / nu_x
        pr_x = np.abs(g_d) ** 2 / nu_x
        prec_x = np.maximum(pr_x.sum(axis=1), floor)
        var_x = 1.0 / prec_x
        mean_x = var_x * ev_x.sum(axis=1)
        soft_x, _ = _denoise_symbols(mean_x, var_x, self.constellation)
        sym = SymbolConsensus(
            mean=mean_x, var=var_x, soft=soft_x, hard=self.constellation.project(soft_x)
        )
        return BiResult(environment=env, symbols=sym, state=state)

    def run(self, state: BiState | None = None, monitor=None) -> BiResult:
        if state is None:
            state = self.initialize()
        changes: list[float] = []
        iteration = 0
        while True:
            change = self.iterate(state, iteration)
            changes.append(change)
            iteration += 1
            if monitor is not None:
                monitor(iteration, state)
            if self.config.stop.done(iteration, change):
                break
        result = self.finalize(state)
        result.replica_changes = changes
        return result


def run_bi_isac(
    received,
    los,
    voxel_to_ap,
    ue_to_voxel,
    pilots,
    noise_var,
    occupancy_prob,
    constellation,
    config: GabpConfig | None = None,
    monitor=None,
) -> BiResult:
    """Run the joint estimator end to end on one instance."""
    est = BilinearEstimator(
        received, los, voxel_to_ap, ue_to_voxel, pilots, noise_var, occupancy_prob, constellation, config
    )
    return est.run(est.initialize(), monitor=monitor)
