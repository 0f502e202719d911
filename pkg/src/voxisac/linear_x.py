"""Linear GaBP estimator for transmit symbols with a known environment.

With the environment fixed the system reduces to Y = G X + W, G = H +
A diag(v) B, and the factor graph splits into independent per-slot pages:
messages never cross time slots.  The estimator accepts an arbitrary column
subset of the received matrix (the alternating pipeline feeds it the data
phase only).  Edge tensors are laid out as (n_ue, n_rx_total, n_cols).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .gabp import EdgeState, GabpConfig, damp, denoise_discrete, denoise_qam4
from .signals import Constellation


@dataclass(frozen=True)
class SymbolConsensus:
    mean: np.ndarray   # consensus Gaussian mean, (n_ue, n_cols)
    var: np.ndarray    # consensus Gaussian variance, (n_ue, n_cols)
    soft: np.ndarray   # posterior-mean symbol estimates
    hard: np.ndarray   # nearest constellation points


@dataclass
class SymbolResult:
    consensus: SymbolConsensus
    state: EdgeState
    replica_changes: list[float] = field(default_factory=list)


def _denoise_symbols(ext_mean, ext_var, constellation: Constellation):
    """Closed form for unit-power 4QAM, exact summation otherwise."""
    if constellation.n_points == 4 and abs(constellation.avg_power - 1.0) < 1e-12:
        return denoise_qam4(ext_mean, ext_var, constellation.avg_power)
    return denoise_discrete(ext_mean, ext_var, constellation)


class SymbolEstimator:
    """Message-passing machinery for the known-environment symbol problem."""

    def __init__(
        self,
        received: np.ndarray,
        effective: np.ndarray,
        noise_var: float,
        constellation: Constellation,
        config: GabpConfig | None = None,
    ):
        self.config = config or GabpConfig()
        self.noise_var = float(noise_var)
        self.constellation = constellation
        if received.shape[0] != effective.shape[0]:
            raise ShapeError(f"G rows {effective.shape[0]} != received rows {received.shape[0]}")
        self.received = received
        self.effective = effective
        self.gain_sq = np.abs(effective) ** 2
        self.n_rx, self.n_ue = effective.shape
        self.n_cols = received.shape[1]

    def initialize(self) -> EdgeState:
        """Zero replicas (symmetric constellation mean) with prior-power MSE."""
        shape = (self.n_ue, self.n_rx, self.n_cols)
        return EdgeState(
            replica=np.zeros(shape, dtype=complex),
            mse=np.full(shape, self.constellation.avg_power),
        )

    def _evidence(self, state: EdgeState):
        # Soft-IC per slot: cancel every user's contribution except the target's.
        weighted = self.effective.T[:, :, np.newaxis] * state.replica
        cancel = self.received[np.newaxis, :, :] - weighted.sum(axis=0)[np.newaxis, :, :]
        ic_residual = cancel + weighted
        spread = self.gain_sq.T[:, :, np.newaxis] * state.mse
        cond_var = spread.sum(axis=0)[np.newaxis, :, :] - spread + self.noise_var
        np.maximum(cond_var, max(self.noise_var, self.config.variance_floor), out=cond_var)
        gain = self.effective.T[:, :, np.newaxis]
        evidence = np.conj(gain) * ic_residual / cond_var
        precision = self.gain_sq.T[:, :, np.newaxis] / cond_var
        return ic_residual, cond_var, evidence, precision

    def _extrinsic(self, evidence, precision):
        # Leave-one-out over antennas within each slot.
        floor = self.config.variance_floor
        prec = precision.sum(axis=1)[:, np.newaxis, :] - precision
        num = evidence.sum(axis=1)[:, np.newaxis, :] - evidence
        # Precision floored, variance left faithful (see environment module).
        prec = np.maximum(prec, floor)
        ext_var = 1.0 / prec
        ext_mean = ext_var * num
        return ext_mean, ext_var

    def iterate(self, state: EdgeState, iteration: int = 0) -> float:
        """One synchronous sweep; returns the mean absolute replica change."""
        _, cond_var, evidence, precision = self._evidence(state)
        ext_mean, ext_var = self._extrinsic(evidence, precision)
        new_replica, new_mse = _denoise_symbols(ext_mean, ext_var, self.constellation)
        eta = self.config.damping.eta_x
        old = state.replica
        state.replica = damp(old, new_replica, eta)
        state.mse = damp(state.mse, new_mse, eta)
        state.cond_var, state.ext_mean, state.ext_var = cond_var, ext_mean, ext_var
        state.check_finite(iteration, "symbol")
        return float(np.mean(np.abs(state.replica - old)))

    def run(self, state: EdgeState | None = None, monitor=None) -> SymbolResult:
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
        result = SymbolResult(consensus=self.consensus(state), state=state)
        result.replica_changes = changes
        return result

    def consensus(self, state: EdgeState) -> SymbolConsensus:
        """Full antenna sums per slot, posterior mean, hard projection."""
        _, _, evidence, precision = self._evidence(state)
        floor = self.config.variance_floor
        prec = np.maximum(precision.sum(axis=1), floor)
        var = 1.0 / prec
        mean = var * evidence.sum(axis=1)
        soft, _ = _denoise_symbols(mean, var, self.constellation)
        hard = self.constellation.project(soft)
        return SymbolConsensus(mean=mean, var=var, soft=soft, hard=hard)


def estimate_symbols(
    received,
    effective,
    noise_var,
    constellation: Constellation,
    config: GabpConfig | None = None,
) -> SymbolResult:
    """Run the full known-environment symbol estimator on one instance."""
    est = SymbolEstimator(received, effective, noise_var, constellation, config)
    return est.run(est.initialize())
