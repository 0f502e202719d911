"""Linear GaBP estimator for the voxel environment vector with known symbols.

With the transmit matrix X fully known, the observation is linear in the
occupancy vector v:

    y[m,t] = (H X)[m,t] + sum_k a[m,k] c[k,t] v[k] + w[m,t],  C = B X,

so every received entry (m, t) acts as a factor node for all n_voxels
variables with per-edge gain a[m,k] c[k,t].  One sweep performs soft
interference cancellation, Gaussian extrinsic combination with leave-one-out
over the factor set, Bernoulli denoising, and a damped commit.  Edge tensors
are laid out as (n_voxels, n_rx_total, n_slots).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .gabp import EdgeState, GabpConfig, bernoulli_mse, damp, denoise_bernoulli


@dataclass(frozen=True)
class EnvironmentConsensus:
    """Full-sum belief combined with the prior after the final sweep."""

    mean: np.ndarray      # consensus Gaussian mean per voxel
    var: np.ndarray       # consensus Gaussian variance per voxel
    soft: np.ndarray      # posterior-mean occupancy in [0, 1]
    hard: np.ndarray      # threshold-0.5 decisions (ties count occupied)


@dataclass
class EnvironmentResult:
    consensus: EnvironmentConsensus
    state: EdgeState
    replica_changes: list[float] = field(default_factory=list)


class EnvironmentEstimator:
    """Message-passing machinery for one (Y, H, A, B, X) problem instance."""

    def __init__(
        self,
        received: np.ndarray,
        los: np.ndarray,
        voxel_to_ap: np.ndarray,
        ue_to_voxel: np.ndarray,
        transmit: np.ndarray,
        noise_var: float,
        occupancy_prob: float,
        config: GabpConfig | None = None,
    ):
        self.config = config or GabpConfig()
        self.noise_var = float(noise_var)
        self.occupancy_prob = float(occupancy_prob)
        n_rx, n_slots = received.shape
        n_voxels = voxel_to_ap.shape[1]
        if los.shape[0] != n_rx or voxel_to_ap.shape[0] != n_rx:
            raise ShapeError("H/A row count must match the received matrix")
        if transmit.shape != (los.shape[1], n_slots):
            raise ShapeError(f"transmit shape {transmit.shape} incompatible with Y {received.shape}")
        if ue_to_voxel.shape != (n_voxels, los.shape[1]):
            raise ShapeError("B must be (n_voxels, n_ue)")
        self.n_voxels, self.n_rx, self.n_slots = n_voxels, n_rx, n_slots
        # Per-edge factor gain a[m,k] c[k,t]; C and H X are fixed while X is known.
        incident = ue_to_voxel @ transmit                      # C, (n_voxels, n_slots)
        self.gain = voxel_to_ap.T[:, :, np.newaxis] * incident[:, np.newaxis, :]
        self.gain_sq = np.abs(self.gain) ** 2
        self.residual_base = received - los @ transmit         # Y - H X, (n_rx, n_slots)

    def initialize(self, replicas=None, mse=None) -> EdgeState:
        """Fresh edge state; optional warm-start replicas (and explicit MSEs).

        Default replicas are the prior mean.  A warm start may pass a length
        n_voxels vector (broadcast to all edges) or a full edge tensor; its
        MSEs default to the prior-weighted MSE of the given replica values.
        """
        shape = (self.n_voxels, self.n_rx, self.n_slots)
        if replicas is None:
            replica = np.full(shape, self.occupancy_prob, dtype=float)
        else:
            replica = np.asarray(replicas, dtype=float)
            if replica.ndim == 1:
                replica = np.broadcast_to(replica[:, np.newaxis, np.newaxis], shape).copy()
            elif replica.shape != shape:
                raise ShapeError(f"warm-start replicas must have shape ({self.n_voxels},) or {shape}")
            else:
                replica = replica.copy()
        if mse is None:
            mse_arr = bernoulli_mse(replica, self.occupancy_prob)
        else:
            mse_arr = np.broadcast_to(np.asarray(mse, dtype=float), shape).copy()
        return EdgeState(replica=replica, mse=np.ascontiguousarray(mse_arr))

    def _messages(self, state: EdgeState):
        """Soft-IC residuals and conditional variances for the current replicas."""
        weighted = self.gain * state.replica
        cancel = self.residual_base - weighted.sum(axis=0)
        ic_residual = cancel[np.newaxis, :, :] + weighted
        spread = self.gain_sq * state.mse
        cond_var = spread.sum(axis=0)[np.newaxis, :, :] - spread + self.noise_var
        np.maximum(cond_var, max(self.noise_var, self.config.variance_floor), out=cond_var)
        return ic_residual, cond_var

    def _evidence(self, state: EdgeState):
        ic_residual, cond_var = self._messages(state)
        evidence = np.conj(self.gain) * ic_residual / cond_var
        precision = self.gain_sq / cond_var
        return ic_residual, cond_var, evidence, precision

    def _extrinsic(self, evidence, precision):
        """Leave-one-out Gaussian combination across the factor set."""
        floor = self.config.variance_floor
        if self.config.exclusion == "pair":
            prec = precision.sum(axis=(1, 2))[:, np.newaxis, np.newaxis] - precision
            num = evidence.sum(axis=(1, 2))[:, np.newaxis, np.newaxis] - evidence
        else:  # row_col: drop the whole antenna row and slot column
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
        # Floor the precision, not the variance: ext_mean must stay equal to
        # num/prec or overwhelming evidence would distort the Gaussian mean
        # (the denoisers guard their own divisions by tiny variances).
        prec = np.maximum(prec, floor)
        ext_var = 1.0 / prec
        ext_mean = ext_var * num
        return ext_mean, ext_var

    def iterate(self, state: EdgeState, iteration: int = 0) -> float:
        """One synchronous sweep; returns the mean absolute replica change."""
        _, cond_var, evidence, precision = self._evidence(state)
        ext_mean, ext_var = self._extrinsic(evidence, precision)
        new_replica, new_mse = denoise_bernoulli(ext_mean, ext_var, self.occupancy_prob)
        eta = self.config.damping.eta_v
        old = state.replica
        state.replica = damp(old, new_replica, eta)
        state.mse = damp(state.mse, new_mse, eta)
        state.cond_var, state.ext_mean, state.ext_var = cond_var, ext_mean, ext_var
        state.check_finite(iteration, "environment")
        return float(np.mean(np.abs(state.replica - old)))

    def run(self, state: EdgeState | None = None, monitor=None) -> EnvironmentResult:
        """Iterate to the stop rule and take the consensus."""
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
        result = EnvironmentResult(consensus=self.consensus(state), state=state)
        result.replica_changes = changes
        return result

    def consensus(self, state: EdgeState) -> EnvironmentConsensus:
        """Combine all factor edges (full sums) with the prior."""
        _, _, evidence, precision = self._evidence(state)
        floor = self.config.variance_floor
        prec = np.maximum(precision.sum(axis=(1, 2)), floor)
        var = 1.0 / prec
        mean = var * evidence.sum(axis=(1, 2))
        soft, _ = denoise_bernoulli(mean, var, self.occupancy_prob)
        hard = (soft >= 0.5).astype(float)
        return EnvironmentConsensus(mean=mean, var=var, soft=soft, hard=hard)


def estimate_environment(
    received,
    los,
    voxel_to_ap,
    ue_to_voxel,
    transmit,
    noise_var,
    occupancy_prob,
    config: GabpConfig | None = None,
    warm_start=None,
) -> EnvironmentResult:
    """Run the full known-symbol environment estimator on one instance."""
    est = EnvironmentEstimator(
        received, los, voxel_to_ap, ue_to_voxel, transmit, noise_var, occupancy_prob, config
    )
    state = est.initialize(replicas=warm_start)
    return est.run(state)
