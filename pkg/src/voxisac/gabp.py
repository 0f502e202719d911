"""Shared Gaussian belief propagation machinery.

Every estimator in this package exchanges per-edge messages summarized by a
soft replica (tentative estimate) and its mean squared error, refines them
with prior-aware denoisers, and stabilizes iterations by damping.  The
denoisers here are pure functions over numpy arrays so the estimators can
evaluate whole edge tensors at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import DivergenceError
from .signals import Constellation

#: Lower clamp for conditional and extrinsic variances (guards divisions).
VARIANCE_FLOOR = 1e-12


@dataclass
class EdgeState:
    """Per-edge message state for one variable family.

    Arrays share one shape: (n_variables, n_factors...) as laid out by the
    owning estimator.  ``cond_var``, ``ext_mean`` and ``ext_var`` hold the
    most recent sweep's messages for diagnostics; ``replica``/``mse`` are the
    damped committed values the next sweep consumes.
    """

    replica: np.ndarray
    mse: np.ndarray
    cond_var: np.ndarray | None = None
    ext_mean: np.ndarray | None = None
    ext_var: np.ndarray | None = None

    def check_finite(self, iteration: int, label: str) -> None:
        for name, arr in (("replica", self.replica), ("mse", self.mse)):
            if not np.all(np.isfinite(arr)):
                bad = int(np.size(arr) - np.count_nonzero(np.isfinite(arr)))
                raise DivergenceError(iteration, f"{bad} non-finite entries in {label} {name}")


@dataclass(frozen=True)
class DampingConfig:
    """Convex blending factors for environment (eta_v) and symbol (eta_x) updates."""

    eta_v: float = 0.9
    eta_x: float = 0.5

    def __post_init__(self):
        for eta in (self.eta_v, self.eta_x):
            if not 0.0 <= eta <= 1.0:
                raise ValueError(f"damping factor {eta} outside [0, 1]")


@dataclass(frozen=True)
class StopRule:
    """Iteration budget with an optional replica-change early stop."""

    max_iterations: int = 100
    replica_tol: float | None = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("need at least one iteration")

    def done(self, iteration: int, mean_change: float) -> bool:
        if iteration >= self.max_iterations:
            return True
        return self.replica_tol is not None and mean_change < self.replica_tol


@dataclass(frozen=True)
class GabpConfig:
    """Knobs shared by the message-passing estimators.

    exclusion: leave-one-out reading for the (antenna, slot)-indexed factor
        sums of the environment edges.  "pair" removes only the edge's own
        factor (default); "row_col" removes that antenna row and slot column
        entirely (ablation of the literal double-product reading).
    variance_mode: "coherent" keeps cross products when propagating replica
        uncertainty through summed gains (exact second moments, reduces
        term-for-term to the known-input modules); "incoherent" drops them,
        keeping only per-entry magnitude products.
    """

    damping: DampingConfig = field(default_factory=DampingConfig)
    stop: StopRule = field(default_factory=StopRule)
    exclusion: str = "pair"
    variance_mode: str = "coherent"
    variance_floor: float = VARIANCE_FLOOR

    def __post_init__(self):
        if self.exclusion not in ("pair", "row_col"):
            raise ValueError(f"unknown exclusion rule {self.exclusion!r}")
        if self.variance_mode not in ("coherent", "incoherent"):
            raise ValueError(f"unknown variance mode {self.variance_mode!r}")


def damp(old, new, eta: float):
    """Damped update eta * old + (1 - eta) * new (applied to replicas and MSEs alike)."""
    if eta == 0.0:
        return new
    return eta * old + (1.0 - eta) * new


def denoise_bernoulli(ext_mean, ext_var, occupancy_prob: float):
    """Posterior refinement of binary occupancy coefficients.

    Given the Gaussian extrinsic belief (mean, variance) and the Bernoulli
    prior, returns the posterior-mean replica and its prior-weighted MSE
    replica**2 + p - 2 p replica.  Degenerate priors (p of 0 or 1) yield
    hard decisions with zero MSE.  Evaluated in the log domain: the
    likelihood-ratio exponent (2 Re(mean) - 1) / var overflows exp() easily.
    """
    mean = np.asarray(ext_mean)
    var = np.maximum(np.asarray(ext_var, dtype=float), VARIANCE_FLOOR)
    if occupancy_prob <= 0.0 or occupancy_prob >= 1.0:
        p = float(np.clip(occupancy_prob, 0.0, 1.0))
        replica = np.full(mean.shape, p)
        return replica, np.zeros(mean.shape)
    logit_prior = np.log(occupancy_prob / (1.0 - occupancy_prob))
    evidence = (2.0 * mean.real - 1.0) / var
    replica = expit(logit_prior + evidence)
    mse = replica**2 + occupancy_prob - 2.0 * occupancy_prob * replica
    return replica, mse


def denoise_qam4(ext_mean, ext_var, avg_power: float):
    """Closed-form posterior moments for Gray 4QAM under a Gaussian extrinsic belief.

    replica = sqrt(E/2) (tanh(sqrt(2/E) Re(mean)/var) + j tanh(sqrt(2/E) Im(mean)/var)),
    mse = E - |replica|^2.  Exact for the unit-power constellation used
    throughout; for other powers prefer denoise_discrete.
    """
    mean = np.asarray(ext_mean)
    var = np.maximum(np.asarray(ext_var, dtype=float), VARIANCE_FLOOR)
    amp = np.sqrt(avg_power / 2.0)
    scale = np.sqrt(2.0 / avg_power)
    replica = amp * (np.tanh(scale * mean.real / var) + 1j * np.tanh(scale * mean.imag / var))
    mse = np.maximum(avg_power - np.abs(replica) ** 2, 0.0)
    return replica, mse


def denoise_discrete(ext_mean, ext_var, constellation: Constellation):
    """Exact posterior mean/variance for a uniform prior over any finite constellation.

    Sums the Gaussian likelihood over all points in the log domain (stable
    for tiny extrinsic variances).
    """
    mean = np.asarray(ext_mean)
    var = np.maximum(np.asarray(ext_var, dtype=float), VARIANCE_FLOOR)
    points = constellation.points
    log_w = -np.abs(mean[..., np.newaxis] - points) ** 2 / var[..., np.newaxis]
    log_w -= log_w.max(axis=-1, keepdims=True)
    w = np.exp(log_w)
    w /= w.sum(axis=-1, keepdims=True)
    replica = w @ points
    second = w @ (np.abs(points) ** 2)
    mse = np.maximum(second - np.abs(replica) ** 2, 0.0)
    return replica, mse


def bernoulli_variance(occupancy_prob: float) -> float:
    """Prior variance p(1-p), the MSE of the prior-mean replica."""
    return occupancy_prob * (1.0 - occupancy_prob)


def bernoulli_mse(replica, occupancy_prob: float):
    """Prior-weighted MSE of an arbitrary real replica value."""
    r = np.asarray(replica, dtype=float)
    return r**2 + occupancy_prob - 2.0 * occupancy_prob * r
