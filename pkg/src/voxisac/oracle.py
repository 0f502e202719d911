"""Exact brute-force inference on enumerable instances.

Enumerates every binary environment hypothesis and, per data slot, every
symbol tuple; given the environment the slots decouple, so the joint space
is 2^n_voxels * n_points^(n_ue * n_data) but evaluation stays
2^n_voxels * (n_pilot + n_data * n_points^n_ue).  Log-domain accumulation
throughout.  Ground truth for the message-passing estimators on desk-size
problems; refuses anything larger.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .channel import compose_effective
from .signals import Constellation

MAX_VOXELS = 10
MAX_SYMBOL_SLOTS = 8  # n_ue * n_data


@dataclass(frozen=True)
class MarginalResult:
    occupancy: np.ndarray          # P(v_k = 1 | Y), shape (n_voxels,)
    symbols: np.ndarray            # P(x_{n,t} = point | Y), shape (n_ue, n_data, n_points)


def _guard(n_voxels: int, n_ue: int, n_data: int, n_points: int) -> None:
    if n_voxels > MAX_VOXELS or n_ue * n_data > MAX_SYMBOL_SLOTS:
        raise ValueError(
            f"instance too large for exhaustive inference: "
            f"{n_voxels} voxels, {n_ue * n_data} symbol slots "
            f"(limits {MAX_VOXELS}, {MAX_SYMBOL_SLOTS} at {n_points} points)"
        )


def _environment_hypotheses(n_voxels: int) -> np.ndarray:
    """All binary vectors; hypothesis j has bit k of j at voxel k."""
    j = np.arange(2**n_voxels)
    return ((j[:, np.newaxis] >> np.arange(n_voxels)) & 1).astype(float)


def _log_prior(v: np.ndarray, occupancy_prob: float) -> float:
    ones = int(v.sum())
    zeros = v.size - ones
    if occupancy_prob == 0.0:
        return 0.0 if ones == 0 else -math.inf
    if occupancy_prob == 1.0:
        return 0.0 if zeros == 0 else -math.inf
    return ones * math.log(occupancy_prob) + zeros * math.log(1.0 - occupancy_prob)


def _tuple_matrix(constellation: Constellation, n_ue: int) -> np.ndarray:
    """(n_tuples, n_ue) symbol combinations; first user most significant."""
    idx = np.array(list(itertools.product(range(constellation.n_points), repeat=n_ue)))
    return constellation.points[idx]


def exact_joint_map(
    received: np.ndarray,
    los: np.ndarray,
    voxel_to_ap: np.ndarray,
    ue_to_voxel: np.ndarray,
    pilots: np.ndarray,
    constellation: Constellation,
    occupancy_prob: float,
    noise_var: float,
):
    """Joint MAP over all environments and data-symbol assignments.

    Returns ``(v_map, xd_map)``.  Equal-posterior ties resolve to the lowest
    enumeration index (binary counting for v, tuple lexicographic order for
    symbols), keeping results deterministic.
    """
    n_voxels = voxel_to_ap.shape[1]
    n_ue = los.shape[1]
    n_pilot = pilots.shape[1]
    n_data = received.shape[1] - n_pilot
    _guard(n_voxels, n_ue, n_data, constellation.n_points)
    n0 = max(noise_var, 1e-12)
    tuples = _tuple_matrix(constellation, n_ue)
    y_pilot = received[:, :n_pilot]
    y_data = received[:, n_pilot:]

    best_obj = math.inf
    best: tuple[np.ndarray, np.ndarray] | None = None
    for v in _environment_hypotheses(n_voxels):
        log_prior = _log_prior(v, occupancy_prob)
        if log_prior == -math.inf:
            continue
        g = compose_effective(los, voxel_to_ap, ue_to_voxel, v)
        cost = float(np.sum(np.abs(y_pilot - g @ pilots) ** 2)) / n0 - log_prior
        picks = np.empty((n_ue, n_data), dtype=complex)
        for t in range(n_data):
            resid = y_data[:, t : t + 1] - g @ tuples.T
            col_costs = np.sum(np.abs(resid) ** 2, axis=0) / n0
            j = int(np.argmin(col_costs))
            cost += float(col_costs[j])
            picks[:, t] = tuples[j]
        if cost < best_obj:
            best_obj = cost
            best = (v.copy(), picks)
    assert best is not None
    return best


def exact_marginals(
    received: np.ndarray,
    los: np.ndarray,
    voxel_to_ap: np.ndarray,
    ue_to_voxel: np.ndarray,
    pilots: np.ndarray,
    constellation: Constellation,
    occupancy_prob: float,
    noise_var: float,
) -> MarginalResult:
    """Exact per-voxel occupancy and per-symbol posterior marginals."""
    n_voxels = voxel_to_ap.shape[1]
    n_ue = los.shape[1]
    n_pilot = pilots.shape[1]
    n_data = received.shape[1] - n_pilot
    n_points = constellation.n_points
    _guard(n_voxels, n_ue, n_data, n_points)
    n0 = max(noise_var, 1e-12)
    tuples = _tuple_matrix(constellation, n_ue)
    tuple_idx = np.array(list(itertools.product(range(n_points), repeat=n_ue)))
    y_pilot = received[:, :n_pilot]
    y_data = received[:, n_pilot:]

    hypotheses = _environment_hypotheses(n_voxels)
    log_post_v = np.full(len(hypotheses), -math.inf)
    # Per-environment, per-slot symbol posteriors (filled only for admissible v).
    sym_cond = np.zeros((len(hypotheses), n_ue, n_data, n_points))
    for h, v in enumerate(hypotheses):
        log_prior = _log_prior(v, occupancy_prob)
        if log_prior == -math.inf:
            continue
        g = compose_effective(los, voxel_to_ap, ue_to_voxel, v)
        lp = log_prior - float(np.sum(np.abs(y_pilot - g @ pilots) ** 2)) / n0
        for t in range(n_data):
            resid = y_data[:, t : t + 1] - g @ tuples.T
            log_like = -np.sum(np.abs(resid) ** 2, axis=0) / n0
            lp += float(logsumexp(log_like))
            w = np.exp(log_like - logsumexp(log_like))
            for u in range(n_ue):
                np.add.at(sym_cond[h, u, t], tuple_idx[:, u], w)
        log_post_v[h] = lp
    log_post_v -= logsumexp(log_post_v)
    post_v = np.exp(log_post_v)
    occupancy = post_v @ hypotheses
    symbols = np.tensordot(post_v, sym_cond, axes=1)
    return MarginalResult(occupancy=occupancy, symbols=symbols)
