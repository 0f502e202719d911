"""Complexity orders of the estimators and their relative-cost analysis.

The alternating pipeline costs the same order as the joint bilinear
estimator up to the pilot-ratio-dependent factor

    (1 - rho)^2 + (rho^2 + 1) / n_ue,

which crosses 1 at ``rho_eq`` (multi-UE only) and attains its minimum at
``rho_min = n_ue / (n_ue + 1)``.  The reference SCMA-IRS-MPA scheme's order,
O(R d_f M^d_f + n_ue M + lambda^2 n_ue n_voxels n_ap n_rx), is tied to an
SCMA codebook design and is documented here for context only.
"""

from __future__ import annotations

import math


def relative_complexity(rho: float, n_ue: int) -> float:
    """Cost of the alternating pipeline relative to the joint estimator."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"pilot ratio must lie in [0, 1], got {rho}")
    if n_ue < 1:
        raise ValueError("need at least one UE")
    return (1.0 - rho) ** 2 + (rho**2 + 1.0) / n_ue


def rho_eq(n_ue: int) -> float:
    """Pilot ratio at which both schemes have equal complexity order.

    Real-valued only for n_ue >= 2 (the discriminant n_ue^2 - n_ue - 1 is
    negative for a single UE, where the alternating scheme always costs more).
    """
    if n_ue < 2:
        raise ValueError("equal-complexity pilot ratio undefined for a single UE")
    disc = n_ue**2 - n_ue - 1
    return (n_ue - math.sqrt(disc)) / (n_ue + 1)


def rho_min(n_ue: int) -> float:
    """Pilot ratio minimizing the relative complexity; tends to 1 for many UEs."""
    if n_ue < 1:
        raise ValueError("need at least one UE")
    return n_ue / (n_ue + 1)


def order_env_pilot(iters: int, n_ue: int, n_voxels: int, n_rx_total: int, n_pilot: int) -> float:
    """Known-symbol environment module, pilot phase only."""
    return iters * n_ue * (n_voxels * n_rx_total * n_pilot) ** 2


def order_sym_data(iters: int, n_ue: int, n_rx_total: int, n_data: int) -> float:
    """Known-environment symbol module, data phase only."""
    return iters * (n_ue * n_rx_total * n_data) ** 2


def order_env_full(iters: int, n_ue: int, n_voxels: int, n_rx_total: int, n_slots: int) -> float:
    """Known-symbol environment module over the whole frame."""
    return iters * n_ue * (n_voxels * n_rx_total * n_slots) ** 2


def order_alternating(iters: int, n_ue: int, n_voxels: int, n_rx_total: int, n_pilot: int, n_slots: int) -> float:
    """Full alternating pipeline (all three stages)."""
    n_data = n_slots - n_pilot
    return iters * (n_ue * n_voxels * n_rx_total) ** 2 * ((n_pilot**2 + n_slots**2) / n_ue + n_data**2)


def order_bilinear(iters: int, n_ue: int, n_voxels: int, n_rx_total: int, n_slots: int) -> float:
    """Full joint bilinear estimator."""
    return iters * (n_ue * n_voxels * n_rx_total * n_slots) ** 2
