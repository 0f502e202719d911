"""Shipped experiment presets reproducing the reference study's sweeps.

Desk-scale defaults shrink the study's 8x8x8-voxel, 100-slot setting to a
4x4x4 grid with 50 slots so every preset finishes on a laptop; pass
``full_scale=True`` for the original dimensions.
"""

from __future__ import annotations

import math
from dataclasses import replace

from .harness import RunConfig

_DESK = dict(grid_shape=(4, 4, 4), n_slots=50, trials=200)
_FULL = dict(grid_shape=(8, 8, 8), n_slots=100, trials=200)


def _base(full_scale: bool, **over) -> RunConfig:
    dims = _FULL if full_scale else _DESK
    return RunConfig(**{**dims, **over})


def preset_config(name: str, full_scale: bool = False) -> RunConfig:
    """Named preset -> RunConfig.  Raises KeyError for unknown names."""
    if name == "fig7-convergence":
        return _base(full_scale, rho=(0.1,), snr_db=(15.0,), e_v=(0.015,), trials=20)
    if name == "fig9-voer":
        return _base(full_scale, rho=(0.1, 0.2, 0.3, 0.4, 0.5), snr_db=(15.0,), e_v=(0.015,), sweep="rho")
    if name == "fig10-ber":
        return _base(full_scale, rho=(0.1,), snr_db=(0.0, 5.0, 10.0, 15.0), e_v=(0.015,), sweep="snr_db")
    if name == "fig11-blockage":
        return _base(
            full_scale,
            rho=(0.5,),
            snr_db=(15.0,),
            e_v=(0.015,),
            theta_star=(math.pi, 7 * math.pi / 8, 3 * math.pi / 4, 5 * math.pi / 8, math.pi / 2),
            sweep="theta_star",
        )
    if name == "sota-dims":
        # Diversity-matched dimensions of the reference SCMA comparison.
        return _base(
            full_scale,
            n_ue=6, n_ap=2, n_rx=9,
            rho=(0.5,), snr_db=(0.0, 5.0, 10.0, 15.0, 20.0), e_v=(0.015,),
            sweep="snr_db",
        )
    raise KeyError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")


PRESETS = ("fig7-convergence", "fig9-voer", "fig10-ber", "fig11-blockage", "sota-dims")


def apply_overrides(config: RunConfig, **overrides) -> RunConfig:
    return replace(config, **overrides)
