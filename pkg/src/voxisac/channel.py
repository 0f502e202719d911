"""Channel matrices of the voxelated uplink model.

Three i.i.d. zero-mean circular complex Gaussian matrices compose the
effective channel: a direct UE-to-AP term plus a single-bounce term routed
through the occupied voxels,

    G = H + A diag(v) B,

with H of shape (n_rx_total, n_ue), A (n_rx_total, n_voxels) and
B (n_voxels, n_ue).  Blocked voxel-to-AP subpaths are zeroed in A.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .scattering import BlockageMask


def complex_gaussian(shape, variance: float, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, variance) matrix."""
    if variance == 0.0:
        return np.zeros(shape, dtype=complex)
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class ChannelSet:
    """One realization of the channel triple plus the ground-truth environment.

    ``voxel_to_ap`` is stored post-masking, so blocked entries are exactly 0.
    """

    los: np.ndarray           # H, (n_rx_total, n_ue)
    voxel_to_ap: np.ndarray   # A, (n_rx_total, n_voxels), mask applied
    ue_to_voxel: np.ndarray   # B, (n_voxels, n_ue)
    environment: np.ndarray   # v, (n_voxels,), complex-capable ground truth
    mask: BlockageMask | None = None
    variances: tuple[float, float, float] = (1.0, 1.0, 1.0)

    @property
    def n_rx_total(self) -> int:
        return self.los.shape[0]

    @property
    def n_ue(self) -> int:
        return self.los.shape[1]

    @property
    def n_voxels(self) -> int:
        return self.voxel_to_ap.shape[1]


def generate_channels(
    n_rx_total: int,
    n_ue: int,
    n_voxels: int,
    environment: np.ndarray,
    rng: np.random.Generator,
    variances: tuple[float, float, float] = (1.0, 1.0, 1.0),
    mask: BlockageMask | None = None,
) -> ChannelSet:
    """Draw H, A, B with the given variances and apply the blockage mask to A."""
    environment = np.asarray(environment)
    if environment.shape != (n_voxels,):
        raise ShapeError(f"environment has shape {environment.shape}, expected ({n_voxels},)")
    var_h, var_a, var_b = variances
    los = complex_gaussian((n_rx_total, n_ue), var_h, rng)
    voxel_to_ap = complex_gaussian((n_rx_total, n_voxels), var_a, rng)
    ue_to_voxel = complex_gaussian((n_voxels, n_ue), var_b, rng)
    if mask is not None:
        if mask.mask.shape != voxel_to_ap.shape:
            raise ShapeError(f"mask shape {mask.mask.shape} does not match A {voxel_to_ap.shape}")
        voxel_to_ap = voxel_to_ap * mask.mask
    return ChannelSet(
        los=los,
        voxel_to_ap=voxel_to_ap,
        ue_to_voxel=ue_to_voxel,
        environment=environment.astype(complex),
        mask=mask,
        variances=(var_h, var_a, var_b),
    )


def compose_effective(los: np.ndarray, voxel_to_ap: np.ndarray, ue_to_voxel: np.ndarray, environment: np.ndarray) -> np.ndarray:
    """G = H + A diag(v) B for arbitrary (possibly soft) environment vectors."""
    if los.shape[0] != voxel_to_ap.shape[0] or voxel_to_ap.shape[1] != ue_to_voxel.shape[0]:
        raise ShapeError(
            f"inconsistent shapes H{los.shape} A{voxel_to_ap.shape} B{ue_to_voxel.shape}"
        )
    v = np.asarray(environment).reshape(-1)
    if v.shape[0] != voxel_to_ap.shape[1]:
        raise ShapeError(f"environment length {v.shape[0]} != {voxel_to_ap.shape[1]} voxels")
    return los + (voxel_to_ap * v[np.newaxis, :]) @ ue_to_voxel


def effective_channel(channels: ChannelSet) -> np.ndarray:
    """Effective channel of a realization, using its ground-truth environment."""
    return compose_effective(channels.los, channels.voxel_to_ap, channels.ue_to_voxel, channels.environment)
