"""Voxelated region of interest and discretized device placement.

The region of interest is a cuboid subdivided into cubic voxels of edge
length ``voxel_edge``.  Voxels carry a linear index ``k`` in ``1..n_voxels``
(x-fastest row-major: x varies quickest, then y, then z) that every other
module shares.  User equipments (UEs) and access points (APs) are snapped to
voxel centers; all receive antennas of one AP share a single voxel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

#: 3D coordinate in meters; plain float array of shape (3,).
Coord3 = np.ndarray


@dataclass(frozen=True)
class VoxelGrid:
    """Regular voxel grid over a cuboidal region of interest.

    Attributes:
        shape: voxel counts ``(n_x, n_y, n_z)`` along each axis.
        voxel_edge: voxel edge length in meters (cubic voxels).
    """

    shape: tuple[int, int, int]
    voxel_edge: float = 1.0

    def __post_init__(self):
        if len(self.shape) != 3 or any(int(n) != n or n < 1 for n in self.shape):
            raise ValueError(f"grid shape must be three positive integers, got {self.shape}")
        if self.voxel_edge <= 0:
            raise ValueError("voxel edge must be positive")
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))

    @classmethod
    def from_lengths(cls, lengths: tuple[float, float, float], voxel_edge: float) -> "VoxelGrid":
        """Build a grid from region side lengths; each must be an integer number of voxels."""
        counts = []
        for side in lengths:
            n = side / voxel_edge
            if abs(n - round(n)) > 1e-9 or round(n) < 1:
                raise ValueError(f"side length {side} is not a positive multiple of voxel edge {voxel_edge}")
            counts.append(int(round(n)))
        return cls(shape=(counts[0], counts[1], counts[2]), voxel_edge=voxel_edge)

    @property
    def n_x(self) -> int:
        return self.shape[0]

    @property
    def n_y(self) -> int:
        return self.shape[1]

    @property
    def n_z(self) -> int:
        return self.shape[2]

    @property
    def n_voxels(self) -> int:
        return self.shape[0] * self.shape[1] * self.shape[2]

    @property
    def lengths(self) -> tuple[float, float, float]:
        return tuple(n * self.voxel_edge for n in self.shape)

    def index_to_center(self, k: int) -> Coord3:
        """Geometric center of voxel ``k`` (1-based linear index, x-fastest)."""
        if not 1 <= k <= self.n_voxels:
            raise ValueError(f"voxel index {k} outside 1..{self.n_voxels}")
        flat = k - 1
        i_x = flat % self.n_x
        i_y = (flat // self.n_x) % self.n_y
        i_z = flat // (self.n_x * self.n_y)
        return (np.array([i_x, i_y, i_z], dtype=float) + 0.5) * self.voxel_edge

    def center_to_index(self, coord: Coord3) -> int:
        """Inverse of :meth:`index_to_center`; accepts any point inside the voxel."""
        ijk = np.floor(np.asarray(coord, dtype=float) / self.voxel_edge).astype(int)
        if np.any(ijk < 0) or np.any(ijk >= np.array(self.shape)):
            raise ValueError(f"coordinate {coord} outside the grid bounding box")
        i_x, i_y, i_z = ijk
        return int(1 + i_x + self.n_x * (i_y + self.n_y * i_z))

    def centers(self) -> np.ndarray:
        """All voxel centers as an ``(n_voxels, 3)`` array; row ``k-1`` is voxel ``k``."""
        i = np.arange(self.n_voxels)
        i_x = i % self.n_x
        i_y = (i // self.n_x) % self.n_y
        i_z = i // (self.n_x * self.n_y)
        return (np.stack([i_x, i_y, i_z], axis=1) + 0.5) * self.voxel_edge


def sample_environment(grid: VoxelGrid, occupancy_prob: float, rng: np.random.Generator) -> np.ndarray:
    """Draw a binary environment vector, each voxel occupied i.i.d. with ``occupancy_prob``."""
    if not 0.0 <= occupancy_prob <= 1.0:
        raise ValueError(f"occupancy probability must lie in [0, 1], got {occupancy_prob}")
    return (rng.random(grid.n_voxels) < occupancy_prob).astype(float)


@dataclass(frozen=True)
class Placement:
    """Discretized UE/AP positions.

    ``ue_voxels`` and ``ap_voxels`` hold 1-based voxel indices; every one of
    the ``n_rx`` antennas of an AP sits in that AP's voxel (identical angle
    of arrival per AP).
    """

    grid: VoxelGrid
    ue_voxels: np.ndarray
    ap_voxels: np.ndarray
    n_rx: int

    @property
    def n_ue(self) -> int:
        return len(self.ue_voxels)

    @property
    def n_ap(self) -> int:
        return len(self.ap_voxels)

    @property
    def n_rx_total(self) -> int:
        return self.n_ap * self.n_rx

    @property
    def ue_positions(self) -> np.ndarray:
        return self.grid.centers()[np.asarray(self.ue_voxels) - 1]

    @property
    def ap_positions(self) -> np.ndarray:
        return self.grid.centers()[np.asarray(self.ap_voxels) - 1]


def sample_placement(
    grid: VoxelGrid,
    environment: np.ndarray,
    n_ue: int,
    n_ap: int,
    n_rx: int,
    rng: np.random.Generator,
) -> Placement:
    """Place UEs and APs uniformly at random on distinct empty voxels."""
    occupied = np.abs(np.asarray(environment)) > 0
    empty = np.flatnonzero(~occupied)
    needed = n_ue + n_ap
    if len(empty) < needed:
        raise GeometryError(f"need {needed} empty voxels for placement, only {len(empty)} available")
    chosen = rng.choice(empty, size=needed, replace=False) + 1
    return Placement(grid=grid, ue_voxels=chosen[:n_ue], ap_voxels=chosen[n_ue:], n_rx=n_rx)
