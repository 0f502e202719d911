"""Stochastic-geometric model of NLOS subpath availability.

A wave reflected at a voxel leaves toward an AP at a *scattering angle*
relative to the incoming UE-to-voxel direction.  Reflections beyond a
critical angle ``theta_star`` are absorbed, so the voxel-to-AP subpath is
unavailable.  The angle population over random (UE, AP, voxel) placements is
summarized by a histogram and approximated by a two-component scaled beta
mixture; its complement CDF at ``theta_star`` gives the blockage rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.stats import beta as beta_dist

from .errors import FitError, GeometryError
from .grid import Placement, VoxelGrid

SUPPORT = np.pi  # angles live on [0, pi]


def scattering_angle(ue_pos, ap_pos, voxel_pos):
    """Angle at the voxel between the directions toward the UE and toward the AP.

    Accepts single points of shape (3,) or broadcastable stacks (..., 3);
    returns radians in [0, pi].  Raises GeometryError when the voxel
    coincides with the UE or the AP (undefined direction).
    """
    ue = np.asarray(ue_pos, dtype=float)
    ap = np.asarray(ap_pos, dtype=float)
    vx = np.asarray(voxel_pos, dtype=float)
    d_u = ue - vx
    d_a = ap - vx
    n_u = np.linalg.norm(d_u, axis=-1)
    n_a = np.linalg.norm(d_a, axis=-1)
    if np.any(n_u == 0) or np.any(n_a == 0):
        raise GeometryError("voxel coincides with a UE or AP position")
    cos = np.sum(d_u * d_a, axis=-1) / (n_u * n_a)
    return np.arccos(np.clip(cos, -1.0, 1.0))


@dataclass(frozen=True)
class BetaMixture:
    """Two-component beta mixture scaled to the support [0, pi].

    Density: ``weight * Beta(a1, b1) + (1 - weight) * Beta(a2, b2)`` with the
    unit-interval argument ``x / pi`` and the 1/pi Jacobian.
    """

    weight: float
    a1: float
    b1: float
    a2: float
    b2: float

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError("mixture weight must lie in [0, 1]")
        if min(self.a1, self.b1, self.a2, self.b2) <= 0:
            raise ValueError("beta shape parameters must be positive")

    def pdf(self, theta):
        u = np.asarray(theta, dtype=float) / SUPPORT
        p = self.weight * beta_dist.pdf(u, self.a1, self.b1)
        p = p + (1.0 - self.weight) * beta_dist.pdf(u, self.a2, self.b2)
        return p / SUPPORT

    def cdf(self, theta):
        u = np.clip(np.asarray(theta, dtype=float) / SUPPORT, 0.0, 1.0)
        c = self.weight * beta_dist.cdf(u, self.a1, self.b1)
        return c + (1.0 - self.weight) * beta_dist.cdf(u, self.a2, self.b2)

    def blockage_prob(self, theta_star: float) -> float:
        """Complement CDF: probability that a random subpath angle exceeds theta_star."""
        return float(1.0 - self.cdf(theta_star))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        pick = rng.random(n) < self.weight
        out = np.where(
            pick,
            rng.beta(self.a1, self.b1, size=n),
            rng.beta(self.a2, self.b2, size=n),
        )
        return out * SUPPORT

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.weight, self.a1, self.b1, self.a2, self.b2)


@dataclass
class AngleDistribution:
    """Normalized scattering-angle histogram with an optional fitted mixture."""

    bin_edges: np.ndarray
    density: np.ndarray
    n_samples: int
    mixture: BetaMixture | None = field(default=None)

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    def total_mass(self) -> float:
        return float(np.sum(self.density) * self.bin_width)


def empirical_angle_distribution(
    grid: VoxelGrid,
    n_samples: int,
    rng: np.random.Generator,
    n_bins: int = 128,
) -> AngleDistribution:
    """Histogram of scattering angles over random distinct (UE, AP, voxel) triples."""
    if grid.n_voxels < 3:
        raise GeometryError("grid must contain at least 3 voxels to draw distinct positions")
    centers = grid.centers()
    idx = np.empty((n_samples, 3), dtype=np.int64)
    remaining = np.arange(n_samples)
    while remaining.size:
        draw = rng.integers(0, grid.n_voxels, size=(remaining.size, 3))
        idx[remaining] = draw
        distinct = (
            (draw[:, 0] != draw[:, 1]) & (draw[:, 0] != draw[:, 2]) & (draw[:, 1] != draw[:, 2])
        )
        remaining = remaining[~distinct]
    angles = scattering_angle(centers[idx[:, 0]], centers[idx[:, 1]], centers[idx[:, 2]])
    hist, edges = np.histogram(angles, bins=n_bins, range=(0.0, SUPPORT), density=True)
    return AngleDistribution(bin_edges=edges, density=hist, n_samples=n_samples)


def _l1_density_error(mixture: BetaMixture, dist: AngleDistribution) -> float:
    predicted = mixture.pdf(dist.bin_centers)
    return float(np.sum(np.abs(predicted - dist.density)) * dist.bin_width)


def _unpack(params: np.ndarray) -> BetaMixture:
    # Unconstrained parametrization: logistic weight, log shapes.
    w = 1.0 / (1.0 + np.exp(-params[0]))
    a1, b1, a2, b2 = np.exp(np.clip(params[1:], -8.0, 8.0))
    return BetaMixture(weight=w, a1=a1, b1=b1, a2=a2, b2=b2)


_FIT_STARTS = (
    np.array([0.0, np.log(2.0), np.log(5.0), np.log(5.0), np.log(2.0)]),
    np.array([0.0, np.log(3.0), np.log(3.0), np.log(1.5), np.log(6.0)]),
    np.array([1.0, np.log(4.0), np.log(4.0), np.log(8.0), np.log(2.0)]),
    np.array([-1.0, np.log(1.2), np.log(1.2), np.log(6.0), np.log(6.0)]),
)


def fit_beta_mixture(dist: AngleDistribution, max_iter: int = 4000) -> BetaMixture:
    """Fit the two-component mixture by simplex search on binned L1 error.

    Four fixed starting points guard against local minima; the best
    converged fit wins.  Raises FitError if no start converges.
    """
    if dist.density.size == 0 or dist.total_mass() == 0:
        raise FitError("empty histogram, nothing to fit")

    def objective(params: np.ndarray) -> float:
        return _l1_density_error(_unpack(params), dist)

    best: tuple[float, BetaMixture] | None = None
    for start in _FIT_STARTS:
        res = optimize.minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={"maxiter": max_iter, "xatol": 1e-6, "fatol": 1e-9},
        )
        if not res.success:
            continue
        mixture = _unpack(res.x)
        if best is None or res.fun < best[0]:
            best = (float(res.fun), mixture)
    if best is None:
        raise FitError(f"simplex search did not converge in {max_iter} iterations from any start")
    return best[1]


@dataclass(frozen=True)
class BlockageMask:
    """Binary availability mask for voxel-to-AP subpaths.

    ``mask`` has shape (n_ap * n_rx, n_voxels); 1 keeps a subpath, 0 blocks
    it.  All antenna rows of one AP are identical (antennas share a voxel).
    """

    mask: np.ndarray
    theta_star: float
    mode: str

    @property
    def blockage_rate(self) -> float:
        return float(1.0 - self.mask.mean())


def blockage_mask(
    grid: VoxelGrid,
    placement: Placement,
    dist: "AngleDistribution | BetaMixture | None",
    theta_star: float,
    mode: str,
    rng: np.random.Generator,
) -> BlockageMask:
    """Draw the NLOS blockage mask for a critical angle.

    stochastic: each (AP, voxel) pair is blocked independently with the
    fitted mixture's complement-CDF probability at ``theta_star``; ``dist``
    must carry a fitted mixture (or be one).
    geometric: a pair is blocked when the actual scattering angle, for a
    uniformly drawn reference UE voxel, exceeds ``theta_star``; ``dist`` is
    unused and may be None.
    """
    if not 0.0 <= theta_star <= SUPPORT:
        raise ValueError(f"critical angle must lie in [0, pi], got {theta_star}")
    n_ap, n_vox = placement.n_ap, grid.n_voxels
    if mode == "stochastic":
        mixture = dist if isinstance(dist, BetaMixture) else getattr(dist, "mixture", None)
        if mixture is None:
            raise FitError("stochastic blockage requires a fitted mixture on the angle distribution")
        p_block = mixture.blockage_prob(theta_star)
        per_ap = (rng.random((n_ap, n_vox)) >= p_block).astype(float)
    elif mode == "geometric":
        centers = grid.centers()
        ap_pos = placement.ap_positions
        per_ap = np.ones((n_ap, n_vox))
        for j in range(n_ap):
            ap_voxel = placement.ap_voxels[j] - 1
            for k in range(n_vox):
                if k == ap_voxel:
                    continue  # co-located voxel: angle undefined, leave available
                ref = k
                while ref == k or ref == ap_voxel:
                    ref = int(rng.integers(0, n_vox))
                angle = scattering_angle(centers[ref], ap_pos[j], centers[k])
                per_ap[j, k] = 0.0 if angle > theta_star else 1.0
    else:
        raise ValueError(f"unknown blockage mode {mode!r}")
    full = np.repeat(per_ap, placement.n_rx, axis=0)
    return BlockageMask(mask=full, theta_star=theta_star, mode=mode)
