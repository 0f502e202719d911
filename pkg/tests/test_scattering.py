"""Scattering angles, beta-mixture fitting and blockage masks."""

import numpy as np
import pytest

from voxisac import (
    BetaMixture,
    FitError,
    GeometryError,
    VoxelGrid,
    blockage_mask,
    empirical_angle_distribution,
    fit_beta_mixture,
    sample_placement,
    scattering_angle,
)
from voxisac.scattering import SUPPORT, AngleDistribution


class TestScatteringAngle:
    def test_antiparallel(self):
        theta = scattering_angle([0, 0, 0], [2, 0, 0], [1, 0, 0])
        assert theta == pytest.approx(np.pi)

    def test_orthogonal(self):
        theta = scattering_angle([0, 0, 0], [1, 1, 0], [1, 0, 0])
        assert theta == pytest.approx(np.pi / 2)

    def test_coincident_endpoints_zero_angle(self):
        theta = scattering_angle([0, 0, 0], [0, 0, 0], [1, 0, 0])
        assert theta == pytest.approx(0.0)

    def test_symmetric_in_ue_ap_swap(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            ue, ap, vx = rng.standard_normal((3, 3)) * 4
            if np.allclose(ue, vx) or np.allclose(ap, vx):
                continue
            assert scattering_angle(ue, ap, vx) == pytest.approx(scattering_angle(ap, ue, vx))

    def test_degenerate_rejected(self):
        with pytest.raises(GeometryError):
            scattering_angle([1, 0, 0], [2, 0, 0], [1, 0, 0])

    def test_vectorized(self):
        ue = np.zeros((4, 3))
        ap = np.tile([1.0, 1.0, 0.0], (4, 1))
        vx = np.tile([1.0, 0.0, 0.0], (4, 1))
        np.testing.assert_allclose(scattering_angle(ue, ap, vx), np.pi / 2)


class TestEmpiricalDistribution:
    def test_too_small_grid(self):
        with pytest.raises(GeometryError):
            empirical_angle_distribution(VoxelGrid((1, 1, 2)), 100, np.random.default_rng(0))

    def test_histogram_normalized(self):
        dist = empirical_angle_distribution(VoxelGrid((4, 4, 4)), 20_000, np.random.default_rng(1))
        assert dist.total_mass() == pytest.approx(1.0, abs=1e-12)

    def test_unimodal_plus_shoulder_shape(self):
        # Box geometry concentrates scattering at acute angles: one broad
        # bulge below pi/2 plus a lattice-induced spike at right angles.
        dist = empirical_angle_distribution(VoxelGrid((8, 8, 8)), 200_000, np.random.default_rng(2))
        centers, density = dist.bin_centers, dist.density
        mass_acute = np.sum(density[centers < np.pi / 2]) * dist.bin_width
        assert mass_acute > 0.6
        bulge = centers[np.argmax(np.convolve(density, np.ones(9) / 9, mode="same"))]
        assert 0.4 < bulge < 1.6
        # Right-angle shoulder: the bins straddling pi/2 spike above their
        # neighborhood (orthogonal lattice directions are overrepresented).
        at_right = density[np.abs(centers - np.pi / 2) <= dist.bin_width].max()
        nearby = density[(np.abs(centers - np.pi / 2) > 0.1) & (np.abs(centers - np.pi / 2) < 0.3)]
        assert at_right > 2.0 * nearby.mean()
        # Hardly any mass at grazing reflections near pi.
        assert np.sum(density[centers > 2.8]) * dist.bin_width < 0.05


class TestBetaMixtureFit:
    def test_recovers_known_mixture(self):
        truth = BetaMixture(weight=0.5, a1=2.0, b1=5.0, a2=5.0, b2=2.0)
        rng = np.random.default_rng(7)
        samples = truth.sample(1_000_000, rng)
        hist, edges = np.histogram(samples, bins=128, range=(0, SUPPORT), density=True)
        dist = AngleDistribution(bin_edges=edges, density=hist, n_samples=len(samples))
        fitted = fit_beta_mixture(dist)
        centers = dist.bin_centers
        l1 = np.sum(np.abs(fitted.pdf(centers) - truth.pdf(centers))) * dist.bin_width
        assert l1 < 0.05

    def test_single_component_data(self):
        truth = BetaMixture(weight=1.0, a1=3.0, b1=4.0, a2=1.0, b2=1.0)
        rng = np.random.default_rng(8)
        samples = truth.sample(500_000, rng)
        hist, edges = np.histogram(samples, bins=128, range=(0, SUPPORT), density=True)
        dist = AngleDistribution(bin_edges=edges, density=hist, n_samples=len(samples))
        fitted = fit_beta_mixture(dist)
        centers = dist.bin_centers
        l1 = np.sum(np.abs(fitted.pdf(centers) - truth.pdf(centers))) * dist.bin_width
        assert l1 < 0.05  # components may split the weight, the density must match

    def test_fitted_density_is_valid_pdf(self):
        dist = empirical_angle_distribution(VoxelGrid((4, 4, 4)), 50_000, np.random.default_rng(3))
        fitted = fit_beta_mixture(dist)
        theta = np.linspace(1e-6, SUPPORT - 1e-6, 2001)
        mass = np.trapezoid(fitted.pdf(theta), theta)
        assert mass == pytest.approx(1.0, abs=5e-3)

    def test_cdf_monotone_zero_to_one(self):
        dist = empirical_angle_distribution(VoxelGrid((4, 4, 4)), 50_000, np.random.default_rng(4))
        fitted = fit_beta_mixture(dist)
        theta = np.linspace(0, SUPPORT, 513)
        cdf = fitted.cdf(theta)
        assert cdf[0] == pytest.approx(0.0, abs=1e-12)
        assert cdf[-1] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(cdf) >= -1e-12)

    def test_empty_histogram_rejected(self):
        dist = AngleDistribution(
            bin_edges=np.linspace(0, SUPPORT, 129), density=np.zeros(128), n_samples=0
        )
        with pytest.raises(FitError):
            fit_beta_mixture(dist)


@pytest.fixture(scope="module")
def fitted_dist():
    grid = VoxelGrid((4, 4, 4))
    dist = empirical_angle_distribution(grid, 200_000, np.random.default_rng(12))
    dist.mixture = fit_beta_mixture(dist)
    return grid, dist


class TestBlockageMask:
    def test_theta_pi_all_available(self, fitted_dist):
        grid, dist = fitted_dist
        rng = np.random.default_rng(0)
        placement = sample_placement(grid, np.zeros(grid.n_voxels), 2, 3, 2, rng)
        for mode in ("stochastic", "geometric"):
            mask = blockage_mask(grid, placement, dist, np.pi, mode, rng)
            assert np.all(mask.mask == 1.0)

    def test_theta_zero_all_blocked(self, fitted_dist):
        grid, dist = fitted_dist
        rng = np.random.default_rng(1)
        placement = sample_placement(grid, np.zeros(grid.n_voxels), 2, 3, 2, rng)
        mask = blockage_mask(grid, placement, dist, 0.0, "stochastic", rng)
        assert np.all(mask.mask == 0.0)

    def test_antenna_rows_identical_per_ap(self, fitted_dist):
        grid, dist = fitted_dist
        rng = np.random.default_rng(2)
        placement = sample_placement(grid, np.zeros(grid.n_voxels), 2, 3, 4, rng)
        mask = blockage_mask(grid, placement, dist, 2.0, "stochastic", rng).mask
        for ap in range(3):
            rows = mask[ap * 4 : (ap + 1) * 4]
            assert np.all(rows == rows[0])

    def test_median_angle_blocks_half(self, fitted_dist):
        # Invert the fitted CDF numerically for its median; the empirical
        # blockage rate over >= 1e4 entries must be 0.5 +- 0.02.
        grid, dist = fitted_dist
        theta_grid = np.linspace(0, np.pi, 20_001)
        median = theta_grid[np.searchsorted(dist.mixture.cdf(theta_grid), 0.5)]
        rng = np.random.default_rng(3)
        placement = sample_placement(grid, np.zeros(grid.n_voxels), 2, 4, 40, rng)
        rates = []
        for _ in range(10):
            mask = blockage_mask(grid, placement, dist, median, "stochastic", rng)
            per_ap = mask.mask[:: placement.n_rx]
            rates.append(1.0 - per_ap.mean())
        # 10 draws x 4 APs x 64 voxels > 1e4 independent entries
        assert np.mean(rates) == pytest.approx(0.5, abs=0.02)

    def test_blockage_rate_monotone_in_theta(self, fitted_dist):
        grid, dist = fitted_dist
        probs = [dist.mixture.blockage_prob(th) for th in np.linspace(0, np.pi, 33)]
        assert np.all(np.diff(probs) <= 1e-12)

    def test_geometric_mode_uses_actual_angles(self, fitted_dist):
        grid, dist = fitted_dist
        rng = np.random.default_rng(4)
        placement = sample_placement(grid, np.zeros(grid.n_voxels), 2, 2, 2, rng)
        mask = blockage_mask(grid, placement, dist, np.pi / 2, "geometric", rng)
        rate = mask.blockage_rate
        assert 0.0 < rate < 1.0  # a middling critical angle blocks some subpaths only
