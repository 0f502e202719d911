"""Voxelated-environment integrated sensing and communication toolkit.

Simulates an uplink in which multiple UEs transmit frames toward distributed
AP antennas while a central unit jointly recovers the transmitted data
symbols and a discrete 3D occupancy image of the surroundings from the same
signal, via two Gaussian message-passing estimators: an alternating pair of
linear modules and a joint bilinear module.
"""

__version__ = "0.1.0"

from .al_isac import AlIsacResult, run_al_isac
from .bi_isac import BilinearEstimator, BiResult, run_bi_isac
from .channel import ChannelSet, compose_effective, effective_channel, generate_channels
from .complexity import relative_complexity, rho_eq, rho_min
from .errors import ConfigError, DivergenceError, FitError, GeometryError, ShapeError, VoxisacError
from .gabp import (
    DampingConfig,
    EdgeState,
    GabpConfig,
    StopRule,
    damp,
    denoise_bernoulli,
    denoise_discrete,
    denoise_qam4,
)
from .grid import Placement, VoxelGrid, sample_environment, sample_placement
from .harness import RunConfig, run_convergence_study, run_experiment, run_points
from .linear_v import EnvironmentEstimator, estimate_environment
from .linear_x import SymbolEstimator, estimate_symbols
from .metrics import MetricReport, ber, ber_symbols, mse_v, ser, voer
from .oracle import exact_joint_map, exact_marginals
from .scattering import (
    AngleDistribution,
    BetaMixture,
    BlockageMask,
    blockage_mask,
    empirical_angle_distribution,
    fit_beta_mixture,
    scattering_angle,
)
from .signals import Constellation, SignalFrame, demap_bits, get_constellation, make_frame

__all__ = [name for name in dir() if not name.startswith("_")]
