"""Alternating pipeline: pilot-only sensing, detection, full-frame re-sensing.

Three strictly sequential stages built from the two linear modules:

1. estimate the environment from the pilot block alone;
2. detect the data symbols through the effective channel composed from that
   initial estimate;
3. re-estimate the environment over the whole frame, feeding the detected
   symbols back as known inputs and warm-starting the replicas from stage 1.

One outer pass suffices; an optional pass count repeats stages 2 and 3 with
modular feedback.  Stage 3 consumes hard-projected symbols by default (the
known-symbol module assumes zero symbol uncertainty); a flag switches to the
soft consensus values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import compose_effective
from .errors import ConfigError
from .gabp import GabpConfig
from .linear_v import EnvironmentConsensus, EnvironmentEstimator
from .linear_x import SymbolConsensus, SymbolEstimator
from .signals import Constellation


@dataclass
class AlIsacResult:
    initial: EnvironmentConsensus          # stage-1 pilot-only estimate
    symbols: SymbolConsensus | None        # stage-2 data block (None when n_data = 0)
    final: EnvironmentConsensus            # stage-3 full-frame estimate
    replica_changes: dict[str, list[float]] = field(default_factory=dict)


def run_al_isac(
    received: np.ndarray,
    los: np.ndarray,
    voxel_to_ap: np.ndarray,
    ue_to_voxel: np.ndarray,
    pilots: np.ndarray,
    noise_var: float,
    occupancy_prob: float,
    constellation: Constellation,
    config: GabpConfig | None = None,
    outer_passes: int = 1,
    stage3_symbols: str = "hard",
    monitors: dict | None = None,
) -> AlIsacResult:
    """Run the alternating pipeline on one frame.

    ``received`` covers the whole frame; its first ``pilots.shape[1]`` columns
    are the pilot phase.  ``monitors`` may map stage names ("initial",
    "symbols", "final") to per-iteration callbacks.
    """
    config = config or GabpConfig()
    if stage3_symbols not in ("hard", "soft"):
        raise ConfigError(f"stage3_symbols must be 'hard' or 'soft', got {stage3_symbols!r}")
    if outer_passes < 1:
        raise ConfigError("need at least one outer pass")
    n_pilot = pilots.shape[1]
    if n_pilot < 1:
        raise ConfigError("alternating pipeline requires at least one pilot slot")
    n_data = received.shape[1] - n_pilot
    if n_data < 0:
        raise ConfigError("received matrix shorter than the pilot block")
    monitors = monitors or {}
    changes: dict[str, list[float]] = {}

    stage1 = EnvironmentEstimator(
        received[:, :n_pilot], los, voxel_to_ap, ue_to_voxel, pilots,
        noise_var, occupancy_prob, config,
    )
    res1 = stage1.run(stage1.initialize(), monitor=monitors.get("initial"))
    changes["initial"] = res1.replica_changes
    initial = res1.consensus
    if n_data == 0:
        return AlIsacResult(initial=initial, symbols=None, final=initial, replica_changes=changes)

    env_soft = initial.soft
    symbols: SymbolConsensus | None = None
    final = initial
    for _ in range(outer_passes):
        effective = compose_effective(los, voxel_to_ap, ue_to_voxel, env_soft)
        stage2 = SymbolEstimator(
            received[:, n_pilot:], effective, noise_var, constellation, config
        )
        res2 = stage2.run(stage2.initialize(), monitor=monitors.get("symbols"))
        changes["symbols"] = res2.replica_changes
        symbols = res2.consensus

        detected = symbols.hard if stage3_symbols == "hard" else symbols.soft
        transmit = np.concatenate([pilots, detected], axis=1)
        stage3 = EnvironmentEstimator(
            received, los, voxel_to_ap, ue_to_voxel, transmit,
            noise_var, occupancy_prob, config,
        )
        state3 = stage3.initialize(replicas=env_soft)
        res3 = stage3.run(state3, monitor=monitors.get("final"))
        changes["final"] = res3.replica_changes
        final = res3.consensus
        env_soft = final.soft
    return AlIsacResult(initial=initial, symbols=symbols, final=final, replica_changes=changes)
