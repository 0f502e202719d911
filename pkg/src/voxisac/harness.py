"""Monte-Carlo experiment harness.

A run sweeps the cartesian grid of (snr_db, rho, e_v, theta_star) points;
each point draws ``trials`` independent realizations (environment,
placement, blockage, channels, frame), runs the selected estimators, and
aggregates sensing/communication metrics.  Per-trial seeds derive from the
master seed by counters, so results are identical for any worker count, and
CSV output is byte-stable.

CSV contract (consumed by the figure renderer):
  - comment lines ``# key = value`` echo the full configuration, the package
    version, and the designated sweep variable;
  - one header row ``snr_db,rho,e_v,theta_star,algorithm,mean,half_width,trials``;
  - one row per (grid point, algorithm); floats use repr-stable %.12g.
"""

from __future__ import annotations

import itertools
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import __version__
from .al_isac import run_al_isac
from .bi_isac import run_bi_isac
from .channel import effective_channel, generate_channels
from .errors import ConfigError
from .gabp import DampingConfig, GabpConfig, StopRule
from .grid import VoxelGrid, sample_environment, sample_placement
from .metrics import MetricReport, ber_symbols, mse_v, ser, voer
from .scattering import BetaMixture, blockage_mask, empirical_angle_distribution, fit_beta_mixture
from .signals import get_constellation, make_frame

ALGORITHMS = ("al-isac", "bi-isac")
METRICS = ("voer", "mse", "ser", "ber")
SWEEP_AXES = ("snr_db", "rho", "e_v", "theta_star")


@dataclass(frozen=True)
class RunConfig:
    """Full description of one experiment; axes are tuples to sweep over."""

    grid_shape: tuple[int, int, int] = (4, 4, 4)
    voxel_edge: float = 1.0
    n_ue: int = 4
    n_ap: int = 3
    n_rx: int = 4
    n_slots: int = 50
    rho: tuple[float, ...] = (0.5,)
    e_v: tuple[float, ...] = (0.015,)
    snr_db: tuple[float, ...] = (15.0,)
    theta_star: tuple[float | None, ...] = (None,)
    blockage_mode: str = "stochastic"
    eta_v: float = 0.9
    eta_x: float = 0.5
    iterations: int = 100
    trials: int = 200
    seed: int = 1234
    algorithms: tuple[str, ...] = ALGORITHMS
    constellation: str = "4qam"
    sigma_h: float = 1.0
    sigma_a: float = 1.0
    sigma_b: float = 1.0
    angle_samples: int = 200_000
    sweep: str = "auto"

    def n_pilot(self, rho: float) -> int:
        return int(round(rho * self.n_slots))

    def validate(self) -> None:
        if any(n < 1 for n in self.grid_shape) or len(self.grid_shape) != 3:
            raise ConfigError(f"bad grid shape {self.grid_shape}")
        for name, value in (("n_ue", self.n_ue), ("n_ap", self.n_ap), ("n_rx", self.n_rx),
                            ("n_slots", self.n_slots), ("iterations", self.iterations),
                            ("trials", self.trials)):
            if value < 1:
                raise ConfigError(f"{name} must be positive, got {value}")
        for r in self.rho:
            if not 0.0 <= r <= 1.0:
                raise ConfigError(f"pilot ratio {r} outside [0, 1]")
            if self.n_pilot(r) < 1:
                raise ConfigError(f"pilot ratio {r} gives an empty pilot block for {self.n_slots} slots")
        for ev in self.e_v:
            if not 0.0 <= ev <= 1.0:
                raise ConfigError(f"occupancy probability {ev} outside [0, 1]")
        for th in self.theta_star:
            if th is not None and not 0.0 <= th <= np.pi:
                raise ConfigError(f"critical angle {th} outside [0, pi]")
        if self.blockage_mode not in ("stochastic", "geometric"):
            raise ConfigError(f"unknown blockage mode {self.blockage_mode!r}")
        for eta in (self.eta_v, self.eta_x):
            if not 0.0 <= eta <= 1.0:
                raise ConfigError(f"damping factor {eta} outside [0, 1]")
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {alg!r}; known: {ALGORITHMS}")
        get_constellation(self.constellation)
        if self.sweep != "auto" and self.sweep not in SWEEP_AXES:
            raise ConfigError(f"sweep must be 'auto' or one of {SWEEP_AXES}")

    @property
    def n_voxels(self) -> int:
        return int(np.prod(self.grid_shape))

    @property
    def n_rx_total(self) -> int:
        return self.n_ap * self.n_rx

    def sweep_variable(self) -> str:
        if self.sweep != "auto":
            return self.sweep
        varying = [name for name in SWEEP_AXES if len(getattr(self, name)) > 1]
        if len(varying) == 1:
            return varying[0]
        if not varying:
            return "snr_db"
        raise ConfigError(f"multiple axes vary {varying}; set sweep explicitly")

    def grid_points(self) -> list[dict]:
        points = []
        for snr, rho, ev, theta in itertools.product(self.snr_db, self.rho, self.e_v, self.theta_star):
            points.append({"snr_db": snr, "rho": rho, "e_v": ev, "theta_star": theta})
        return points

    def gabp_config(self) -> GabpConfig:
        return GabpConfig(
            damping=DampingConfig(eta_v=self.eta_v, eta_x=self.eta_x),
            stop=StopRule(max_iterations=self.iterations),
        )


@dataclass(frozen=True)
class TrialSpec:
    """Everything one worker needs for one grid point (cheap to pickle)."""

    config: RunConfig
    point_index: int
    snr_db: float
    rho: float
    e_v: float
    theta_star: float | None
    mixture: tuple[float, float, float, float, float] | None


@dataclass
class PointResult:
    """Per-trial metric samples for one grid point, keyed alg -> metric."""

    point: dict
    samples: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)


def run_single_trial(spec: TrialSpec, trial: int) -> dict[str, dict[str, float]]:
    """One independent realization: generate, estimate, score."""
    cfg = spec.config
    rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(spec.point_index, trial)))
    grid = VoxelGrid(shape=cfg.grid_shape, voxel_edge=cfg.voxel_edge)
    environment = sample_environment(grid, spec.e_v, rng)
    placement = sample_placement(grid, environment, cfg.n_ue, cfg.n_ap, cfg.n_rx, rng)
    mask = None
    if spec.theta_star is not None:
        mixture = BetaMixture(*spec.mixture) if spec.mixture is not None else None
        mask = blockage_mask(grid, placement, mixture, spec.theta_star, cfg.blockage_mode, rng)
    channels = generate_channels(
        cfg.n_rx_total, cfg.n_ue, cfg.n_voxels, environment, rng,
        variances=(cfg.sigma_h, cfg.sigma_a, cfg.sigma_b), mask=mask,
    )
    constellation = get_constellation(cfg.constellation)
    n_pilot = cfg.n_pilot(spec.rho)
    frame = make_frame(
        effective_channel(channels), constellation, n_pilot, cfg.n_slots - n_pilot, spec.snr_db, rng
    )
    gabp = cfg.gabp_config()

    out: dict[str, dict[str, float]] = {"blind-empty": {"voer": float(np.count_nonzero(environment)) / cfg.n_voxels}}
    for alg in cfg.algorithms:
        if alg == "al-isac":
            res = run_al_isac(
                frame.received, channels.los, channels.voxel_to_ap, channels.ue_to_voxel,
                frame.pilots, frame.noise_var, spec.e_v, constellation, gabp,
            )
            env_cons, sym_cons = res.final, res.symbols
        else:
            res = run_bi_isac(
                frame.received, channels.los, channels.voxel_to_ap, channels.ue_to_voxel,
                frame.pilots, frame.noise_var, spec.e_v, constellation, gabp,
            )
            env_cons, sym_cons = res.environment, res.symbols
        scores = {
            "voer": voer(environment, env_cons.hard),
            "mse": mse_v(environment, env_cons.soft),
        }
        if sym_cons is not None and frame.n_data:
            scores["ser"] = ser(frame.data, sym_cons.hard)
            scores["ber"] = ber_symbols(frame.data, sym_cons.hard, constellation)
        out[alg] = scores
    return out


def _fit_run_mixture(config: RunConfig) -> tuple[float, float, float, float, float] | None:
    """Fit the angle mixture once per run (stochastic blockage only)."""
    if all(th is None for th in config.theta_star) or config.blockage_mode != "stochastic":
        return None
    grid = VoxelGrid(shape=config.grid_shape, voxel_edge=config.voxel_edge)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=config.seed, spawn_key=(0xA76,)))
    dist = empirical_angle_distribution(grid, config.angle_samples, rng)
    return fit_beta_mixture(dist).as_tuple()


def run_points(config: RunConfig, workers: int = 1, log=None) -> list[PointResult]:
    """Execute all grid points; returns per-trial metric samples in trial order."""
    config.validate()
    mixture = _fit_run_mixture(config)
    points = config.grid_points()
    results = []
    for index, point in enumerate(points):
        spec = TrialSpec(
            config=config, point_index=index,
            snr_db=point["snr_db"], rho=point["rho"], e_v=point["e_v"],
            theta_star=point["theta_star"],
            mixture=mixture if point["theta_star"] is not None else None,
        )
        start = time.monotonic()
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                trial_outputs = list(pool.map(
                    _trial_entry, ((spec, t) for t in range(config.trials)),
                    chunksize=max(1, config.trials // (workers * 8)),
                ))
        else:
            trial_outputs = [run_single_trial(spec, t) for t in range(config.trials)]
        samples: dict[str, dict[str, list[float]]] = {}
        for trial_out in trial_outputs:
            for alg, scores in trial_out.items():
                for metric, value in scores.items():
                    samples.setdefault(alg, {}).setdefault(metric, []).append(value)
        result = PointResult(point=point)
        result.samples = {
            alg: {metric: np.asarray(vals) for metric, vals in metrics.items()}
            for alg, metrics in samples.items()
        }
        results.append(result)
        if log is not None:
            log(f"point {index + 1}/{len(points)} {point} done in {time.monotonic() - start:.1f}s")
    return results


def _trial_entry(args: tuple[TrialSpec, int]):
    return run_single_trial(*args)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _config_comment_lines(config: RunConfig, sweep_var: str) -> list[str]:
    lines = [f"# version = {__version__}", f"# sweep_variable = {sweep_var}"]
    for f in fields(config):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            value = ",".join(_fmt(v) for v in value)
        lines.append(f"# {f.name} = {value}")
    return lines


def write_metric_csvs(config: RunConfig, results: list[PointResult], outdir: str) -> dict[str, str]:
    """One CSV per metric; returns metric -> path."""
    os.makedirs(outdir, exist_ok=True)
    sweep_var = config.sweep_variable()
    paths = {}
    header = "snr_db,rho,e_v,theta_star,algorithm,mean,half_width,trials"
    for metric in METRICS:
        rows = []
        for result in results:
            for alg in list(config.algorithms) + ["blind-empty"]:
                samples = result.samples.get(alg, {}).get(metric)
                if samples is None:
                    continue
                report = MetricReport.from_samples(metric, samples)
                rows.append(
                    ",".join(
                        [
                            _fmt(result.point["snr_db"]),
                            _fmt(result.point["rho"]),
                            _fmt(result.point["e_v"]),
                            _fmt(result.point["theta_star"]),
                            alg,
                            _fmt(report.mean),
                            _fmt(report.half_width),
                            str(report.trials),
                        ]
                    )
                )
        if not rows:
            continue
        path = os.path.join(outdir, f"{metric}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(_config_comment_lines(config, sweep_var)) + "\n")
            fh.write(header + "\n")
            fh.write("\n".join(rows) + "\n")
        paths[metric] = path
    return paths


def run_experiment(config: RunConfig, outdir: str, workers: int = 1, log=None) -> dict[str, str]:
    """Full pipeline: sweep, aggregate, emit CSVs.  Returns metric -> CSV path."""
    results = run_points(config, workers=workers, log=log)
    return write_metric_csvs(config, results, outdir)


# -- convergence study (damping traces) ----------------------------------------


def run_convergence_study(
    config: RunConfig,
    damping_pairs: tuple[tuple[float, float], ...] = ((0.9, 0.5), (0.5, 0.5), (0.0, 0.0)),
    outdir: str | None = None,
    log=None,
) -> list[dict]:
    """Per-iteration environment-replica MSE and symbol-replica SER traces.

    Runs both estimators for each (eta_v, eta_x) pair at the first grid
    point and averages traces over trials.  Emits convergence.csv with
    columns iteration,algorithm,eta_v,eta_x,mse_mean,ser_mean,trials when an
    output directory is given.
    """
    config.validate()
    point = config.grid_points()[0]
    constellation = get_constellation(config.constellation)
    records: dict[tuple, list] = {}
    for eta_v, eta_x in damping_pairs:
        cfg = replace(config, eta_v=eta_v, eta_x=eta_x)
        for trial in range(cfg.trials):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=cfg.seed, spawn_key=(0xC0, trial))
            )
            grid = VoxelGrid(shape=cfg.grid_shape, voxel_edge=cfg.voxel_edge)
            environment = sample_environment(grid, point["e_v"], rng)
            sample_placement(grid, environment, cfg.n_ue, cfg.n_ap, cfg.n_rx, rng)
            channels = generate_channels(
                cfg.n_rx_total, cfg.n_ue, cfg.n_voxels, environment, rng,
                variances=(cfg.sigma_h, cfg.sigma_a, cfg.sigma_b),
            )
            n_pilot = cfg.n_pilot(point["rho"])
            frame = make_frame(
                effective_channel(channels), constellation, n_pilot,
                cfg.n_slots - n_pilot, point["snr_db"], rng,
            )
            gabp = cfg.gabp_config()

            def env_mse(state_replica) -> float:
                return float(np.mean(np.abs(state_replica - environment[:, None, None]) ** 2))

            def sym_ser(replica_data) -> float:
                hard = constellation.project(replica_data)
                return float(np.mean(hard != frame.data[:, None, :]))

            for alg in cfg.algorithms:
                if alg == "bi-isac":
                    def monitor(it, state, acc=records.setdefault((alg, eta_v, eta_x), [])):
                        _accumulate(acc, it, trial,
                                    env_mse(state.env.replica),
                                    sym_ser(state.sym.replica[:, :, n_pilot:]))
                    run_bi_isac(
                        frame.received, channels.los, channels.voxel_to_ap, channels.ue_to_voxel,
                        frame.pilots, frame.noise_var, point["e_v"], constellation, gabp,
                        monitor=monitor,
                    )
                else:
                    stages = {
                        "initial": records.setdefault((f"{alg}-initial", eta_v, eta_x), []),
                        "final": records.setdefault((f"{alg}-final", eta_v, eta_x), []),
                    }
                    monitors = {
                        name: (lambda it, state, acc=acc: _accumulate(acc, it, trial, env_mse(state.replica), None))
                        for name, acc in stages.items()
                    }
                    run_al_isac(
                        frame.received, channels.los, channels.voxel_to_ap, channels.ue_to_voxel,
                        frame.pilots, frame.noise_var, point["e_v"], constellation, gabp,
                        monitors=monitors,
                    )
        if log is not None:
            log(f"convergence pair eta_v={eta_v} eta_x={eta_x} done")

    rows = []
    for (alg, eta_v, eta_x), acc in sorted(records.items()):
        by_iter: dict[int, list] = {}
        for it, _trial, mse_val, ser_val in acc:
            by_iter.setdefault(it, []).append((mse_val, ser_val))
        for it in sorted(by_iter):
            entries = by_iter[it]
            mses = [m for m, _ in entries]
            sers = [s for _, s in entries if s is not None]
            rows.append(
                {
                    "iteration": it,
                    "algorithm": alg,
                    "eta_v": eta_v,
                    "eta_x": eta_x,
                    "mse_mean": float(np.mean(mses)),
                    "ser_mean": float(np.mean(sers)) if sers else None,
                    "trials": len(entries),
                }
            )
    if outdir is not None:
        os.makedirs(outdir, exist_ok=True)
        path = os.path.join(outdir, "convergence.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(_config_comment_lines(config, "iteration")) + "\n")
            fh.write("iteration,algorithm,eta_v,eta_x,mse_mean,ser_mean,trials\n")
            for row in rows:
                fh.write(
                    ",".join(
                        [
                            str(row["iteration"]), row["algorithm"], _fmt(row["eta_v"]),
                            _fmt(row["eta_x"]), _fmt(row["mse_mean"]), _fmt(row["ser_mean"]),
                            str(row["trials"]),
                        ]
                    )
                    + "\n"
                )
    return rows


def _accumulate(acc: list, iteration: int, trial: int, mse_val: float, ser_val) -> None:
    acc.append((iteration, trial, mse_val, ser_val))


def stderr_log(message: str) -> None:
    print(message, file=sys.stderr, flush=True)
