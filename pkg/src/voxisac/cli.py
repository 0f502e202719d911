"""Command-line interface.

Subcommands:
  run          execute an experiment described by a key=value config file
  preset       execute a shipped experiment preset
  complexity   emit the relative-complexity curve data as CSV
  angles       emit the empirical scattering-angle histogram as CSV
  fit-mixture  fit the beta mixture to the empirical histogram, emit CSV

Results are CSV files in ``--outdir`` (default: $VOXISAC_OUTDIR or
./results).  Progress goes to stderr; only results reach files/stdout.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import fields

import numpy as np

from . import __version__
from .complexity import relative_complexity, rho_eq, rho_min
from .errors import ConfigError
from .grid import VoxelGrid
from .harness import RunConfig, run_convergence_study, run_experiment, stderr_log
from .presets import PRESETS, preset_config
from .scattering import empirical_angle_distribution, fit_beta_mixture

_TUPLE_FIELDS = {
    "grid_shape": int,
    "rho": float,
    "e_v": float,
    "snr_db": float,
    "theta_star": "angle",
    "algorithms": str,
}
_SCALAR_FIELDS = {f.name: f.type for f in fields(RunConfig) if f.name not in _TUPLE_FIELDS}


def _parse_angle(token: str):
    """Angles accept plain floats, 'none', and pi expressions like '3pi/4'."""
    token = token.strip().lower()
    if token in ("none", ""):
        return None
    if "pi" in token:
        left, _, right = token.partition("pi")
        value = float(left) if left not in ("", "+", "-") else float(left + "1")
        if right.startswith("/"):
            value /= float(right[1:])
        elif right:
            raise ConfigError(f"cannot parse angle {token!r}")
        return value * math.pi
    return float(token)


def _coerce(name: str, raw: str):
    raw = raw.strip()
    if name in _TUPLE_FIELDS:
        conv = _TUPLE_FIELDS[name]
        items = [s for s in raw.split(",") if s.strip() != ""]
        if conv == "angle":
            return tuple(_parse_angle(s) for s in items)
        return tuple(conv(s.strip()) for s in items)
    kind = _SCALAR_FIELDS.get(name)
    if kind is None:
        raise ConfigError(f"unknown config key {name!r}")
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def parse_config_file(path: str) -> dict:
    """Plain-text ``key = value`` file; '#' starts a comment."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, raw = line.partition("=")
            values[key.strip()] = _coerce(key.strip(), raw)
    return values


def _apply_sets(values: dict, sets: list[str]) -> dict:
    for item in sets or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        values[key.strip()] = _coerce(key.strip(), raw)
    return values


def _default_outdir() -> str:
    return os.environ.get("VOXISAC_OUTDIR", "results")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--outdir", default=None, help="output directory (default: $VOXISAC_OUTDIR or ./results)")
    parser.add_argument("--workers", type=int, default=1, help="parallel trial workers")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE", dest="sets",
                        help="override a config field (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="voxisac", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"voxisac {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("--config", required=True, help="key = value config file")
    _add_common(p_run)

    p_preset = sub.add_parser("preset", help="run a shipped preset")
    p_preset.add_argument("name", choices=PRESETS)
    p_preset.add_argument("--full-scale", action="store_true", help="use the original study dimensions")
    _add_common(p_preset)

    p_cx = sub.add_parser("complexity", help="emit relative-complexity curves")
    p_cx.add_argument("--users", default="1,2,4,8,16", help="comma-separated UE counts")
    p_cx.add_argument("--steps", type=int, default=101, help="pilot-ratio grid resolution")
    p_cx.add_argument("--outdir", default=None)

    for cmd, help_text in (("angles", "emit the empirical angle histogram"),
                           ("fit-mixture", "fit the beta mixture to the histogram")):
        p = sub.add_parser(cmd, help=help_text)
        p.add_argument("--grid", default="8,8,8", help="voxel counts, e.g. 8,8,8")
        p.add_argument("--voxel-edge", type=float, default=1.0)
        p.add_argument("--samples", type=int, default=1_000_000)
        p.add_argument("--bins", type=int, default=128)
        p.add_argument("--seed", type=int, default=1234)
        p.add_argument("--outdir", default=None)
    return parser


def _cmd_run(args) -> int:
    values = _apply_sets(parse_config_file(args.config), args.sets)
    config = RunConfig(**values)
    outdir = args.outdir or _default_outdir()
    paths = run_experiment(config, outdir, workers=args.workers, log=stderr_log)
    for metric, path in sorted(paths.items()):
        print(f"{metric}: {path}")
    return 0


def _cmd_preset(args) -> int:
    config = preset_config(args.name, full_scale=args.full_scale)
    if args.sets:
        from .presets import apply_overrides

        config = apply_overrides(config, **_apply_sets({}, args.sets))
    outdir = args.outdir or os.path.join(_default_outdir(), args.name)
    if args.name == "fig7-convergence":
        run_convergence_study(config, outdir=outdir, log=stderr_log)
        print(f"convergence: {os.path.join(outdir, 'convergence.csv')}")
        return 0
    paths = run_experiment(config, outdir, workers=args.workers, log=stderr_log)
    for metric, path in sorted(paths.items()):
        print(f"{metric}: {path}")
    return 0


def _cmd_complexity(args) -> int:
    users = [int(s) for s in args.users.split(",") if s.strip()]
    outdir = args.outdir or _default_outdir()
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "complexity.csv")
    rhos = np.linspace(0.0, 1.0, args.steps)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# version = {__version__}\n# sweep_variable = rho\n")
        for n_ue in users:
            fh.write(f"# rho_min({n_ue}) = {rho_min(n_ue):.12g}\n")
            if n_ue >= 2:
                fh.write(f"# rho_eq({n_ue}) = {rho_eq(n_ue):.12g}\n")
        fh.write("rho,n_ue,factor\n")
        for n_ue in users:
            for rho in rhos:
                fh.write(f"{rho:.12g},{n_ue},{relative_complexity(float(rho), n_ue):.12g}\n")
    print(f"complexity: {path}")
    return 0


def _angle_histogram(args):
    shape = tuple(int(s) for s in args.grid.split(","))
    grid = VoxelGrid(shape=shape, voxel_edge=args.voxel_edge)
    rng = np.random.default_rng(args.seed)
    return empirical_angle_distribution(grid, args.samples, rng, n_bins=args.bins)


def _cmd_angles(args) -> int:
    dist = _angle_histogram(args)
    outdir = args.outdir or _default_outdir()
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "angles.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# version = {__version__}\n# grid = {args.grid}\n# samples = {args.samples}\n")
        fh.write("theta,density\n")
        for theta, density in zip(dist.bin_centers, dist.density):
            fh.write(f"{theta:.12g},{density:.12g}\n")
    print(f"angles: {path}")
    return 0


def _cmd_fit_mixture(args) -> int:
    dist = _angle_histogram(args)
    mixture = fit_beta_mixture(dist)
    outdir = args.outdir or _default_outdir()
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "mixture.csv")
    fitted = mixture.pdf(dist.bin_centers)
    l1 = float(np.sum(np.abs(fitted - dist.density)) * dist.bin_width)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# version = {__version__}\n# grid = {args.grid}\n# samples = {args.samples}\n")
        fh.write(f"# weight = {mixture.weight:.12g}\n")
        for name in ("a1", "b1", "a2", "b2"):
            fh.write(f"# {name} = {getattr(mixture, name):.12g}\n")
        fh.write(f"# l1_error = {l1:.12g}\n")
        fh.write("theta,empirical_density,fitted_density\n")
        for theta, emp, fit in zip(dist.bin_centers, dist.density, fitted):
            fh.write(f"{theta:.12g},{emp:.12g},{fit:.12g}\n")
    print(f"mixture: {path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "preset":
            return _cmd_preset(args)
        if args.command == "complexity":
            return _cmd_complexity(args)
        if args.command == "angles":
            return _cmd_angles(args)
        if args.command == "fit-mixture":
            return _cmd_fit_mixture(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
