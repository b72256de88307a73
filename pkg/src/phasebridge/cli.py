"""Command-line entry point.

Subcommands:
    check-compat   evaluate the marginal compatibility residual
    build-field    construct the connecting field and export samples
    simulate       run the transport solver and emit diagnostics
    convergence    L1 misfit under grid refinement

Configuration is line-oriented ``key = value`` text with ``#`` comments and
comma-separated lists; command-line flags override file keys.  Exit codes:
0 success, 1 config or I/O error, 2 compatibility failure, 3 numerical
blow-up.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .grid import PhaseGrid
from .densities import (
    DensityPair,
    check_compatibility,
    density_from_name,
    preset_pair,
)
from .diagnostics import (
    convergence_study,
    records_from_snapshots,
    write_convergence_csv,
    write_diagnostics_csv,
)
from .elliptic import CompatibilityError
from .field import build_field, sample_field, write_field_csv
from .liouville import BlowupError, SolverConfig, simulate
from .snapshot import write_snapshot
from . import figures

PAIR_PRESETS = ("torus", "gaussian-shift", "gaussian-transport")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    preset: str = "torus"
    f: str = ""                    # optional 'gridded:<path>' override
    g: str = ""
    eps: float = 0.3
    eta: float = 0.5
    eps_g: float = math.nan  # target-density eps override; defaults to eps
    nx: int = 256
    nv: int = 256
    cfl_x: float = 0.8
    cfl_v: float = 0.8
    t_end: float = 1.0
    output_times: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    field_method: str = "closed-form"
    out_dir: str = "out"
    grids: tuple[int, ...] = (64, 128, 256)
    study_cfl: float = 0.5  # refinement study stays inside the monotone CFL margin
    figures: bool = True


_FLOAT_KEYS = {"eps", "eta", "eps_g", "cfl_x", "cfl_v", "t_end", "study_cfl"}
_INT_KEYS = {"nx", "nv"}
_BOOL_KEYS = {"figures"}


def parse_config_file(path: str) -> dict:
    """Parse ``key = value`` lines into RunConfig keyword arguments."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    known = {f.name for f in fields(RunConfig)}
    out: dict = {}
    for lineno, raw in enumerate(p.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            if key in _FLOAT_KEYS:
                out[key] = float(value)
            elif key in _INT_KEYS:
                out[key] = int(value)
            elif key in _BOOL_KEYS:
                out[key] = value.lower() in ("1", "true", "yes", "on")
            elif key == "output_times":
                out[key] = tuple(float(s) for s in value.split(","))
            elif key == "grids":
                out[key] = tuple(int(s) for s in value.split(","))
            else:
                out[key] = value
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return out


def _validate(cfg: RunConfig) -> RunConfig:
    if cfg.preset not in PAIR_PRESETS and not (cfg.f and cfg.g):
        raise ConfigError(f"unknown preset {cfg.preset!r}; "
                          f"choose one of {PAIR_PRESETS} or give f/g gridded paths")
    if not (0.0 < cfg.cfl_x <= 1.0 and 0.0 < cfg.cfl_v <= 1.0 and 0.0 < cfg.study_cfl <= 1.0):
        raise ConfigError("CFL numbers must lie in (0, 1]")
    if cfg.nx <= 0 or cfg.nv <= 0:
        raise ConfigError("nx and nv must be positive")
    if cfg.field_method not in ("closed-form", "numeric"):
        raise ConfigError("field_method must be 'closed-form' or 'numeric'")
    if abs(cfg.eps) + abs(cfg.eta) >= 1.0:
        raise ConfigError("need |eps| + |eta| < 1 for positivity")
    if not math.isnan(cfg.eps_g) and abs(cfg.eps_g) + abs(cfg.eta) >= 1.0:
        raise ConfigError("need |eps_g| + |eta| < 1 for positivity")
    for tok in (cfg.f, cfg.g):
        if tok:
            if not tok.startswith("gridded:"):
                raise ConfigError(f"density override must be 'gridded:<path>', got {tok!r}")
            if not Path(tok[len("gridded:"):]).is_file():
                raise ConfigError(f"gridded snapshot not found: {tok[len('gridded:'):]}")
    return cfg


def _resolve_pair(cfg: RunConfig) -> DensityPair:
    if cfg.f and cfg.g:
        return DensityPair("gridded", density_from_name(cfg.f),
                           density_from_name(cfg.g), "periodic")
    pair = preset_pair(cfg.preset, eps=cfg.eps, eta=cfg.eta)
    if cfg.preset == "torus" and not math.isnan(cfg.eps_g) and cfg.eps_g != cfg.eps:
        from .densities import TorusTrigG

        pair = replace(pair, g=TorusTrigG(cfg.eps_g, cfg.eta))
    return pair


def _solver_config(cfg: RunConfig) -> SolverConfig:
    try:
        return SolverConfig(cfl_x=cfg.cfl_x, cfl_v=cfg.cfl_v, t_end=cfg.t_end,
                            output_times=cfg.output_times)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_check_compat(cfg: RunConfig) -> int:
    pair = _resolve_pair(cfg)
    if pair.bc == "neumann":
        lo, hi = pair.v_window
        report = check_compatibility(pair.f, pair.g,
                                     x_points=np.linspace(lo, hi, cfg.nx + 1),
                                     nv=max(cfg.nv, 1024), v_window=pair.v_window)
    else:
        report = check_compatibility(pair.f, pair.g, PhaseGrid(cfg.nx, cfg.nv))
    ok = report.passed(1e-8)
    print(f"pair: {pair.name}")
    print(f"max marginal residual over {len(report.x)} x-probes: {report.max_residual:.6e}")
    print("compatible (tolerance 1e-08)" if ok else "INCOMPATIBLE (tolerance 1e-08)")
    return 0 if ok else 2


def cmd_build_field(cfg: RunConfig) -> int:
    pair = _resolve_pair(cfg)
    grid = PhaseGrid(cfg.nx, cfg.nv)
    if pair.bc == "neumann" and cfg.field_method == "numeric":
        raise ConfigError("numeric fields are grid-backed on the periodic square; "
                          "the gaussian-transport pair ships a closed form")
    accel = build_field(pair.f, pair.g, method=cfg.field_method, grid=grid)

    if pair.bc == "neumann":
        lo, hi = pair.v_window
        x = np.linspace(lo, hi, cfg.nx, endpoint=False) + (hi - lo) / (2 * cfg.nx)
        v = np.linspace(lo, hi, cfg.nv, endpoint=False) + (hi - lo) / (2 * cfg.nv)
        extent = (lo, hi, lo, hi)
    else:
        x, v = grid.x_centers, grid.v_centers
        extent = (0.0, 2.0 * math.pi, -math.pi, math.pi)

    out = _out_dir(cfg)
    write_field_csv(out / "field.csv", accel, cfg.output_times, x, v)
    for t in cfg.output_times:
        samples = sample_field(accel, float(t), x, v)
        write_snapshot(out / f"field_t{t:g}.snap", float(t), samples)
        if cfg.figures:
            figures.save_field_figure(out / f"field_t{t:g}.png", samples, t, extent)
    print(f"field written to {out} (max |a| bound {accel.max_abs:.6g})")
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    pair = _resolve_pair(cfg)
    if pair.bc == "neumann":
        raise ConfigError("the transport solver runs on the periodic square; "
                          "use the torus or gaussian-shift presets")
    grid = PhaseGrid(cfg.nx, cfg.nv)
    config = _solver_config(cfg)
    accel = build_field(pair.f, pair.g, method=cfg.field_method, grid=grid)
    snapshots = simulate(pair.f, accel, grid, config)

    out = _out_dir(cfg)
    records = records_from_snapshots(snapshots, pair.f, pair.g)
    write_diagnostics_csv(out / "diagnostics.csv", records)
    for state in snapshots:
        write_snapshot(out / f"density_t{state.t:g}.snap", state.t, state.rho.values)
        if cfg.figures:
            figures.save_density_figure(out / f"density_t{state.t:g}.png",
                                        state.rho.values, state.t)
    if cfg.figures:
        figures.save_diagnostics_figure(out / "diagnostics.png", records)
    for r in records:
        print(f"t={r.t:<6g} mass={r.mass:.8f} l1={r.l1_error:.6e} "
              f"min={r.min_rho:.3e} steps={r.steps}")
    print(f"diagnostics written to {out / 'diagnostics.csv'}")
    return 0


def cmd_convergence(cfg: RunConfig) -> int:
    if len(cfg.grids) < 2:
        raise ConfigError("convergence needs at least two grids")
    if cfg.preset != "torus":
        raise ConfigError("convergence study runs on the torus preset")
    rows = convergence_study(cfg.grids, eps=cfg.eps, eta=cfg.eta, cfl=cfg.study_cfl,
                             field_method=cfg.field_method)
    out = _out_dir(cfg)
    write_convergence_csv(out / "convergence.csv", rows)
    if cfg.figures:
        figures.save_convergence_figure(out / "convergence.png", rows)
    for row in rows:
        order = "" if math.isnan(row.observed_order) else f" order={row.observed_order:.3f}"
        print(f"n={row.n:<5d} l1={row.l1_final:.6e}{order}")
    orders_ok = all(row.observed_order >= 1.0 for row in rows[1:])
    if not orders_ok:
        print("observed order below 1.0")
        return 3
    return 0


class _Parser(argparse.ArgumentParser):
    # usage errors must exit 1, not argparse's default 2 (reserved for
    # compatibility failures)
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="phasebridge", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("check-compat", "build-field", "simulate", "convergence"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="path to key = value config file")
        p.add_argument("--preset", choices=PAIR_PRESETS)
        p.add_argument("--nx", type=int)
        p.add_argument("--nv", type=int)
        p.add_argument("--cfl", type=float, help="sets both cfl_x and cfl_v")
        p.add_argument("--eps", type=float)
        p.add_argument("--eta", type=float)
        p.add_argument("--out", help="output directory")
        p.add_argument("--method", choices=("closed-form", "numeric"))
        p.add_argument("--times", help="comma-separated output times")
        p.add_argument("--grids", help="comma-separated grid sizes (convergence)")
        p.add_argument("--no-figures", action="store_true")
    return parser


def _merge_config(args: argparse.Namespace) -> RunConfig:
    kwargs = parse_config_file(args.config) if args.config else {}
    cfg = RunConfig(**kwargs)
    overrides: dict = {}
    if args.preset is not None:
        overrides["preset"] = args.preset
    if args.nx is not None:
        overrides["nx"] = args.nx
    if args.nv is not None:
        overrides["nv"] = args.nv
    if args.cfl is not None:
        overrides["cfl_x"] = overrides["cfl_v"] = overrides["study_cfl"] = args.cfl
    if args.eps is not None:
        overrides["eps"] = args.eps
    if args.eta is not None:
        overrides["eta"] = args.eta
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.method is not None:
        overrides["field_method"] = args.method
    if args.times is not None:
        try:
            overrides["output_times"] = tuple(float(s) for s in args.times.split(","))
        except ValueError:
            raise ConfigError(f"bad --times value: {args.times!r}") from None
    if args.grids is not None:
        try:
            overrides["grids"] = tuple(int(s) for s in args.grids.split(","))
        except ValueError:
            raise ConfigError(f"bad --grids value: {args.grids!r}") from None
    if args.no_figures:
        overrides["figures"] = False
    return _validate(replace(cfg, **overrides))


_COMMANDS = {
    "check-compat": cmd_check_compat,
    "build-field": cmd_build_field,
    "simulate": cmd_simulate,
    "convergence": cmd_convergence,
}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        cfg = _merge_config(args)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    except CompatibilityError as exc:
        print(f"compatibility failure: {exc}", file=sys.stderr)
        return 2
    except BlowupError as exc:
        print(f"numerical blow-up: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
