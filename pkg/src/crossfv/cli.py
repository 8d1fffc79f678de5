"""Command-line entry points.

    crossfv validate <config>          check config and tensor validity
    crossfv run <config>               single trajectory + artifacts
    crossfv sweep <config> --nu ...    viscosity sweep vs darcy reference
    crossfv refine <config> --cells ...  grid self-convergence study

Exit codes: 0 success, 1 validation failure, 2 runtime failure.
"""

import argparse
import sys

from .brinkman import SolverError
from .config import (ConfigError, build_grid_from, build_initial, build_laws,
                     build_tensor, parse_config)
from .evolution import StepError
from .harness import run_refinement, run_single, run_sweep
from .tensors import validate_tensor


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="crossfv",
        description="Finite-volume simulator for a two-species "
                    "cross-diffusion system with viscous (Brinkman) and "
                    "inviscid (darcy) pressure coupling.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to a config file")
        p.add_argument("--out", default=None,
                       help="override the output directory")
        return p

    add("validate", "validate the config and its anisotropy tensor")
    add("run", "run one trajectory and write its artifacts")
    p_sweep = add("sweep", "run a viscosity sweep against a darcy reference")
    p_sweep.add_argument("--nu", required=True,
                         help="comma-separated descending viscosities")
    p_sweep.add_argument("--fine-reference", action="store_true",
                         help="compute the darcy reference on a doubled "
                              "grid and restrict (robustness check)")
    p_refine = add("refine", "run a grid-refinement self-convergence study")
    p_refine.add_argument("--cells", required=True,
                          help="comma-separated ascending cell counts, "
                               "each dividing the next")
    return parser


def _load_config(args):
    with open(args.config, encoding="utf-8") as fh:
        text = fh.read()
    cfg = parse_config(text)
    if args.out is not None:
        cfg = cfg.with_directory(args.out)
    return cfg


def _parse_list(raw, kind, what):
    try:
        return [kind(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"--{what}: expected a comma-separated list "
                          f"of numbers, got {raw!r}") from None


def _cmd_validate(args):
    cfg = _load_config(args)
    grid = build_grid_from(cfg)
    tensor = build_tensor(cfg, grid)
    laws = build_laws(cfg)
    build_initial(cfg, grid, laws)
    t_final = cfg.time.t_final
    times = sorted({0.0, 0.5 * t_final, t_final})
    report = validate_tensor(tensor, times)
    print(f"tensor preset {tensor.preset!r}: "
          f"{'OK' if report.passed else 'FAILED'}")
    print(f"  min eigenvalue {report.min_eigenvalue:g} "
          f"(floor {tensor.ellipticity_floor:g}), "
          f"max asymmetry {report.max_asymmetry:g}, "
          f"sup norm {report.sup_norm:g}")
    if not report.passed:
        print(f"  {report.message}", file=sys.stderr)
        return 1
    print(f"config OK: {grid.dimension}D, {grid.cells_per_axis} cells, "
          f"boundary {grid.boundary}, nu = {cfg.model.nu:g}")
    return 0


def _cmd_run(args):
    cfg = _load_config(args)
    res = run_single(cfg)
    final_rec = res.records[-1]
    print(f"completed {res.steps} steps to t = {res.final_state.t:g}")
    print(f"  final mass {final_rec.mass_total:.12g}, "
          f"max density over run {res.recorder.max_linf:.12g}")
    print(f"  entropy audit residual {res.audit.residual:.6g}, "
          f"clip warnings {res.recorder.clip_warnings}")
    print(f"  outputs in {res.out_dir}")
    return 0


def _cmd_sweep(args):
    cfg = _load_config(args)
    nus = _parse_list(args.nu, float, "nu")
    reference = "darcy-fine" if args.fine_reference else "darcy"
    table = run_sweep(cfg, nus, reference=reference)
    print("nu        l2_m_minus_n  l2_n_minus_n0  l2_gradm_minus_gradn0")
    for row in table.rows:
        print(f"{row.nu:<9g} {row.l2_m_minus_n:<13.6g} "
              f"{row.l2_n_minus_n0:<14.6g} {row.l2_gradm_minus_gradn0:.6g}")
    for name, fit in table.fits.items():
        ci = (f", 95% CI [{fit.slope_ci[0]:.3f}, {fit.slope_ci[1]:.3f}]"
              if fit.slope_ci else "")
        print(f"fitted slope {name}: {fit.slope:.4f} "
              f"(r^2 = {fit.r_squared:.4f}{ci})")
    return 0


def _cmd_refine(args):
    cfg = _load_config(args)
    cells = _parse_list(args.cells, int, "cells")
    report = run_refinement(cfg, cells)
    for idx, n in enumerate(report.cells):
        line = f"N = {n:<5d} audit residual {report.audit_residuals[idx]:.6g}"
        if idx < len(report.self_errors):
            line += f", self error vs next {report.self_errors[idx]:.6g}"
        print(line)
    if report.error_fit:
        print(f"self-convergence order {report.error_fit.slope:.4f}")
    if report.residual_fit:
        print(f"audit residual order {report.residual_fit.slope:.4f}")
    return 0


_COMMANDS = {"validate": _cmd_validate, "run": _cmd_run,
             "sweep": _cmd_sweep, "refine": _cmd_refine}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, StepError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
