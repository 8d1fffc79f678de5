"""Experiment drivers: single runs, the viscosity sweep, grid refinement.

run_single executes one configured trajectory and writes its artifacts.
run_sweep compares a family of viscous runs against an inviscid (darcy)
reference computed on the same grid, sampling all trajectories on one
shared, uniform time grid so the time-integrated distances are taken
over identical points for every member.  run_refinement measures
self-convergence under nested grids via exact block-average restriction.
Members execute sequentially in deterministic order; each member writes
into its own subdirectory, and the tables are assembled at the end (and
rewritten after every member, so a failed sweep leaves a valid partial
table on disk).
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .brinkman import BrinkmanOperator, SolverConfig, solve_brinkman
from .config import (ConfigError, build_grid_from, build_initial, build_laws,
                     build_tensor, config_digest)
from .diagnostics import (FieldCapture, RunRecorder, entropy_audit,
                          face_l2_distance)
from .evolution import State, StepperConfig, run
from .fields import ScalarField, build_grid, gradient
from . import io as out_io

#: Number of shared sample times for sweep distance integrals.
SWEEP_SAMPLES = 65

SUBSEQUENCE_NOTE = (
    "Slopes are fitted to the full computed viscosity family; the "
    "underlying limit statement only guarantees convergence along a "
    "subsequence, which a finite sweep cannot distinguish.")


@dataclass
class RunResult:
    config: object
    grid: object
    tensor: object
    laws: tuple
    final_state: State
    steps: int
    recorder: RunRecorder
    audit: object
    capture: FieldCapture = None
    out_dir: str = None

    @property
    def records(self):
        return self.recorder.records


@dataclass
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    slope_ci: tuple = None


@dataclass
class SweepRow:
    nu: float
    l2_m_minus_n: float
    l2_n_minus_n0: float
    l2_gradm_minus_gradn0: float
    dissipation_integral: float
    sqrt_nu_gradm_sup: float


@dataclass
class ConvergenceTable:
    rows: list
    fits: dict
    sample_times: np.ndarray
    note: str = SUBSEQUENCE_NOTE
    extras: dict = field(default_factory=dict)


@dataclass
class RefinementReport:
    cells: tuple
    self_errors: list
    audit_residuals: list
    error_fit: RateFit = None
    residual_fit: RateFit = None
    results: list = field(default_factory=list)


def _solver_config(cfg):
    s = cfg.solver
    return SolverConfig(rel_tolerance=s.rel_tolerance,
                        max_iterations=s.max_iterations,
                        preconditioner=s.preconditioner)


def _stepper_config(cfg, tensor, laws):
    t_final = cfg.time.t_final
    if tensor.time_dependent:
        sample_times = np.linspace(0.0, max(t_final, 1e-300), 33)
    else:
        sample_times = (0.0,)
    return StepperConfig.for_problem(laws, tensor, cfg.model.nu,
                                     sample_times=sample_times,
                                     cfl_safety=cfg.time.cfl_safety,
                                     solver=_solver_config(cfg))


def initial_state(cfg, grid, tensor, laws):
    """Build the t = 0 state, solving the elliptic coupling if viscous."""
    n1, n2 = build_initial(cfg, grid, laws)
    total = ScalarField(grid, n1.values + n2.values)
    nu = cfg.model.nu
    if nu == 0.0:
        m = total
    else:
        op = BrinkmanOperator(grid, tensor, nu, 0.0)
        m, _, _ = solve_brinkman(op, total, _solver_config(cfg))
    return State(n1=n1, n2=n2, m=m, t=0.0)


class _SnapshotWriter:
    """Observer that writes snapshot files at a fixed step cadence
    (always including the initial and final states, without duplicates).
    """

    def __init__(self, directory, grid, every, fmt):
        self.directory = directory
        self.grid = grid
        self.every = every
        self.fmt = fmt
        self._written = set()

    def __call__(self, step_index, state, aux):
        if self.every > 0 and step_index % self.every != 0:
            return
        self.write(step_index, state)

    def write(self, step_index, state):
        if step_index in self._written:
            return
        self._written.add(step_index)
        if self.fmt == "csv":
            out_io.write_snapshot_1d(self.directory, step_index, self.grid,
                                     state.n1.values, state.n2.values,
                                     state.m.values)
        else:
            out_io.write_snapshot_2d(self.directory, step_index, self.grid,
                                     state.t,
                                     {"n1": state.n1.values,
                                      "n2": state.n2.values,
                                      "m": state.m.values})


def _resolve_format(cfg):
    if cfg.output.formats != "auto":
        return cfg.output.formats
    return "csv" if cfg.grid.dimension == 1 else "raw"


def run_single(cfg, out_dir=None, capture_times=None, write_outputs=True):
    """Execute one configured trajectory.

    Writes diagnostics.csv, audit.json, and snapshots into out_dir
    (default: the configured output directory).  capture_times, if
    given, are exact landing targets at which m, the total density, and
    grad m are retained in memory on the returned result.
    """
    grid = build_grid_from(cfg)
    tensor = build_tensor(cfg, grid)
    laws = build_laws(cfg)
    stepper = _stepper_config(cfg, tensor, laws)
    state0 = initial_state(cfg, grid, tensor, laws)

    recorder = RunRecorder(grid, tensor, laws, cfg.model.nu,
                           every=cfg.time.record_every_steps)
    observers = [recorder]
    capture = None
    targets = ()
    if capture_times is not None:
        capture = FieldCapture(capture_times)
        observers.append(capture)
        targets = capture_times

    directory = None
    if write_outputs:
        directory = out_dir if out_dir is not None else cfg.output.directory
        os.makedirs(directory, exist_ok=True)
        snap_every = cfg.output.snapshot_every_steps
        if snap_every > 0:
            snapper = _SnapshotWriter(directory, grid, snap_every,
                                      _resolve_format(cfg))
            observers.append(snapper)

    final, steps = run(state0, tensor, laws, stepper, cfg.time.t_final,
                       observers=observers, targets=targets)
    audit = entropy_audit(recorder.audit_trace())

    if capture is not None and not capture.complete:
        raise RuntimeError("internal error: a capture target was missed "
                           f"({len(capture.times)}/{len(capture.targets)})")

    if write_outputs:
        out_io.write_diagnostics_csv(os.path.join(directory,
                                                  "diagnostics.csv"),
                                     recorder.records, recorder.every)
        out_io.write_audit_json(os.path.join(directory, "audit.json"),
                                audit, recorder.clip_warnings)
        if cfg.output.snapshot_every_steps > 0:
            snapper.write(steps, final)

    return RunResult(config=cfg, grid=grid, tensor=tensor, laws=laws,
                     final_state=final, steps=steps, recorder=recorder,
                     audit=audit, capture=capture, out_dir=directory)


def _l2(values, grid):
    return math.sqrt(float(np.sum(values * values)) * grid.cell_volume)


def _time_l2(sample_times, norms):
    """L2(0,T) norm of a sampled time signal via the trapezoid rule."""
    squares = np.asarray(norms, dtype=np.float64) ** 2
    return math.sqrt(float(np.trapezoid(squares, sample_times)))


def _restrict_values(fine, factor, dimension):
    if dimension == 1:
        n = fine.shape[0] // factor
        return fine.reshape(n, factor).mean(axis=1)
    n = fine.shape[0] // factor
    return fine.reshape(n, factor, n, factor).mean(axis=(1, 3))


def restrict_to(fine_values, coarse_grid):
    """Exact block average of a fine cell array onto a nested coarse grid."""
    fine_n = fine_values.shape[-1]
    factor, rem = divmod(fine_n, coarse_grid.cells_per_axis)
    if rem or factor < 1:
        raise ValueError("fine grid is not a refinement of the coarse grid")
    return _restrict_values(fine_values, factor, coarse_grid.dimension)


def _reference_captures(cfg, samples, reference, out_dir, write_outputs):
    """Darcy reference sampled on the shared time grid.

    reference = 'darcy' reruns the config at nu = 0 on the same grid;
    'darcy-fine' uses a doubled grid and restricts, as a robustness
    check on the discretization error hiding in the reference itself.
    """
    if reference == "darcy":
        ref_cfg = cfg.with_nu(0.0)
        res = run_single(ref_cfg, out_dir=out_dir,
                         capture_times=samples,
                         write_outputs=write_outputs)
        totals = res.capture.total
        grads = res.capture.grad_m
        return res, totals, grads
    if reference == "darcy-fine":
        coarse = build_grid_from(cfg)
        ref_cfg = cfg.with_nu(0.0).with_cells(2 * cfg.grid.cells_per_axis)
        res = run_single(ref_cfg, out_dir=out_dir,
                         capture_times=samples,
                         write_outputs=write_outputs)
        totals = [restrict_to(v, coarse) for v in res.capture.total]
        grads = [gradient(ScalarField(coarse, v)) for v in totals]
        return res, totals, grads
    raise ConfigError(f"unknown sweep reference {reference!r} "
                      "(expected 'darcy' or 'darcy-fine')")


def run_sweep(cfg, nu_list, reference="darcy", out_dir=None,
              write_outputs=True):
    """Viscosity sweep against an inviscid reference.

    nu_list must be positive and strictly descending.  Each member and
    the reference run in their own subdirectory; the table CSV is
    rewritten after every member so a failing member aborts the sweep
    with the completed rows preserved on disk.
    """
    nu_list = [float(nu) for nu in nu_list]
    if not nu_list or any(nu <= 0 for nu in nu_list):
        raise ConfigError("sweep viscosities must be positive")
    if any(later >= earlier for earlier, later in zip(nu_list, nu_list[1:])):
        raise ConfigError("sweep viscosities must be strictly descending")
    if not cfg.time.t_final > 0:
        raise ConfigError("time.t_final: sweep needs a positive horizon")

    directory = out_dir if out_dir is not None else cfg.output.directory
    if write_outputs:
        os.makedirs(directory, exist_ok=True)
    samples = np.linspace(0.0, cfg.time.t_final, SWEEP_SAMPLES)

    def member_dir(name):
        return os.path.join(directory, name) if write_outputs else None

    ref_res, ref_totals, ref_grads = _reference_captures(
        cfg, samples, reference, member_dir("reference"), write_outputs)

    rows = []
    results = [ref_res]
    kinetic_integrals = {}
    table_path = os.path.join(directory, "sweep.csv")

    def flush():
        if write_outputs:
            out_io.write_sweep_csv(table_path, rows)

    flush()
    for nu in nu_list:
        member_cfg = cfg.with_nu(nu)
        try:
            res = run_single(member_cfg, out_dir=member_dir(f"nu_{nu:g}"),
                             capture_times=samples,
                             write_outputs=write_outputs)
        except Exception:
            flush()
            raise
        results.append(res)
        cap = res.capture
        grid = res.grid
        m_minus_n = [_l2(m - n, grid) for m, n in zip(cap.m, cap.total)]
        n_minus_ref = [_l2(n - r, grid)
                       for n, r in zip(cap.total, ref_totals)]
        g_minus_ref = [face_l2_distance(gm, gr)
                       for gm, gr in zip(cap.grad_m, ref_grads)]
        trace = res.recorder.audit_trace()
        kinetic = float(np.trapezoid(
            [rec.dissipation_kinetic for rec in res.records], trace.t))
        kinetic_integrals[f"{nu:g}"] = kinetic
        rows.append(SweepRow(
            nu=nu,
            l2_m_minus_n=_time_l2(samples, m_minus_n),
            l2_n_minus_n0=_time_l2(samples, n_minus_ref),
            l2_gradm_minus_gradn0=_time_l2(samples, g_minus_ref),
            dissipation_integral=res.audit.dissipation_integral,
            sqrt_nu_gradm_sup=max(rec.sqrt_nu_grad_m_l2
                                  for rec in res.records)))
        flush()

    fits = {}
    for name in ("l2_m_minus_n", "l2_n_minus_n0", "l2_gradm_minus_gradn0"):
        points = [(row.nu, getattr(row, name)) for row in rows]
        if len(points) >= 2 and all(e > 0 for _, e in points):
            fits[name] = fit_rate_ci(points)

    table = ConvergenceTable(rows=rows, fits=fits, sample_times=samples,
                             extras={"kinetic_integrals": kinetic_integrals,
                                     "reference": reference,
                                     "results": results})
    if write_outputs:
        payload = {
            "config_digest": config_digest(cfg),
            "reference": reference,
            "sample_count": SWEEP_SAMPLES,
            "note": SUBSEQUENCE_NOTE,
            "kinetic_integrals": kinetic_integrals,
            "fits": {name: {"slope": f.slope, "intercept": f.intercept,
                            "r_squared": f.r_squared,
                            "slope_ci": list(f.slope_ci)
                            if f.slope_ci else None}
                     for name, f in fits.items()},
        }
        out_io.write_sweep_summary(os.path.join(directory,
                                                "sweep_summary.json"),
                                   payload)
    return table


def run_refinement(cfg, cell_list, out_dir=None, write_outputs=True):
    """Self-convergence study on nested grids.

    cell_list must be nondecreasing with each count dividing the next;
    the final total density of each finer run is block-averaged onto
    the next coarser grid for the error measurement.
    """
    cells = [int(n) for n in cell_list]
    if not cells:
        raise ConfigError("refinement needs at least one cell count")
    for a, b in zip(cells, cells[1:]):
        if b < a or b % a:
            raise ConfigError("refinement cell counts must be ascending, "
                              f"each dividing the next (got {a} then {b})")

    directory = out_dir if out_dir is not None else cfg.output.directory
    if write_outputs:
        os.makedirs(directory, exist_ok=True)

    results = []
    for n in cells:
        member_cfg = cfg.with_cells(n)
        member_dir = (os.path.join(directory, f"cells_{n}")
                      if write_outputs else None)
        results.append(run_single(member_cfg, out_dir=member_dir,
                                  write_outputs=write_outputs))

    self_errors = []
    for coarse, fine in zip(results, results[1:]):
        coarse_total = coarse.final_state.total_values()
        fine_total = fine.final_state.total_values()
        restricted = restrict_to(fine_total, coarse.grid)
        self_errors.append(_l2(coarse_total - restricted, coarse.grid))
    audit_residuals = [res.audit.residual for res in results]

    def _maybe_fit(points):
        # A fit needs two points at distinct resolutions; repeated cell
        # counts (legal input) or exact zeros yield no fit rather than
        # an error.
        if len(points) >= 2 and len({h for h, _ in points}) >= 2:
            return fit_rate_ci(points)
        return None

    error_points = [(res.grid.cell_size, err)
                    for res, err in zip(results, self_errors)]
    error_fit = _maybe_fit([(h, e) for h, e in error_points if e > 0])
    residual_fit = _maybe_fit([(res.grid.cell_size, abs(res.audit.residual))
                               for res in results if res.audit.residual != 0])

    report = RefinementReport(cells=tuple(cells), self_errors=self_errors,
                              audit_residuals=audit_residuals,
                              error_fit=error_fit,
                              residual_fit=residual_fit,
                              results=results)
    if write_outputs:
        payload = {
            "cells": list(report.cells),
            "self_errors": report.self_errors,
            "audit_residuals": report.audit_residuals,
            "config_digest": config_digest(cfg),
            "error_order": report.error_fit.slope if report.error_fit
            else None,
            "residual_order": report.residual_fit.slope
            if report.residual_fit else None,
        }
        out_io.write_refinement_json(os.path.join(directory,
                                                  "refinement.json"),
                                     payload)
    return report


def fit_rate(points):
    """Least-squares line through (log h, log e): (slope, intercept, r2)."""
    if len(points) < 2:
        raise ValueError("rate fit needs at least two points")
    if any(h <= 0 or e <= 0 for h, e in points):
        raise ValueError("rate fit needs positive abscissae and errors")
    log_h = np.log(np.array([h for h, _ in points]))
    log_e = np.log(np.array([e for _, e in points]))
    if np.allclose(log_h, log_h[0]):
        raise ValueError("rate fit needs at least two distinct abscissae")
    slope, intercept = np.polyfit(log_h, log_e, 1)
    fitted = slope * log_h + intercept
    ss_res = float(np.sum((log_e - fitted) ** 2))
    ss_tot = float(np.sum((log_e - np.mean(log_e)) ** 2))
    if ss_tot == 0.0:
        r_squared = 1.0 if ss_res < 1e-28 else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r_squared


def fit_rate_ci(points, confidence=0.95):
    """fit_rate plus a t-based confidence interval on the slope
    (None when there are no residual degrees of freedom)."""
    slope, intercept, r_squared = fit_rate(points)
    n = len(points)
    ci = None
    if n > 2:
        log_h = np.log(np.array([h for h, _ in points]))
        log_e = np.log(np.array([e for _, e in points]))
        fitted = slope * log_h + intercept
        dof = n - 2
        s2 = float(np.sum((log_e - fitted) ** 2)) / dof
        sxx = float(np.sum((log_h - np.mean(log_h)) ** 2))
        half = stats.t.ppf(0.5 + confidence / 2.0, dof) * math.sqrt(s2 / sxx)
        ci = (slope - half, slope + half)
    return RateFit(slope=slope, intercept=intercept, r_squared=r_squared,
                   slope_ci=ci)
