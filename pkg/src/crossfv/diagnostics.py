"""Scalar diagnostics, the entropy audit, and per-step recording.

The central bookkeeping identity for the continuous system reads

    H[n](T) - H[n](0) + integral of dissipation = integral of reaction,

with H[n] = int n (log n - 1).  All quantities here are the discrete
counterparts; entropy_audit composes them into a residual that should
shrink under grid refinement.  The dissipation rate has two algebraic
forms: for nu > 0 the elliptic equation turns int grad(n).A grad(m)
into the bulk expression -int n (m - n) / nu, while for nu = 0 (where
m = n) it is evaluated directly as the face sum grad(n).A grad(n).
"""

from dataclasses import dataclass, fields as dataclass_fields
import math

import numpy as np

from .fields import (FaceField, ScalarField, SecondMomentWeight,
                     face_average, face_dot, gradient)
from .tensors import apply_tensor

#: Cells at zero density contribute nothing to entropy-like integrals;
#: this shift keeps the logarithm finite on near-empty cells.
LOG_FLOOR = 1e-300


@dataclass
class DiagnosticsRecord:
    """One sampled row of scalar diagnostics; field order is the CSV order."""

    t: float
    mass1: float
    mass2: float
    mass_total: float
    linf_total: float
    second_moment: float
    entropy: float
    dissipation_rate: float
    dissipation_kinetic: float
    sqrt_nu_grad_m_l2: float
    overlap: float
    clipped_mass_cum: float


CSV_COLUMNS = tuple(f.name for f in dataclass_fields(DiagnosticsRecord))


@dataclass
class EntropyAudit:
    entropy_initial: float
    entropy_final: float
    dissipation_integral: float
    reaction_integral: float
    residual: float


@dataclass
class AuditTrace:
    """Every-step samples of the three audit ingredients."""

    t: np.ndarray
    entropy: np.ndarray
    dissipation_rate: np.ndarray
    reaction_rate: np.ndarray
    cadence: int = 1


def entropy(n):
    """H[n] = int n (log n - 1), with the convention 0 (log 0 - 1) = 0."""
    vals = n.values
    if np.any(vals < 0.0):
        raise ValueError("entropy requires a nonnegative density")
    out = np.zeros_like(vals)
    pos = vals > 0.0
    v = vals[pos]
    out[pos] = v * (np.log(v) - 1.0)
    return float(np.sum(out)) * n.grid.cell_volume


def dissipation_rate(n, m, tensor, t, nu):
    """Entropy dissipation rate in the form matched to the regime."""
    if nu > 0.0:
        diff = m.values - n.values
        return -float(np.sum(n.values * diff)) * n.grid.cell_volume / nu
    g = gradient(n)
    return face_dot(g, apply_tensor(tensor, g, t))


def _kinetic(n, grad_m):
    nf = face_average(n)
    weighted = FaceField(n.grid, tuple(
        nc * gc for nc, gc in zip(nf.components, grad_m.components)))
    return face_dot(weighted, grad_m)


def dissipation_kinetic(n, m, tensor=None, t=0.0):
    """Face sum of n |grad m|^2 with arithmetically averaged density.

    The tensor and time arguments are accepted for call-site symmetry
    with dissipation_rate; the kinetic form weights the plain gradient.
    """
    return _kinetic(n, gradient(m))


def second_moment(n, weight):
    """int n |x|^2 against a precomputed SecondMomentWeight."""
    if weight.grid != n.grid:
        raise ValueError("weight was built for a different grid")
    return float(np.sum(n.values * weight.values)) * n.grid.cell_volume


def overlap(n1, n2):
    """Segregation indicator int n1 n2."""
    if n1.grid != n2.grid:
        raise ValueError("fields live on different grids")
    return float(np.sum(n1.values * n2.values)) * n1.grid.cell_volume


def l2_distance(a, b):
    """Grid-weighted L2 distance between two scalar fields."""
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    diff = a.values - b.values
    return math.sqrt(float(np.sum(diff * diff)) * a.grid.cell_volume)


def face_l2_distance(fa, fb):
    """Grid-weighted L2 distance between two face fields."""
    if fa.grid != fb.grid:
        raise ValueError("face fields live on different grids")
    diff = FaceField(fa.grid, tuple(
        a - b for a, b in zip(fa.components, fb.components)))
    return math.sqrt(face_dot(diff, diff))


def face_l2_norm(f):
    return math.sqrt(face_dot(f, f))


def reaction_entropy_rate(n1, n2, laws):
    """int log(n) (n1 G1 + n2 G2); cells with n = 0 contribute zero."""
    tot = n1.values + n2.values
    r = n1.values * laws[0].rate(tot) + n2.values * laws[1].rate(tot)
    out = np.zeros_like(tot)
    pos = tot > 0.0
    out[pos] = np.log(tot[pos] + LOG_FLOOR) * r[pos]
    return float(np.sum(out)) * n1.grid.cell_volume


def entropy_audit(trace):
    """Compose the discrete entropy identity from an every-step trace.

    residual = (H_final - H_initial + dissipation_integral)
               - reaction_integral,
    with both integrals taken by the trapezoid rule on the trace's own
    (generally nonuniform) time grid.
    """
    if trace.cadence != 1:
        raise ValueError("entropy audit requires every-step samples "
                         f"(cadence 1, got {trace.cadence})")
    diss = float(np.trapezoid(trace.dissipation_rate, trace.t))
    reac = float(np.trapezoid(trace.reaction_rate, trace.t))
    e0 = float(trace.entropy[0])
    e1 = float(trace.entropy[-1])
    return EntropyAudit(entropy_initial=e0, entropy_final=e1,
                        dissipation_integral=diss, reaction_integral=reac,
                        residual=(e1 - e0 + diss) - reac)


class RunRecorder:
    """Observer that samples every diagnostic at every step.

    Rows are recorded unconditionally so the entropy audit always sees
    cadence-1 data; the `every` stride only thins what is written to
    disk later.  A single gradient of m is computed per observation and
    reused by every gradient-based quantity.
    """

    def __init__(self, grid, tensor, laws, nu, every=1):
        if every < 1:
            raise ValueError("recording stride must be at least 1")
        self.grid = grid
        self.tensor = tensor
        self.laws = laws
        self.nu = float(nu)
        self.every = int(every)
        self.weight = SecondMomentWeight(grid)
        self.records = []
        self.clip_warnings = 0
        self._reaction_rates = []

    def __call__(self, step_index, state, aux):
        grid = self.grid
        vol = grid.cell_volume
        total = state.n1.values + state.n2.values
        mass1 = float(np.sum(state.n1.values)) * vol
        mass2 = float(np.sum(state.n2.values)) * vol
        mass_total = mass1 + mass2
        ntot = ScalarField(grid, total)
        gm = gradient(state.m)
        if self.nu > 0.0:
            diff = state.m.values - total
            diss = -float(np.sum(total * diff)) * vol / self.nu
            sqrt_nu_grad = math.sqrt(self.nu) * face_l2_norm(gm)
        else:
            diss = face_dot(gm, apply_tensor(self.tensor, gm, state.t))
            sqrt_nu_grad = 0.0
        rec = DiagnosticsRecord(
            t=state.t,
            mass1=mass1,
            mass2=mass2,
            mass_total=mass_total,
            linf_total=float(np.max(total)),
            second_moment=second_moment(ntot, self.weight),
            entropy=entropy(ntot),
            dissipation_rate=diss,
            dissipation_kinetic=_kinetic(ntot, gm),
            sqrt_nu_grad_m_l2=sqrt_nu_grad,
            overlap=overlap(state.n1, state.n2),
            clipped_mass_cum=state.clipped_cum,
        )
        self.records.append(rec)
        self._reaction_rates.append(
            reaction_entropy_rate(state.n1, state.n2, self.laws))
        if aux.get("clipped_step", 0.0) > 1e-6 * mass_total:
            self.clip_warnings += 1

    @property
    def max_linf(self):
        return max(r.linf_total for r in self.records)

    def audit_trace(self):
        return AuditTrace(
            t=np.array([r.t for r in self.records]),
            entropy=np.array([r.entropy for r in self.records]),
            dissipation_rate=np.array(
                [r.dissipation_rate for r in self.records]),
            reaction_rate=np.array(self._reaction_rates),
            cadence=1,
        )


class FieldCapture:
    """Observer that snapshots m, the total density, and grad m.

    Capture times must be exact landing targets of the run so that the
    float-equality match below fires; the harness passes the same array
    to both the stepper and this observer.
    """

    def __init__(self, targets):
        self.targets = [float(t) for t in targets]
        self.times = []
        self.m = []
        self.total = []
        self.grad_m = []
        self._next = 0

    def __call__(self, step_index, state, aux):
        if self._next >= len(self.targets):
            return
        if state.t == self.targets[self._next]:
            self.times.append(state.t)
            self.m.append(state.m.values.copy())
            self.total.append(state.n1.values + state.n2.values)
            self.grad_m.append(gradient(state.m))
            self._next += 1

    @property
    def complete(self):
        return self._next == len(self.targets)
