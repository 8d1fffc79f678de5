"""Anisotropy tensor fields and their face-based application.

A tensor field stores a (possibly time-dependent) symmetric d x d matrix
per cell together with a declared ellipticity floor.  Application to a
face field averages the diagonal entries onto the faces they act on; in
2D the off-diagonal entry couples through per-cell averages of the
tangential face components, a construction chosen so that the induced
bilinear form on face fields is symmetric and positive semidefinite for
arbitrary smooth coefficient variation (arithmetic face averaging of the
off-diagonal entry alone loses symmetry once the coefficient varies).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .fields import FaceField, ScalarField, face_average


@dataclass
class ValidationReport:
    passed: bool
    max_asymmetry: float
    min_eigenvalue: float
    sup_norm: float
    worst_cell: object
    message: str


class _TensorSample:
    """Tensor data materialized at one time: cell entries + face averages."""

    __slots__ = ("components", "face_normal", "axy", "sup_norm")

    def __init__(self, grid, components):
        self.components = components
        if grid.dimension == 1:
            axx = components["axx"]
            self.face_normal = (face_average(ScalarField(grid, axx)).components[0],)
            self.axy = None
            self.sup_norm = float(np.max(np.abs(axx)))
        else:
            axx = components["axx"]
            ayy = components["ayy"]
            axy = components["axy"]
            axxf = face_average(ScalarField(grid, axx)).components[0]
            ayyf = face_average(ScalarField(grid, ayy)).components[1]
            self.face_normal = (axxf, ayyf)
            self.axy = axy
            self.sup_norm = float(max(np.max(np.abs(axx)), np.max(np.abs(ayy)),
                                      np.max(np.abs(axy))))


class TensorField:
    """Per-cell symmetric anisotropy tensor A(x, t) with ellipticity floor."""

    def __init__(self, grid, preset, params, builder, ellipticity_floor,
                 time_dependent):
        if not ellipticity_floor > 0:
            raise ValueError("ellipticity_floor must be positive")
        self.grid = grid
        self.preset = preset
        self.params = dict(params)
        self.ellipticity_floor = float(ellipticity_floor)
        self.time_dependent = bool(time_dependent)
        self._builder = builder
        self._cache = None

    def components(self, t):
        """Cell-centered entries at time t.

        Keys: 'axx' (1D); 'axx', 'ayy', 'axy', 'ayx' (2D).  Presets are
        symmetric so axy and ayx are the same array.
        """
        return self._builder(float(t))

    def sample(self, t):
        t = float(t)
        key = t if self.time_dependent else 0.0
        if self._cache is not None and self._cache[0] == key:
            return self._cache[1]
        comp = self._builder(key)
        if self.grid.dimension == 2:
            if comp["axy"] is not comp["ayx"] and not np.array_equal(
                    comp["axy"], comp["ayx"]):
                raise ValueError("cannot apply an asymmetric tensor")
        sample = _TensorSample(self.grid, comp)
        self._cache = (key, sample)
        return sample


def identity_tensor(grid):
    ones = np.ones(grid.cell_shape)
    zeros = np.zeros(grid.cell_shape)

    def build(t):
        if grid.dimension == 1:
            return {"axx": ones}
        return {"axx": ones, "ayy": ones, "axy": zeros, "ayx": zeros}

    return TensorField(grid, "identity", {}, build, 1.0, False)


def diagonal_tensor(grid, entries):
    entries = [float(e) for e in entries]
    if len(entries) != grid.dimension:
        raise ValueError(
            f"diagonal tensor needs {grid.dimension} entries, got {len(entries)}")
    if min(entries) <= 0:
        raise ValueError("diagonal entries must be positive")
    arrs = [np.full(grid.cell_shape, e) for e in entries]
    zeros = np.zeros(grid.cell_shape)

    def build(t):
        if grid.dimension == 1:
            return {"axx": arrs[0]}
        return {"axx": arrs[0], "ayy": arrs[1], "axy": zeros, "ayx": zeros}

    return TensorField(grid, "diagonal", {"entries": entries}, build,
                       min(entries), False)


def rotation_tensor(grid, a1, a2, angle):
    """R(angle) diag(a1, a2) R(angle)^T, constant over the grid (2D only)."""
    if grid.dimension != 2:
        raise ValueError("rotation-mixed tensor requires dimension 2")
    a1, a2, angle = float(a1), float(a2), float(angle)
    if min(a1, a2) <= 0:
        raise ValueError("rotation-mixed entries must be positive")
    c, s = math.cos(angle), math.sin(angle)
    axx = np.full(grid.cell_shape, a1 * c * c + a2 * s * s)
    ayy = np.full(grid.cell_shape, a1 * s * s + a2 * c * c)
    axy = np.full(grid.cell_shape, (a1 - a2) * s * c)

    def build(t):
        return {"axx": axx, "ayy": ayy, "axy": axy, "ayx": axy}

    return TensorField(grid, "rotation-mixed",
                       {"entries": [a1, a2], "angle": angle}, build,
                       min(a1, a2), False)


def smooth_tensor(grid, base, amplitude, time_frequency=0.0, cross=0.0):
    """Smoothly varying coefficients, elliptic by construction.

    1D: axx = base + amplitude sin(pi x / L) cos(w t).
    2D adds ayy = base + amplitude cos(pi y / L) cos(w t) and
    axy = cross sin(pi x / L) sin(pi y / L) cos(w t).
    Requires base > |amplitude| + |cross| so the floor stays positive.
    """
    base, amplitude = float(base), float(amplitude)
    time_frequency, cross = float(time_frequency), float(cross)
    floor = base - abs(amplitude) - abs(cross)
    if floor <= 0:
        raise ValueError(
            "smooth-varying tensor needs base > |amplitude| + |cross|")
    if grid.dimension == 1 and cross != 0.0:
        raise ValueError("cross term requires dimension 2")
    mesh = grid.center_mesh()
    kx = math.pi / grid.half_length
    sx = np.sin(kx * mesh[0])

    def build(t):
        mod = math.cos(time_frequency * t) if time_frequency != 0.0 else 1.0
        axx = base + amplitude * sx * mod
        if grid.dimension == 1:
            return {"axx": axx}
        cy = np.cos(kx * mesh[1])
        ayy = base + amplitude * cy * mod
        axy = cross * sx * np.sin(kx * mesh[1]) * mod
        return {"axx": axx, "ayy": ayy, "axy": axy, "ayx": axy}

    return TensorField(grid, "smooth-varying",
                       {"base": base, "amplitude": amplitude,
                        "time_frequency": time_frequency, "cross": cross},
                       build, floor, time_frequency != 0.0)


def tensor_from_arrays(grid, ellipticity_floor, axx, ayy=None, axy=None,
                       ayx=None):
    """Wrap raw per-cell entries (mainly for validation tests)."""
    axx = np.asarray(axx, dtype=np.float64)
    comp = {"axx": axx}
    if grid.dimension == 2:
        ayy = np.asarray(ayy, dtype=np.float64)
        axy = np.zeros(grid.cell_shape) if axy is None else np.asarray(
            axy, dtype=np.float64)
        ayx = axy if ayx is None else np.asarray(ayx, dtype=np.float64)
        comp.update({"ayy": ayy, "axy": axy, "ayx": ayx})
    for arr in comp.values():
        if arr.shape != grid.cell_shape:
            raise ValueError("tensor entry shape does not match grid")

    def build(t):
        return comp

    return TensorField(grid, "custom", {}, build, ellipticity_floor, False)


def _eigen_min(comp, dimension):
    if dimension == 1:
        return comp["axx"]
    half_sum = 0.5 * (comp["axx"] + comp["ayy"])
    half_diff = 0.5 * (comp["axx"] - comp["ayy"])
    off = 0.5 * (comp["axy"] + comp["ayx"])
    return half_sum - np.sqrt(half_diff * half_diff + off * off)


def validate_tensor(A, sample_times):
    """Check symmetry, ellipticity, and boundedness at the given times."""
    grid = A.grid
    max_asym = 0.0
    min_eig = math.inf
    sup = 0.0
    worst = None
    finite = True
    for t in sample_times:
        comp = A.components(t)
        if grid.dimension == 2:
            asym = np.abs(comp["axy"] - comp["ayx"])
            local = float(np.max(asym))
            if local > max_asym:
                max_asym = local
                worst = tuple(int(i) for i in
                              np.unravel_index(int(np.argmax(asym)), asym.shape))
        eigs = _eigen_min(comp, grid.dimension)
        local_min = float(np.min(eigs))
        if local_min < min_eig:
            min_eig = local_min
            if max_asym == 0.0:
                idx = np.unravel_index(int(np.argmin(eigs)), eigs.shape)
                worst = tuple(int(i) for i in idx) if grid.dimension == 2 \
                    else int(idx[0])
        for arr in comp.values():
            sup = max(sup, float(np.max(np.abs(arr))))
            finite = finite and bool(np.isfinite(arr).all())
    # Allow for round-off in the eigenvalue reconstruction: presets whose
    # exact minimum eigenvalue equals the declared floor (e.g. rotated
    # diagonals) must not fail by a few ulp.
    slack = 64.0 * np.finfo(np.float64).eps * max(1.0, sup)
    floor = A.ellipticity_floor - slack
    passed = finite and max_asym == 0.0 and min_eig >= floor
    if not finite:
        message = "tensor entries are not finite"
    elif max_asym > 0.0:
        message = f"asymmetric at cell {worst}: |a12 - a21| = {max_asym:g}"
    elif min_eig < floor:
        message = (f"ellipticity violated at cell {worst}: min eigenvalue "
                   f"{min_eig:g} < floor {A.ellipticity_floor:g}")
    else:
        message = "ok"
    return ValidationReport(passed, max_asym, min_eig, sup, worst, message)


def apply_tensor(A, g, t):
    """Face-normal components of A . g at time t."""
    grid = A.grid
    if g.grid != grid:
        raise ValueError("face field grid does not match tensor grid")
    sample = A.sample(t)
    out = FaceField.zeros(grid)
    if grid.dimension == 1:
        kernels.apply_tensor_1d(sample.face_normal[0], g.components[0],
                                out.components[0])
        if not grid.is_periodic:
            out.components[0][0] = 0.0
            out.components[0][-1] = 0.0
    else:
        kernels.apply_tensor_2d(sample.face_normal[0], sample.face_normal[1],
                                sample.axy, g.components[0], g.components[1],
                                grid.is_periodic, out.components[0],
                                out.components[1])
    return out
