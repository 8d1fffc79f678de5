"""Grids, cell/face fields, and discrete vector calculus.

The domain is the box [-L, L]^d (d = 1 or 2) split into N uniform cells per
axis, with either periodic wrap or sealed (no-flux) walls.  Scalar data
lives at cell centers; vector data lives as normal components on cell
faces.  All integrals are midpoint sums, all differences are centered at
faces, and the divergence is in flux form so that conservation telescopes
exactly.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels

PERIODIC = "periodic"
NOFLUX = "noflux"
BOUNDARIES = (PERIODIC, NOFLUX)


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered mesh on [-L, L]^d."""

    dimension: int
    half_length: float
    cells_per_axis: int
    boundary: str

    @property
    def cell_size(self):
        return 2.0 * self.half_length / self.cells_per_axis

    @property
    def is_periodic(self):
        return self.boundary == PERIODIC

    @property
    def cell_count(self):
        return self.cells_per_axis ** self.dimension

    @property
    def cell_shape(self):
        n = self.cells_per_axis
        return (n,) if self.dimension == 1 else (n, n)

    @property
    def cell_volume(self):
        return self.cell_size ** self.dimension

    def axis_centers(self):
        """Cell-center coordinates along one axis: x_j = -L + (j + 1/2) dx."""
        n = self.cells_per_axis
        return -self.half_length + (np.arange(n) + 0.5) * self.cell_size

    def center_mesh(self):
        """Cell-center coordinate arrays, one per axis, in cell shape."""
        c = self.axis_centers()
        if self.dimension == 1:
            return (c,)
        # [iy, ix] layout: X varies along axis 1, Y along axis 0.
        x, y = np.meshgrid(c, c, indexing="xy")
        return (x, y)

    def face_shapes(self):
        n = self.cells_per_axis
        if self.dimension == 1:
            return ((n + 1,),)
        return ((n, n + 1), (n + 1, n))


def build_grid(dimension, half_length, cells_per_axis, boundary):
    if dimension not in (1, 2):
        raise ValueError(f"unsupported dimension {dimension!r}; expected 1 or 2")
    if not half_length > 0:
        raise ValueError(f"half_length must be positive, got {half_length!r}")
    if not (isinstance(cells_per_axis, (int, np.integer)) and cells_per_axis >= 2):
        raise ValueError(
            f"cells_per_axis must be an integer >= 2, got {cells_per_axis!r}")
    if boundary not in BOUNDARIES:
        raise ValueError(
            f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    return Grid(int(dimension), float(half_length), int(cells_per_axis), boundary)


class ScalarField:
    """Cell-centered scalar values on a grid."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != grid.cell_shape:
            raise ValueError(
                f"values shape {values.shape} does not match grid cells "
                f"{grid.cell_shape}")
        self.grid = grid
        self.values = values

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.cell_shape))

    @classmethod
    def full(cls, grid, value):
        return cls(grid, np.full(grid.cell_shape, float(value)))

    @classmethod
    def from_function(cls, grid, fn):
        """Sample fn at cell centers; fn takes d coordinate arrays."""
        return cls(grid, np.asarray(fn(*grid.center_mesh()), dtype=np.float64)
                   * np.ones(grid.cell_shape))

    def copy(self):
        return ScalarField(self.grid, self.values.copy())

    def check_finite(self):
        if not np.isfinite(self.values).all():
            raise ValueError("scalar field contains non-finite values")


class FaceField:
    """Face-normal vector components on a grid (one array per axis)."""

    __slots__ = ("grid", "components")

    def __init__(self, grid, components):
        components = tuple(np.asarray(c, dtype=np.float64) for c in components)
        expected = grid.face_shapes()
        if len(components) != len(expected):
            raise ValueError("wrong number of face components")
        for c, shape in zip(components, expected):
            if c.shape != shape:
                raise ValueError(
                    f"face component shape {c.shape} does not match {shape}")
        self.grid = grid
        self.components = components

    @classmethod
    def zeros(cls, grid):
        return cls(grid, tuple(np.zeros(s) for s in grid.face_shapes()))

    def copy(self):
        return FaceField(self.grid, tuple(c.copy() for c in self.components))

    def max_abs(self):
        return max(float(np.max(np.abs(c))) if c.size else 0.0
                   for c in self.components)


class SecondMomentWeight:
    """The weight |x|^2 sampled at cell centers."""

    __slots__ = ("grid", "values")

    def __init__(self, grid):
        mesh = grid.center_mesh()
        w = np.zeros(grid.cell_shape)
        for c in mesh:
            w += c * c
        self.grid = grid
        self.values = w


def gradient(f):
    """Face-normal differences (f_right - f_left)/dx of a scalar field."""
    grid = f.grid
    out = FaceField.zeros(grid)
    if grid.dimension == 1:
        kernels.grad_1d(f.values, grid.cell_size, grid.is_periodic,
                        out.components[0])
    else:
        kernels.grad_2d(f.values, grid.cell_size, grid.is_periodic,
                        out.components[0], out.components[1])
    return out


def divergence(F):
    """Flux-form divergence: per cell, sum over axes of (F_r - F_l)/dx."""
    grid = F.grid
    out = ScalarField.zeros(grid)
    if grid.dimension == 1:
        kernels.div_1d(F.components[0], grid.cell_size, out.values)
    else:
        kernels.div_2d(F.components[0], F.components[1], grid.cell_size,
                       out.values)
    return out


def integrate(f):
    """Midpoint quadrature: dx^d * sum of cell values."""
    return float(np.sum(f.values)) * f.grid.cell_volume


def face_dot(F, G):
    """Face-sum of F.G times dx^d over unique faces.

    Per axis, faces 0..N-1 are summed: with periodic wrap the final face
    duplicates face 0, and with no-flux walls the skipped wall face is zero
    for any valid field, so the reduction is exact for both modes.
    """
    if F.grid != G.grid:
        raise ValueError("face fields live on different grids")
    n = F.grid.cells_per_axis
    if F.grid.dimension == 1:
        s = float(np.dot(F.components[0][:n], G.components[0][:n]))
    else:
        fx, fy = F.components
        gx, gy = G.components
        s = float(np.sum(fx[:, :n] * gx[:, :n]))
        s += float(np.sum(fy[:n, :] * gy[:n, :]))
    return s * F.grid.cell_volume


def face_average(f):
    """Arithmetic cell-to-face average of a scalar field.

    No-flux wall faces get zero (every face quantity they multiply is zero
    there anyway); periodic faces wrap.
    """
    grid = f.grid
    v = f.values
    out = FaceField.zeros(grid)
    n = grid.cells_per_axis
    if grid.dimension == 1:
        a = out.components[0]
        a[1:n] = 0.5 * (v[:-1] + v[1:])
        if grid.is_periodic:
            a[0] = 0.5 * (v[n - 1] + v[0])
            a[n] = a[0]
    else:
        ax, ay = out.components
        ax[:, 1:n] = 0.5 * (v[:, :-1] + v[:, 1:])
        ay[1:n, :] = 0.5 * (v[:-1, :] + v[1:, :])
        if grid.is_periodic:
            ax[:, 0] = 0.5 * (v[:, n - 1] + v[:, 0])
            ax[:, n] = ax[:, 0]
            ay[0, :] = 0.5 * (v[n - 1, :] + v[0, :])
            ay[n, :] = ay[0, :]
    return out
