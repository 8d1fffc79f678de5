"""Matrix-free solve of the elliptic coupling  m - nu div(A grad m) = n.

The operator is assembled on the fly from the field-core stencils, so it is
symmetric positive definite by construction (it adds a nonnegative
diffusion form to the identity).  Solves use preconditioned conjugate
gradients with an analytically assembled Jacobi diagonal; the initial
guess is the right-hand side, which makes small-nu solves nearly free
since the solution approaches n in that limit.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .fields import FaceField, ScalarField, gradient
from .tensors import apply_tensor


class SolverError(Exception):
    """Raised when the elliptic solve fails; carries the best iterate."""

    def __init__(self, message, best_iterate=None, residual=math.inf,
                 iterations=0):
        super().__init__(message)
        self.best_iterate = best_iterate
        self.residual = residual
        self.iterations = iterations


@dataclass
class SolverConfig:
    rel_tolerance: float = 1e-10
    max_iterations: int = 0  # 0 = automatic (10 * cell count)
    preconditioner: str = "jacobi"

    def __post_init__(self):
        if not 0.0 < self.rel_tolerance < 1.0:
            raise ValueError("rel_tolerance must lie in (0, 1)")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0 (0 = automatic)")
        if self.preconditioner not in ("none", "jacobi"):
            raise ValueError("preconditioner must be 'none' or 'jacobi'")

    def resolve_max_iterations(self, grid):
        return self.max_iterations if self.max_iterations else 10 * grid.cell_count


class _Workspace:
    __slots__ = ("g", "t")

    def __init__(self, grid):
        shapes = grid.face_shapes()
        self.g = tuple(np.zeros(s) for s in shapes)
        self.t = tuple(np.zeros(s) for s in shapes)


class BrinkmanOperator:
    """Action m -> m - nu div(A grad m) at a fixed time."""

    def __init__(self, grid, tensor, nu, time=0.0):
        if nu < 0:
            raise ValueError("nu must be nonnegative")
        if tensor.grid != grid:
            raise ValueError("tensor grid does not match operator grid")
        self.grid = grid
        self.tensor = tensor
        self.nu = float(nu)
        self.time = float(time)

    def make_workspace(self):
        return _Workspace(self.grid)

    def apply_into(self, x, out, work):
        """out <- x - nu div(A grad x), on raw cell arrays."""
        grid = self.grid
        dx = grid.cell_size
        sample = self.tensor.sample(self.time)
        if grid.dimension == 1:
            kernels.grad_1d(x, dx, grid.is_periodic, work.g[0])
            kernels.apply_tensor_1d(sample.face_normal[0], work.g[0], work.t[0])
            kernels.div_1d(work.t[0], dx, out)
        else:
            kernels.grad_2d(x, dx, grid.is_periodic, work.g[0], work.g[1])
            kernels.apply_tensor_2d(sample.face_normal[0], sample.face_normal[1],
                                    sample.axy, work.g[0], work.g[1],
                                    grid.is_periodic, work.t[0], work.t[1])
            kernels.div_2d(work.t[0], work.t[1], dx, out)
        out *= -self.nu
        out += x

    def apply(self, f):
        out = np.empty(self.grid.cell_shape)
        self.apply_into(f.values, out, self.make_workspace())
        return ScalarField(self.grid, out)

    def jacobi_diagonal(self):
        """Diagonal of the operator (off-diagonal tensor entries do not
        reach the diagonal except through no-flux corners, which we skip;
        the preconditioner only needs a positive spectrally-close diagonal).
        """
        grid = self.grid
        n = grid.cells_per_axis
        sample = self.tensor.sample(self.time)
        scale = self.nu / grid.cell_size ** 2
        if grid.dimension == 1:
            axxf = sample.face_normal[0]
            return 1.0 + scale * (axxf[:n] + axxf[1:])
        axxf, ayyf = sample.face_normal
        return 1.0 + scale * (axxf[:, :n] + axxf[:, 1:]
                              + ayyf[:n, :] + ayyf[1:, :])


def solve_brinkman(op, n, cfg=None):
    """Solve op(m) = n; returns (m, iterations, relative residual).

    nu = 0 short-circuits to m = n.  Convergence means
    ||op(m) - n||_2 <= rel_tolerance ||n||_2; running out of iterations
    raises SolverError carrying the best iterate seen.
    """
    if cfg is None:
        cfg = SolverConfig()
    grid = op.grid
    if op.nu == 0.0:
        return n.copy(), 0, 0.0
    b = n.values
    bnorm = float(np.linalg.norm(b.ravel()))
    if bnorm == 0.0:
        return ScalarField.zeros(grid), 0, 0.0
    tol = cfg.rel_tolerance * bnorm
    max_iter = cfg.resolve_max_iterations(grid)
    work = op.make_workspace()
    diag = op.jacobi_diagonal() if cfg.preconditioner == "jacobi" else None

    x = b.copy()
    q = np.empty(grid.cell_shape)
    op.apply_into(x, q, work)
    r = b - q
    rn = float(np.linalg.norm(r.ravel()))
    if rn <= tol:
        return ScalarField(grid, x), 0, rn / bnorm

    z = r / diag if diag is not None else r.copy()
    p = z.copy()
    rz = float(np.dot(r.ravel(), z.ravel()))
    iterations = 0
    while iterations < max_iter:
        iterations += 1
        op.apply_into(p, q, work)
        pq = float(np.dot(p.ravel(), q.ravel()))
        if not np.isfinite(pq) or pq <= 0.0:
            raise SolverError(
                f"conjugate gradient breakdown (p.Ap = {pq:g}) after "
                f"{iterations} iterations", ScalarField(grid, x.copy()),
                rn / bnorm, iterations)
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        rn = float(np.linalg.norm(r.ravel()))
        if not np.isfinite(rn):
            raise SolverError(
                f"non-finite residual after {iterations} iterations",
                ScalarField(grid, x.copy()), math.inf, iterations)
        if rn <= tol:
            # Recurrence residuals drift; confirm against the true residual
            # before accepting.
            op.apply_into(x, q, work)
            r_true = b - q
            rtn = float(np.linalg.norm(r_true.ravel()))
            if rtn <= tol:
                return ScalarField(grid, x), iterations, rtn / bnorm
            r = r_true
            z = r / diag if diag is not None else r.copy()
            rz = float(np.dot(r.ravel(), z.ravel()))
            p = z.copy()
            continue
        z = r / diag if diag is not None else r
        rz_new = float(np.dot(r.ravel(), z.ravel()))
        beta = rz_new / rz
        rz = rz_new
        p *= beta
        p += z
    op.apply_into(x, q, work)
    rtn = float(np.linalg.norm((b - q).ravel()))
    raise SolverError(
        f"no convergence within {max_iter} iterations "
        f"(relative residual {rtn / bnorm:.3e})",
        ScalarField(grid, x), rtn / bnorm, max_iter)


def velocity(op, m):
    """The transport velocity -A grad m at faces."""
    flux = apply_tensor(op.tensor, gradient(m), op.time)
    for c in flux.components:
        np.negative(c, out=c)
    return flux


def brinkman_consistency(op, m, n):
    """L2 defect of the identity div(A grad m) = (m - n)/nu."""
    if op.nu == 0.0:
        raise ValueError("consistency diagnostic is undefined for nu = 0")
    grid = op.grid
    sample_g = gradient(m)
    flux = apply_tensor(op.tensor, sample_g, op.time)
    out = np.empty(grid.cell_shape)
    if grid.dimension == 1:
        kernels.div_1d(flux.components[0], grid.cell_size, out)
    else:
        kernels.div_2d(flux.components[0], flux.components[1],
                       grid.cell_size, out)
    defect = out - (m.values - n.values) / op.nu
    return float(np.linalg.norm(defect.ravel())) * math.sqrt(grid.cell_volume)
