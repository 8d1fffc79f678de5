"""Pure-numpy stencil kernels.

Fallback backend used when the compiled extension is unavailable (or when
CROSSFV_PURE_PYTHON is set).  Every function here has a twin in _core.pyx
with an identical floating-point expression tree, so the two backends
produce bitwise-equal results.

Conventions: cell arrays are (N,) in 1D and (N, N) in 2D indexed [iy, ix]
(x fastest in memory).  Face arrays hold normal components: 1D (N+1,);
2D x-faces (N, N+1), y-faces (N+1, N).  Face k sits between cells k-1
and k.  With periodic wrap the last face duplicates face 0; with no-flux
walls the boundary faces carry zeros.
"""

import numpy as np


def grad_1d(u, dx, periodic, out):
    n = u.shape[0]
    np.subtract(u[1:], u[:-1], out=out[1:n])
    out[1:n] /= dx
    if periodic:
        out[0] = (u[0] - u[n - 1]) / dx
        out[n] = out[0]
    else:
        out[0] = 0.0
        out[n] = 0.0


def div_1d(f, dx, out):
    np.subtract(f[1:], f[:-1], out=out)
    out /= dx


def upwind_1d(n, v, periodic, out):
    nc = n.shape[0]
    vi = v[1:nc]
    out[1:nc] = np.where(vi > 0.0, vi * n[:-1],
                         np.where(vi < 0.0, vi * n[1:], 0.0))
    if periodic:
        v0 = v[0]
        if v0 > 0.0:
            out[0] = v0 * n[nc - 1]
        elif v0 < 0.0:
            out[0] = v0 * n[0]
        else:
            out[0] = 0.0
        out[nc] = out[0]
    else:
        out[0] = 0.0
        out[nc] = 0.0


def apply_tensor_1d(axxf, f, out):
    np.multiply(axxf, f, out=out)


def grad_2d(u, dx, periodic, outx, outy):
    n = u.shape[0]
    np.subtract(u[:, 1:], u[:, :-1], out=outx[:, 1:n])
    outx[:, 1:n] /= dx
    np.subtract(u[1:, :], u[:-1, :], out=outy[1:n, :])
    outy[1:n, :] /= dx
    if periodic:
        outx[:, 0] = (u[:, 0] - u[:, n - 1]) / dx
        outx[:, n] = outx[:, 0]
        outy[0, :] = (u[0, :] - u[n - 1, :]) / dx
        outy[n, :] = outy[0, :]
    else:
        outx[:, 0] = 0.0
        outx[:, n] = 0.0
        outy[0, :] = 0.0
        outy[n, :] = 0.0


def div_2d(fx, fy, dx, out):
    out[:, :] = (fx[:, 1:] - fx[:, :-1]) / dx + (fy[1:, :] - fy[:-1, :]) / dx


def upwind_2d(n, vx, vy, periodic, outx, outy):
    nc = n.shape[0]
    vi = vx[:, 1:nc]
    outx[:, 1:nc] = np.where(vi > 0.0, vi * n[:, :-1],
                             np.where(vi < 0.0, vi * n[:, 1:], 0.0))
    vj = vy[1:nc, :]
    outy[1:nc, :] = np.where(vj > 0.0, vj * n[:-1, :],
                             np.where(vj < 0.0, vj * n[1:, :], 0.0))
    if periodic:
        v0 = vx[:, 0]
        outx[:, 0] = np.where(v0 > 0.0, v0 * n[:, nc - 1],
                              np.where(v0 < 0.0, v0 * n[:, 0], 0.0))
        outx[:, nc] = outx[:, 0]
        w0 = vy[0, :]
        outy[0, :] = np.where(w0 > 0.0, w0 * n[nc - 1, :],
                              np.where(w0 < 0.0, w0 * n[0, :], 0.0))
        outy[nc, :] = outy[0, :]
    else:
        outx[:, 0] = 0.0
        outx[:, nc] = 0.0
        outy[0, :] = 0.0
        outy[nc, :] = 0.0


def apply_tensor_2d(axxf, ayyf, axy, fx, fy, periodic, outx, outy):
    # Normal part uses face-averaged diagonal entries; the off-diagonal
    # part couples through per-cell averages of the tangential components,
    # which keeps the induced bilinear form symmetric for arbitrary axy.
    n = axy.shape[0]
    fyb = 0.5 * (fy[:-1, :] + fy[1:, :])
    cx = axy * fyb
    outx[:, 1:n] = axxf[:, 1:n] * fx[:, 1:n] + 0.5 * (cx[:, :n - 1] + cx[:, 1:])
    fxb = 0.5 * (fx[:, :-1] + fx[:, 1:])
    cy = axy * fxb
    outy[1:n, :] = ayyf[1:n, :] * fy[1:n, :] + 0.5 * (cy[:n - 1, :] + cy[1:, :])
    if periodic:
        outx[:, 0] = axxf[:, 0] * fx[:, 0] + 0.5 * (cx[:, n - 1] + cx[:, 0])
        outx[:, n] = outx[:, 0]
        outy[0, :] = ayyf[0, :] * fy[0, :] + 0.5 * (cy[n - 1, :] + cy[0, :])
        outy[n, :] = outy[0, :]
    else:
        outx[:, 0] = 0.0
        outx[:, n] = 0.0
        outy[0, :] = 0.0
        outy[n, :] = 0.0
