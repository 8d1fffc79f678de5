# cython: boundscheck=False, wraparound=False, cdivision=True
# Compiled stencil kernels. Each function mirrors its numpy twin in
# _core_numpy.py operation for operation (and the build disables FP
# contraction), so results are bitwise identical across backends.


def grad_1d(double[::1] u, double dx, bint periodic, double[::1] out):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t k
    for k in range(1, n):
        out[k] = (u[k] - u[k - 1]) / dx
    if periodic:
        out[0] = (u[0] - u[n - 1]) / dx
        out[n] = out[0]
    else:
        out[0] = 0.0
        out[n] = 0.0


def div_1d(double[::1] f, double dx, double[::1] out):
    cdef Py_ssize_t n = out.shape[0]
    cdef Py_ssize_t j
    for j in range(n):
        out[j] = (f[j + 1] - f[j]) / dx


def upwind_1d(double[::1] n, double[::1] v, bint periodic, double[::1] out):
    cdef Py_ssize_t nc = n.shape[0]
    cdef Py_ssize_t k
    cdef double vk
    for k in range(1, nc):
        vk = v[k]
        if vk > 0.0:
            out[k] = vk * n[k - 1]
        elif vk < 0.0:
            out[k] = vk * n[k]
        else:
            out[k] = 0.0
    if periodic:
        vk = v[0]
        if vk > 0.0:
            out[0] = vk * n[nc - 1]
        elif vk < 0.0:
            out[0] = vk * n[0]
        else:
            out[0] = 0.0
        out[nc] = out[0]
    else:
        out[0] = 0.0
        out[nc] = 0.0


def apply_tensor_1d(double[::1] axxf, double[::1] f, double[::1] out):
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t k
    for k in range(n):
        out[k] = axxf[k] * f[k]


def grad_2d(double[:, ::1] u, double dx, bint periodic,
            double[:, ::1] outx, double[:, ::1] outy):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(1, n):
            outx[i, j] = (u[i, j] - u[i, j - 1]) / dx
    for i in range(1, n):
        for j in range(n):
            outy[i, j] = (u[i, j] - u[i - 1, j]) / dx
    if periodic:
        for i in range(n):
            outx[i, 0] = (u[i, 0] - u[i, n - 1]) / dx
            outx[i, n] = outx[i, 0]
        for j in range(n):
            outy[0, j] = (u[0, j] - u[n - 1, j]) / dx
            outy[n, j] = outy[0, j]
    else:
        for i in range(n):
            outx[i, 0] = 0.0
            outx[i, n] = 0.0
        for j in range(n):
            outy[0, j] = 0.0
            outy[n, j] = 0.0


def div_2d(double[:, ::1] fx, double[:, ::1] fy, double dx,
           double[:, ::1] out):
    cdef Py_ssize_t n = out.shape[0]
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(n):
            out[i, j] = (fx[i, j + 1] - fx[i, j]) / dx + (fy[i + 1, j] - fy[i, j]) / dx


def upwind_2d(double[:, ::1] n, double[:, ::1] vx, double[:, ::1] vy,
              bint periodic, double[:, ::1] outx, double[:, ::1] outy):
    cdef Py_ssize_t nc = n.shape[0]
    cdef Py_ssize_t i, j
    cdef double v
    for i in range(nc):
        for j in range(1, nc):
            v = vx[i, j]
            if v > 0.0:
                outx[i, j] = v * n[i, j - 1]
            elif v < 0.0:
                outx[i, j] = v * n[i, j]
            else:
                outx[i, j] = 0.0
    for i in range(1, nc):
        for j in range(nc):
            v = vy[i, j]
            if v > 0.0:
                outy[i, j] = v * n[i - 1, j]
            elif v < 0.0:
                outy[i, j] = v * n[i, j]
            else:
                outy[i, j] = 0.0
    if periodic:
        for i in range(nc):
            v = vx[i, 0]
            if v > 0.0:
                outx[i, 0] = v * n[i, nc - 1]
            elif v < 0.0:
                outx[i, 0] = v * n[i, 0]
            else:
                outx[i, 0] = 0.0
            outx[i, nc] = outx[i, 0]
        for j in range(nc):
            v = vy[0, j]
            if v > 0.0:
                outy[0, j] = v * n[nc - 1, j]
            elif v < 0.0:
                outy[0, j] = v * n[0, j]
            else:
                outy[0, j] = 0.0
            outy[nc, j] = outy[0, j]
    else:
        for i in range(nc):
            outx[i, 0] = 0.0
            outx[i, nc] = 0.0
        for j in range(nc):
            outy[0, j] = 0.0
            outy[nc, j] = 0.0


def apply_tensor_2d(double[:, ::1] axxf, double[:, ::1] ayyf,
                    double[:, ::1] axy, double[:, ::1] fx,
                    double[:, ::1] fy, bint periodic,
                    double[:, ::1] outx, double[:, ::1] outy):
    cdef Py_ssize_t n = axy.shape[0]
    cdef Py_ssize_t i, j, jm, im
    cdef double cl, cr
    for i in range(n):
        for j in range(1, n):
            jm = j - 1
            cl = axy[i, jm] * (0.5 * (fy[i, jm] + fy[i + 1, jm]))
            cr = axy[i, j] * (0.5 * (fy[i, j] + fy[i + 1, j]))
            outx[i, j] = axxf[i, j] * fx[i, j] + 0.5 * (cl + cr)
    for i in range(1, n):
        for j in range(n):
            im = i - 1
            cl = axy[im, j] * (0.5 * (fx[im, j] + fx[im, j + 1]))
            cr = axy[i, j] * (0.5 * (fx[i, j] + fx[i, j + 1]))
            outy[i, j] = ayyf[i, j] * fy[i, j] + 0.5 * (cl + cr)
    if periodic:
        for i in range(n):
            cl = axy[i, n - 1] * (0.5 * (fy[i, n - 1] + fy[i + 1, n - 1]))
            cr = axy[i, 0] * (0.5 * (fy[i, 0] + fy[i + 1, 0]))
            outx[i, 0] = axxf[i, 0] * fx[i, 0] + 0.5 * (cl + cr)
            outx[i, n] = outx[i, 0]
        for j in range(n):
            cl = axy[n - 1, j] * (0.5 * (fx[n - 1, j] + fx[n - 1, j + 1]))
            cr = axy[0, j] * (0.5 * (fx[0, j] + fx[0, j + 1]))
            outy[0, j] = ayyf[0, j] * fy[0, j] + 0.5 * (cl + cr)
            outy[n, j] = outy[0, j]
    else:
        for i in range(n):
            outx[i, 0] = 0.0
            outx[i, n] = 0.0
        for j in range(n):
            outy[0, j] = 0.0
            outy[n, j] = 0.0
