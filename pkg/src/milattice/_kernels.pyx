# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 kernels for the lattice and its linearization.

The coupling operator is solved as a cyclic tridiagonal system by the
Sherman-Morrison correction of a Thomas sweep; the factors come from
``_backend.cyclic_factors`` and depend only on ``lam`` and ``N``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, fabs

cnp.import_array()

cdef enum:
    OK = 0
    MASS_SINGULAR = 1


cdef inline void ring_solve_col(double[:, ::1] R, Py_ssize_t N, Py_ssize_t m,
                                double lam, double[::1] cp, double[::1] inv_den,
                                double[::1] z, double fac, double b0) noexcept nogil:
    """Solve the cyclic system in place for every column of ``R``."""
    cdef Py_ssize_t i, j
    cdef double a = -lam
    cdef double s
    for j in range(m):
        R[0, j] = R[0, j] / b0
    for i in range(1, N):
        for j in range(m):
            R[i, j] = (R[i, j] - a * R[i - 1, j]) * inv_den[i]
    for i in range(N - 2, -1, -1):
        for j in range(m):
            R[i, j] = R[i, j] - cp[i] * R[i + 1, j]
    for j in range(m):
        s = (R[0, j] + lam * R[N - 1, j]) * fac
        for i in range(N):
            R[i, j] = R[i, j] - s * z[i]


cdef inline bint mass_ok(double[::1] mass, Py_ssize_t N, double floor) noexcept nogil:
    cdef Py_ssize_t i
    cdef double lo = 1e308, hi = 0.0, a
    for i in range(N):
        a = fabs(mass[i])
        if a != a:
            return False
        if a < lo:
            lo = a
        if a > hi:
            hi = a
    return lo > floor * hi


def linearized_rk4(double[:, ::1] X0, double dt, Py_ssize_t nsteps, double lam, double gamma,
                   double[:, ::1] W, double[:, ::1] Wd, double[:, ::1] Wdd,
                   double[::1] cp, double[::1] inv_den, double[::1] z, double fac, double b0,
                   double mass_floor=1e-14):
    """Advance perturbation columns ``X = [u; v]``; see ``_kernels_py.linearized_rk4``."""
    cdef Py_ssize_t N = X0.shape[0] // 2
    cdef Py_ssize_t m = X0.shape[1]
    cdef Py_ssize_t i, n, j, s, jw
    X_arr = np.array(X0, dtype=np.float64, order="C")
    cdef double[:, ::1] X = X_arr
    cdef double[:, ::1] ku = np.zeros((N, m))
    cdef double[:, ::1] kv = np.zeros((N, m))
    cdef double[:, ::1] acc_u = np.zeros((N, m))
    cdef double[:, ::1] acc_v = np.zeros((N, m))
    cdef double[:, ::1] su = np.zeros((N, m))
    cdef double[:, ::1] sv = np.zeros((N, m))
    cdef double[:, ::1] R = np.zeros((N, m))
    cdef double[::1] mass = np.zeros(N)
    cdef double h, w, mm, gd, dd, d1
    cdef int status = OK
    with nogil:
        for i in range(nsteps):
            for n in range(N):
                for j in range(m):
                    acc_u[n, j] = 0.0
                    acc_v[n, j] = 0.0
                    su[n, j] = X[n, j]
                    sv[n, j] = X[N + n, j]
            for s in range(4):
                # stage time index on the half-step grid
                if s == 0:
                    jw = 2 * i
                elif s == 3:
                    jw = 2 * i + 2
                else:
                    jw = 2 * i + 1
                for n in range(N):
                    mass[n] = 1.0 + 2.0 * W[jw, n]
                if not mass_ok(mass, N, mass_floor):
                    status = MASS_SINGULAR
                    break
                for n in range(N):
                    mm = mass[n]
                    gd = 1.0 + 2.0 * gamma * Wd[jw, n]
                    for j in range(m):
                        R[n, j] = -gamma * sv[n, j] * mm - su[n, j] * gd
                ring_solve_col(R, N, m, lam, cp, inv_den, z, fac, b0)
                for n in range(N):
                    mm = 1.0 / mass[n]
                    dd = Wdd[jw, n]
                    d1 = Wd[jw, n]
                    for j in range(m):
                        ku[n, j] = sv[n, j]
                        kv[n, j] = (R[n, j] - 2.0 * (dd * su[n, j] + 2.0 * d1 * sv[n, j])) * mm
                w = 1.0 if s == 0 or s == 3 else 2.0
                h = 0.5 * dt if s < 2 else dt
                for n in range(N):
                    for j in range(m):
                        acc_u[n, j] += w * ku[n, j]
                        acc_v[n, j] += w * kv[n, j]
                        if s < 3:
                            su[n, j] = X[n, j] + h * ku[n, j]
                            sv[n, j] = X[N + n, j] + h * kv[n, j]
            if status != OK:
                break
            for n in range(N):
                for j in range(m):
                    X[n, j] += dt / 6.0 * acc_u[n, j]
                    X[N + n, j] += dt / 6.0 * acc_v[n, j]
    return X_arr, status


def lattice_rk4(double[::1] u0, double[::1] v0, double t0, double dt, Py_ssize_t nsteps,
                double lam, double gamma, double omega, double h0,
                double[::1] hr, double[::1] hi, double[:, ::1] ekr, double[:, ::1] eki,
                double[::1] cp, double[::1] inv_den, double[::1] z, double fac, double b0,
                bint linear=False, double mass_floor=1e-14):
    """Advance the nonlinear lattice; see ``_kernels_py.lattice_rk4``."""
    cdef Py_ssize_t N = u0.shape[0]
    cdef Py_ssize_t K = hr.shape[0]
    cdef Py_ssize_t i, n, k, s
    u_arr = np.array(u0, dtype=np.float64)
    v_arr = np.array(v0, dtype=np.float64)
    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef double[:, ::1] R = np.zeros((N, 1))
    cdef double[::1] su = np.zeros(N)
    cdef double[::1] sv = np.zeros(N)
    cdef double[::1] ku = np.zeros(N)
    cdef double[::1] kv = np.zeros(N)
    cdef double[::1] acc_u = np.zeros(N)
    cdef double[::1] acc_v = np.zeros(N)
    cdef double[::1] mass = np.zeros(N)
    cdef double[::1] rr = np.zeros(K if K > 0 else 1)
    cdef double[::1] ri = np.zeros(K if K > 0 else 1)
    cdef double t, ts, c, sn, f, w, h
    cdef int status = OK
    with nogil:
        for i in range(nsteps):
            t = t0 + i * dt
            for n in range(N):
                acc_u[n] = 0.0
                acc_v[n] = 0.0
                su[n] = u[n]
                sv[n] = v[n]
            for s in range(4):
                if s == 0:
                    ts = t
                elif s == 3:
                    ts = t + dt
                else:
                    ts = t + 0.5 * dt
                for k in range(K):
                    c = cos((k + 1) * omega * ts)
                    sn = sin((k + 1) * omega * ts)
                    rr[k] = hr[k] * c - hi[k] * sn
                    ri[k] = hr[k] * sn + hi[k] * c
                for n in range(N):
                    f = 0.0
                    for k in range(K):
                        f += rr[k] * ekr[n, k] - ri[k] * eki[n, k]
                    f = h0 + 2.0 * f
                    if linear:
                        R[n, 0] = f - su[n] - gamma * sv[n]
                    else:
                        mass[n] = 1.0 + 2.0 * su[n]
                        R[n, 0] = f - su[n] - gamma * sv[n] * mass[n]
                if not linear and not mass_ok(mass, N, mass_floor):
                    status = MASS_SINGULAR
                    break
                ring_solve_col(R, N, 1, lam, cp, inv_den, z, fac, b0)
                for n in range(N):
                    ku[n] = sv[n]
                    if linear:
                        kv[n] = R[n, 0]
                    else:
                        kv[n] = (R[n, 0] - 2.0 * sv[n] * sv[n]) / mass[n]
                w = 1.0 if s == 0 or s == 3 else 2.0
                h = 0.5 * dt if s < 2 else dt
                for n in range(N):
                    acc_u[n] += w * ku[n]
                    acc_v[n] += w * kv[n]
                    if s < 3:
                        su[n] = u[n] + h * ku[n]
                        sv[n] = v[n] + h * kv[n]
            if status != OK:
                break
            for n in range(N):
                u[n] += dt / 6.0 * acc_u[n]
                v[n] += dt / 6.0 * acc_v[n]
    return u_arr, v_arr, status
