"""Reference numpy implementation of the lattice RK4 kernels.

The coupling operator ``(D x)_n = x_n - lam x_{n-1} - lam x_{n+1}`` is
circulant, so ``D^{-1}`` is applied with real FFTs along the site axis.
Both kernels return a status code (0 on success, 1 when the mass factor
``1 + 2u`` is numerically singular) so the compiled and reference versions
share one calling convention.
"""

from __future__ import annotations

import numpy as np

OK = 0
MASS_SINGULAR = 1


def ring_symbol(lam: float, N: int) -> np.ndarray:
    """Eigenvalues ``1 - 2 lam cos(2 pi m / N)`` for the rfft frequencies."""
    m = np.arange(N // 2 + 1)
    return 1.0 - 2.0 * lam * np.cos(2.0 * np.pi * m / N)


def ring_solve(sym: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    N = rhs.shape[0]
    if rhs.ndim == 1:
        return np.fft.irfft(np.fft.rfft(rhs) / sym, n=N)
    return np.fft.irfft(np.fft.rfft(rhs, axis=0) / sym[:, None], n=N, axis=0)


def ring_apply(lam: float, x: np.ndarray) -> np.ndarray:
    return x - lam * (np.roll(x, 1, axis=0) + np.roll(x, -1, axis=0))


def _forcing(t, omega, h0, hk, ekp):
    if hk.size == 0:
        return np.full(ekp.shape[0], h0)
    rot = hk * np.exp(1j * np.arange(1, hk.size + 1) * omega * t)
    return h0 + 2.0 * (ekp @ rot).real


def _mass_ok(m: np.ndarray, floor: float) -> bool:
    a = np.abs(m)
    return bool(np.all(np.isfinite(a)) and a.min() > floor * a.max())


def lattice_rk4(u, v, t0, dt, nsteps, lam, gamma, omega, h0, hk, ekp, linear=False,
                mass_floor=1e-14):
    """Advance the lattice ``nsteps`` RK4 steps; returns ``(u, v, status)``.

    ``hk`` holds forcing coefficients for modes ``1..K`` and ``ekp[n, k-1]``
    the phase factors ``exp(i k p n)``.
    """
    N = u.shape[0]
    sym = ring_symbol(lam, N)
    u = np.array(u, dtype=float)
    v = np.array(v, dtype=float)

    def accel(t, uu, vv):
        f = _forcing(t, omega, h0, hk, ekp)
        if linear:
            return ring_solve(sym, f - uu - gamma * vv)
        m = 1.0 + 2.0 * uu
        if not _mass_ok(m, mass_floor):
            return None
        rhs = f - uu - gamma * vv * m
        return (ring_solve(sym, rhs) - 2.0 * vv * vv) / m

    t = t0
    for _ in range(int(nsteps)):
        a1 = accel(t, u, v)
        if a1 is None:
            return u, v, MASS_SINGULAR
        u2, v2 = u + 0.5 * dt * v, v + 0.5 * dt * a1
        a2 = accel(t + 0.5 * dt, u2, v2)
        if a2 is None:
            return u, v, MASS_SINGULAR
        u3, v3 = u + 0.5 * dt * v2, v + 0.5 * dt * a2
        a3 = accel(t + 0.5 * dt, u3, v3)
        if a3 is None:
            return u, v, MASS_SINGULAR
        u4, v4 = u + dt * v3, v + dt * a3
        a4 = accel(t + dt, u4, v4)
        if a4 is None:
            return u, v, MASS_SINGULAR
        u = u + dt / 6.0 * (v + 2 * v2 + 2 * v3 + v4)
        v = v + dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        t = t0 + (_ + 1) * dt
    return u, v, OK


def linearized_rk4(X, dt, nsteps, lam, gamma, W, Wd, Wdd, mass_floor=1e-14):
    """Advance perturbation columns ``X = [u; v]`` (shape ``(2N, m)``).

    ``W``, ``Wd``, ``Wdd`` sample the wave ``U_n``, ``dU_n/dt``, ``d2U_n/dt2``
    on the half-step grid: row ``j`` is time ``j * dt / 2``.  Returns
    ``(X, status)``.
    """
    X = np.array(X, dtype=float)
    N = X.shape[0] // 2
    sym = ring_symbol(lam, N)
    u, v = X[:N], X[N:]

    def rhs(j, uu, vv):
        m = (1.0 + 2.0 * W[j])[:, None]
        b = ring_solve(sym, -gamma * vv * m - uu * (1.0 + 2.0 * gamma * Wd[j])[:, None])
        return (b - 2.0 * (Wdd[j][:, None] * uu + 2.0 * Wd[j][:, None] * vv)) / m

    for i in range(int(nsteps)):
        j = 2 * i
        if not (_mass_ok(1.0 + 2.0 * W[j], mass_floor) and _mass_ok(1.0 + 2.0 * W[j + 1], mass_floor)
                and _mass_ok(1.0 + 2.0 * W[j + 2], mass_floor)):
            return np.vstack([u, v]), MASS_SINGULAR
        a1 = rhs(j, u, v)
        u2, v2 = u + 0.5 * dt * v, v + 0.5 * dt * a1
        a2 = rhs(j + 1, u2, v2)
        u3, v3 = u + 0.5 * dt * v2, v + 0.5 * dt * a2
        a3 = rhs(j + 1, u3, v3)
        u4, v4 = u + dt * v3, v + dt * a3
        a4 = rhs(j + 2, u4, v4)
        u = u + dt / 6.0 * (v + 2 * v2 + 2 * v3 + v4)
        v = v + dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
    return np.vstack([u, v]), OK
