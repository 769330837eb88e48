"""Select the compiled or the numpy RK4 kernels at import time.

Set ``MILATTICE_PURE_PYTHON=1`` to force the numpy kernels.  The compiled
cyclic tridiagonal sweep does not pivot, so it is used only when the coupling
operator is strictly diagonally dominant (``2 lam < 1``) and ``N >= 3``;
other cases fall back to the FFT solve.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

if os.environ.get("MILATTICE_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"

OK = _kernels_py.OK
MASS_SINGULAR = _kernels_py.MASS_SINGULAR


def cyclic_factors(lam: float, N: int):
    """Thomas and Sherman-Morrison factors of the ring operator ``x_n - lam (x_{n-1} + x_{n+1})``."""
    a = c = -lam
    b = np.ones(N)
    b[0] = 2.0            # b_0 - g with g = -b_0
    b[-1] = 1.0 + lam * lam  # b_{N-1} - a c / g
    cp = np.zeros(N)
    inv_den = np.zeros(N)
    inv_den[0] = 1.0 / b[0]
    cp[0] = c / b[0]
    for i in range(1, N):
        den = b[i] - a * cp[i - 1]
        inv_den[i] = 1.0 / den
        cp[i] = c / den
    u = np.zeros(N)
    u[0], u[-1] = -1.0, -lam
    # z = B^{-1} u by the same sweep
    z = np.empty(N)
    z[0] = u[0] / b[0]
    for i in range(1, N):
        z[i] = (u[i] - a * z[i - 1]) * inv_den[i]
    for i in range(N - 2, -1, -1):
        z[i] -= cp[i] * z[i + 1]
    fac = 1.0 / (1.0 + z[0] + lam * z[-1])
    return cp, inv_den, z, fac, float(b[0])


def _use_compiled(lam: float, N: int, backend: str | None) -> bool:
    if backend == "python" or _compiled is None:
        return False
    return N >= 3 and 2.0 * lam < 1.0


def lattice_rk4(u, v, t0, dt, nsteps, lam, gamma, omega, h0, hk, ekp, linear=False,
                mass_floor=1e-14, backend: str | None = None):
    N = len(u)
    if not _use_compiled(lam, N, backend):
        return _kernels_py.lattice_rk4(u, v, t0, dt, nsteps, lam, gamma, omega, h0, hk, ekp,
                                       linear, mass_floor)
    cp, inv_den, z, fac, b0 = cyclic_factors(lam, N)
    hk = np.asarray(hk, dtype=complex)
    ekp = np.asarray(ekp, dtype=complex).reshape(N, hk.size)
    return _compiled.lattice_rk4(
        np.ascontiguousarray(u, dtype=float), np.ascontiguousarray(v, dtype=float),
        float(t0), float(dt), int(nsteps), float(lam), float(gamma), float(omega), float(h0),
        np.ascontiguousarray(hk.real), np.ascontiguousarray(hk.imag),
        np.ascontiguousarray(ekp.real), np.ascontiguousarray(ekp.imag),
        cp, inv_den, z, fac, b0, bool(linear), float(mass_floor))


def linearized_rk4(X, dt, nsteps, lam, gamma, W, Wd, Wdd, mass_floor=1e-14,
                   backend: str | None = None):
    N = X.shape[0] // 2
    if not _use_compiled(lam, N, backend):
        return _kernels_py.linearized_rk4(X, dt, nsteps, lam, gamma, W, Wd, Wdd, mass_floor)
    cp, inv_den, z, fac, b0 = cyclic_factors(lam, N)
    c = np.ascontiguousarray
    return _compiled.linearized_rk4(c(X, dtype=float), float(dt), int(nsteps), float(lam),
                                    float(gamma), c(W, dtype=float), c(Wd, dtype=float),
                                    c(Wdd, dtype=float), cp, inv_den, z, fac, b0,
                                    float(mass_floor))
