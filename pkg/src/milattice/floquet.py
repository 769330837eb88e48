"""Time integration of the lattice on an N-site ring and Floquet analysis.

The lattice is written as the first order system

    u' = v,    D[(1 + 2u) a] = h(w t + p n) - u - gamma (v + 2 u v) - D[2 v^2],

with ``a = u''`` and the ring operator ``D x_n = x_n - lam (x_{n-1} + x_{n+1})``.
Linearising about a travelling wave ``U_n(t) = U(w t + p n)`` gives

    D[v' (1 + 2U)] = -gamma v (1 + 2U) - u (1 + 2 gamma U') - 2 D[U'' u + 2 U' v]

(time derivatives of ``U_n``).  The monodromy matrix is the period map of
this system over ``T = 2 pi / w``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import EigenFailure, MassSingular
from .model import ModelParams
from .series import TrigSeries

COND_LIMIT = 1e14
TOL_MARGIN = 1e-6
DEFAULT_STEPS = 2000


@dataclass(frozen=True)
class LatticeState:
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        u = np.array(self.u, dtype=float).ravel()
        v = np.array(self.v, dtype=float).ravel()
        if u.shape != v.shape:
            raise ValueError("u and v must have the same length")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", float(self.t))

    @property
    def N(self) -> int:
        return self.u.size

    @classmethod
    def zeros(cls, N: int, t: float = 0.0) -> LatticeState:
        return cls(np.zeros(N), np.zeros(N), t)


# -- helpers -------------------------------------------------------------------

def _wave_series(wave) -> TrigSeries:
    if wave is None:
        return TrigSeries.zeros()
    return wave if isinstance(wave, TrigSeries) else wave.series


def phase_factors(params: ModelParams, n: np.ndarray, k: np.ndarray) -> np.ndarray:
    """``exp(i k p n)`` with exact reduction when ``p / pi`` is a known fraction."""
    kn = np.multiply.outer(np.asarray(n, dtype=np.int64), np.asarray(k, dtype=np.int64))
    frac = params.p_over_pi
    if frac is not None:
        r = np.mod(kn * frac.numerator, 2 * frac.denominator)
        return np.exp(1j * np.pi * r / frac.denominator)
    return np.exp(1j * params.p * kn)


def ring_condition(lam: float, N: int) -> float:
    m = np.arange(N)
    sym = np.abs(1.0 - 2.0 * lam * np.cos(2.0 * np.pi * m / N))
    lo = sym.min()
    return math.inf if lo == 0 else float(sym.max() / lo)


def _mass_floor(params: ModelParams, N: int) -> float:
    cond = ring_condition(params.lam, N)
    if cond > COND_LIMIT:
        raise MassSingular(f"ring operator condition {cond:.3e} for lam={params.lam}, N={N}")
    return COND_LIMIT**-1 * cond


def ring_compatible(params: ModelParams, N: int) -> bool:
    """``exp(i p N) = 1``: a travelling wave is periodic on the ring."""
    frac = params.p_over_pi
    if frac is not None:
        return (frac * N).denominator == 1 and (frac * N).numerator % 2 == 0
    return abs(np.exp(1j * params.p * N) - 1.0) < 1e-9


def wave_state(params: ModelParams, wave, N: int, t: float = 0.0) -> LatticeState:
    """Lattice state ``u_n = U(w t + p n)``, ``v_n = w U'(w t + p n)``."""
    U = _wave_series(wave)
    z = params.omega * t + params.p * np.arange(N)
    k = U.modes
    E = np.exp(1j * np.outer(z, k))
    u = (E @ U.coeffs).real
    v = params.omega * (E @ (1j * k * U.coeffs)).real
    return LatticeState(u, v, t)


def wave_samples(params: ModelParams, wave, N: int, times: np.ndarray):
    """``U_n``, ``dU_n/dt`` and ``d2U_n/dt2`` at the given times, shape ``(len(times), N)``."""
    U = _wave_series(wave)
    K = U.K_max
    w = params.omega
    c = U.coeffs[K:]                      # modes 0..K
    k = np.arange(K + 1)
    En = phase_factors(params, np.arange(N), k).T          # (K+1, N)
    rot = np.exp(1j * w * np.outer(times, k)) * c           # (nt, K+1)
    wt = np.where(k == 0, 1.0, 2.0)
    W = ((rot * wt) @ En).real
    Wd = ((rot * wt * (1j * k * w)) @ En).real
    Wdd = ((rot * wt * (-(k * w) ** 2)) @ En).real
    return W, Wd, Wdd


def _forcing_tables(params: ModelParams, N: int):
    h = params.h
    K = h.K_max
    hk = np.array(h.coeffs[K + 1:], dtype=complex)
    ekp = phase_factors(params, np.arange(N), np.arange(1, K + 1)).reshape(N, K)
    return float(h.coeffs[K].real), hk, ekp


# -- nonlinear lattice ------------------------------------------------------------

def step_lattice(params: ModelParams, state: LatticeState, dt: float, nsteps: int = 1,
                 linear: bool = False, backend: str | None = None) -> LatticeState:
    """Advance ``nsteps`` RK4 steps of the lattice.

    With ``linear`` the quadratic terms and the ``u v`` damping term are dropped.

    Raises
    ------
    MassSingular
        The ring operator or the mass factor ``1 + 2 u`` is numerically singular.
    """
    floor = _mass_floor(params, state.N)
    h0, hk, ekp = _forcing_tables(params, state.N)
    u, v, status = _backend.lattice_rk4(state.u, state.v, state.t, dt, nsteps, params.lam,
                                        params.gamma, params.omega, h0, hk, ekp, linear,
                                        floor, backend)
    if status != _backend.OK:
        raise MassSingular("mass factor 1 + 2u is numerically singular")
    return LatticeState(u, v, state.t + nsteps * dt)


def lattice_energy(params: ModelParams, state: LatticeState) -> float:
    """Quadratic energy ``sum(v D v + u^2) / 2`` of the linear lattice."""
    v = state.v
    Dv = v - params.lam * (np.roll(v, 1) + np.roll(v, -1))
    return float(0.5 * (v @ Dv + state.u @ state.u))


@dataclass
class SimulationResult:
    times: np.ndarray
    max_abs_u: np.ndarray
    deviation: np.ndarray
    energy: np.ndarray
    blow_up: bool
    growth: bool
    reason: str
    final: LatticeState
    snapshots: list = field(default_factory=list, repr=False)

    def snapshots_csv(self, f) -> None:
        import csv
        w = csv.writer(f, lineterminator="\n")
        if not self.snapshots:
            return
        N = self.snapshots[0][1].size
        w.writerow(["t"] + [f"u_{n + 1}" for n in range(N)])
        for t, u in self.snapshots:
            w.writerow([f"{t:.17g}"] + [f"{x:.17g}" for x in u])

    def summary(self) -> dict:
        return {"t_end": float(self.times[-1]) if self.times.size else 0.0,
                "max_abs_u": float(np.max(self.max_abs_u)) if self.max_abs_u.size else 0.0,
                "max_deviation": float(np.nanmax(self.deviation)) if self.deviation.size else 0.0,
                "blow_up": self.blow_up, "growth": self.growth, "reason": self.reason}


def simulate(params: ModelParams, initial: LatticeState, duration: float, dt: float,
             reference=None, stride: int = 100, ceiling: float = 1e6,
             growth_factor: float = 100.0, snapshot_stride: int | None = None,
             backend: str | None = None) -> SimulationResult:
    """Integrate the lattice, recording observers every ``stride`` steps.

    Observers are ``max |u_n|``, the deviation ``max |u_n - U(w t + p n)|``
    from an optional reference wave and :func:`lattice_energy`.  The run ends
    early with ``blow_up`` when ``max |u_n|`` exceeds ``ceiling``, the state
    stops being finite, or the mass factor becomes singular.  ``growth`` is
    set when the final deviation exceeds ``growth_factor`` times the
    deviation recorded after the first period (and 1e-6).
    """
    nsteps = int(round(duration / dt))
    N = initial.N
    floor = _mass_floor(params, N)
    h0, hk, ekp = _forcing_tables(params, N)
    ref = None if reference is None else _wave_series(reference)
    period_steps = max(1, int(round(2 * math.pi / params.omega / dt)))
    st = initial
    times, mx, dev, en, snaps = [], [], [], [], []
    blow, reason = False, ""

    def observe(s):
        times.append(s.t)
        mx.append(float(np.max(np.abs(s.u))))
        if ref is not None:
            dev.append(float(np.max(np.abs(s.u - wave_state(params, ref, N, s.t).u))))
        else:
            dev.append(float("nan"))
        en.append(lattice_energy(params, s))

    observe(st)
    if snapshot_stride:
        snaps.append((st.t, st.u.copy()))
    done = 0
    while done < nsteps:
        n = min(stride, nsteps - done)
        u, v, status = _backend.lattice_rk4(st.u, st.v, st.t, dt, n, params.lam, params.gamma,
                                            params.omega, h0, hk, ekp, False, floor, backend)
        if status != _backend.OK:
            blow, reason = True, "mass factor singular"
            break
        st = LatticeState(u, v, initial.t + (done + n) * dt)
        done += n
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            blow, reason = True, "non-finite state"
            break
        observe(st)
        if snapshot_stride and (done // stride) % max(1, snapshot_stride // stride) == 0:
            snaps.append((st.t, st.u.copy()))
        if mx[-1] > ceiling:
            blow, reason = True, f"max |u| above {ceiling:g}"
            break
    growth = False
    if ref is not None and len(dev) > 1:
        tt = np.array(times)
        after = np.nonzero(tt >= initial.t + period_steps * dt - 1e-12)[0]
        base = dev[after[0]] if after.size else dev[1]
        growth = bool(dev[-1] > max(growth_factor * base, 1e-6))
    if blow:
        growth = True
    return SimulationResult(np.array(times), np.array(mx), np.array(dev), np.array(en), blow,
                            growth, reason or ("growth" if growth else ""), st, snaps)


# -- linearisation and monodromy ---------------------------------------------------

def step_linearized(params: ModelParams, wave, state: LatticeState, dt: float, nsteps: int = 1,
                    backend: str | None = None) -> LatticeState:
    """Advance a perturbation ``(u, v)`` about the wave ``nsteps`` RK4 steps from ``state.t``."""
    N = state.N
    floor = _mass_floor(params, N)
    times = state.t + 0.5 * dt * np.arange(2 * nsteps + 1)
    W, Wd, Wdd = wave_samples(params, wave, N, times)
    X = np.concatenate([state.u, state.v])[:, None]
    X, status = _backend.linearized_rk4(X, dt, nsteps, params.lam, params.gamma, W, Wd, Wdd,
                                        floor, backend)
    if status != _backend.OK:
        raise MassSingular("mass factor 1 + 2U is numerically singular")
    return LatticeState(X[:N, 0], X[N:, 0], state.t + nsteps * dt)


@dataclass(frozen=True)
class MonodromyResult:
    multipliers: np.ndarray
    max_modulus: float
    stable: bool
    classification: str
    near_unit: tuple
    period: float
    N: int
    steps_per_period: int
    liouville: float
    det_modulus: float
    matrix: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "period": self.period,
            "steps_per_period": self.steps_per_period,
            "max_modulus": self.max_modulus,
            "stable": self.stable,
            "classification": self.classification,
            "near_unit": [[float(z.real), float(z.imag)] for z in self.near_unit],
            "liouville": self.liouville,
            "det_modulus": self.det_modulus,
            "multipliers": [[float(z.real), float(z.imag)] for z in self.multipliers],
        }

    def csv_rows(self) -> list[tuple[float, float]]:
        return [(float(abs(z)), float(np.angle(z))) for z in self.multipliers]


def _columns(args):
    X, dt, n, lam, gamma, W, Wd, Wdd, floor, backend = args
    return _backend.linearized_rk4(X, dt, n, lam, gamma, W, Wd, Wdd, floor, backend)


def classify(multipliers: np.ndarray, tol_margin: float = TOL_MARGIN) -> tuple[str, tuple]:
    mod = np.abs(multipliers)
    near = tuple(multipliers[np.abs(mod - 1.0) <= tol_margin])
    if np.any(mod > 1.0 + tol_margin):
        return "unstable", near
    if np.all(mod < 1.0 - tol_margin):
        return "stable", near
    return "marginal", near


def monodromy(params: ModelParams, wave, N: int, steps_per_period: int = DEFAULT_STEPS,
              jobs: int = 1, tol_margin: float = TOL_MARGIN, backend: str | None = None,
              keep_matrix: bool = True) -> MonodromyResult:
    """Floquet multipliers of the wave on an ``N``-site ring.

    Integrates the ``2N`` unit perturbations over one period and takes the
    eigenvalues of the resulting matrix (LAPACK Hessenberg QR).  The wave is
    stable when every modulus is below ``1 - tol_margin``, unstable when one
    exceeds ``1 + tol_margin``, and marginal otherwise.

    Raises
    ------
    ValueError
        ``N < 2`` or the wave is not periodic on the ring.
    MassSingular, EigenFailure
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    U = _wave_series(wave)
    if U.highest_mode() > 0 and not ring_compatible(params, N):
        raise ValueError(f"p*N is not a multiple of 2*pi for N={N}; the wave does not fit the ring")
    floor = _mass_floor(params, N)
    T = 2.0 * math.pi / params.omega
    n = int(steps_per_period)
    dt = T / n
    times = 0.5 * dt * np.arange(2 * n + 1)
    W, Wd, Wdd = wave_samples(params, U, N, times)
    X0 = np.eye(2 * N)
    jobs = max(1, int(jobs))
    if jobs == 1:
        M, status = _backend.linearized_rk4(X0, dt, n, params.lam, params.gamma, W, Wd, Wdd,
                                            floor, backend)
        statuses = [status]
    else:
        chunks = np.array_split(np.arange(2 * N), jobs)
        args = [(np.ascontiguousarray(X0[:, c]), dt, n, params.lam, params.gamma, W, Wd, Wdd,
                 floor, backend) for c in chunks]
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_columns, args))
        M = np.hstack([p[0] for p in parts])
        statuses = [p[1] for p in parts]
    if any(s != _backend.OK for s in statuses):
        raise MassSingular("mass factor 1 + 2U is numerically singular along the wave")
    try:
        mult = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    mult = mult[np.lexsort((np.angle(mult), -np.abs(mult)))]
    cls, near = classify(mult, tol_margin)
    # volume factor: integral of the trace of the linear vector field
    m = np.arange(N)
    tr_inv = float(np.sum(1.0 / (1.0 - 2.0 * params.lam * np.cos(2 * np.pi * m / N))))
    tr = -params.gamma * tr_inv - 4.0 * np.sum(Wd / (1.0 + 2.0 * W), axis=1)
    integral = dt / 6.0 * float(np.sum(tr[0:-1:2] + 4 * tr[1::2] + tr[2::2]))
    return MonodromyResult(
        multipliers=mult,
        max_modulus=float(np.max(np.abs(mult))),
        stable=cls == "stable",
        classification=cls,
        near_unit=near,
        period=T,
        N=N,
        steps_per_period=n,
        liouville=math.exp(integral),
        det_modulus=float(np.exp(np.sum(np.log(np.abs(mult))))),
        matrix=M if keep_matrix else None,
    )


def zero_wave_multipliers(params: ModelParams, N: int) -> np.ndarray:
    """Multipliers ``exp(r T)`` with ``(1 - 2 lam cos q) r^2 + gamma r + 1 = 0``, ``q = 2 pi m / N``."""
    T = 2.0 * math.pi / params.omega
    out = []
    for m in range(N):
        a = 1.0 - 2.0 * params.lam * math.cos(2 * math.pi * m / N)
        r = np.roots([a, params.gamma, 1.0])
        out.extend(np.exp(r * T))
    return np.array(out)
