"""Fourier-Galerkin Newton solver for travelling waves.

The unknowns are the real numbers ``(c_0, Re c_1..c_J, Im c_1..c_J)``; the
equations are the real and imaginary parts of the projected residual

    r_k = sigma_k c_k + (sigma_k - 1) (U^2)_k - h_k,    0 <= k <= J,

whose complex Jacobian is ``sigma_k [k = j] + 2 (sigma_k - 1) c_{k-j}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, SingularJacobian
from .model import ModelParams, sigma
from .series import TrigSeries, amplitude

DEFAULT_J = 64
DEFAULT_TOL = 1e-11
MAX_NEWTON = 50
COND_LIMIT = 1e14


# -- real <-> complex layout --------------------------------------------------

def series_to_vector(U: TrigSeries, J: int) -> np.ndarray:
    c = U.resized(J).coeffs[J:]
    return np.concatenate([[c[0].real], c[1:].real, c[1:].imag])


def vector_to_coeffs(x: np.ndarray, J: int) -> np.ndarray:
    """Full symmetric coefficient vector ``c_{-J..J}`` from the real layout."""
    pos = np.empty(J + 1, dtype=complex)
    pos[0] = x[0]
    pos[1:] = x[1:J + 1] + 1j * x[J + 1:]
    return np.concatenate([np.conj(pos[:0:-1]), pos])


def vector_to_series(x: np.ndarray, J: int) -> TrigSeries:
    return TrigSeries(vector_to_coeffs(x, J))


def _complex_to_real_rows(r: np.ndarray) -> np.ndarray:
    return np.concatenate([[r[0].real], r[1:].real, r[1:].imag])


def to_ser_basis(U: TrigSeries, J: int) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of ``sum_j B_j cos((j-1) z) + C_j sin(j z)``, ``j = 1..J``."""
    c = U.resized(J).coeffs[J:]
    B = np.empty(J)
    B[0] = c[0].real
    B[1:] = 2.0 * c[1:J].real
    C = -2.0 * c[1:J + 1].imag
    return B, C


def from_ser_basis(B, C) -> TrigSeries:
    B, C = np.asarray(B, float), np.asarray(C, float)
    J = max(len(B) - 1, len(C))
    modes: dict[int, complex] = {0: B[0] if len(B) else 0.0}
    for k in range(1, J + 1):
        a = B[k] if k < len(B) else 0.0
        b = C[k - 1] if k - 1 < len(C) else 0.0
        modes[k] = 0.5 * (a - 1j * b)
    return TrigSeries.from_modes(modes, J)


# -- residual and Jacobian ------------------------------------------------------

class GalerkinSystem:
    """Projected residual and analytic Jacobian at truncation ``J``."""

    def __init__(self, params: ModelParams, J: int):
        self.params = params
        self.J = J
        self.k = np.arange(J + 1)
        self.sig = sigma(params, self.k)
        self.h = params.h.resized(J).coeffs[J:]

    @property
    def size(self) -> int:
        return 2 * self.J + 1

    def with_forcing(self, h: TrigSeries) -> GalerkinSystem:
        out = GalerkinSystem.__new__(GalerkinSystem)
        out.params, out.J, out.k, out.sig = self.params, self.J, self.k, self.sig
        out.h = h.resized(self.J).coeffs[self.J:]
        return out

    def square(self, c: np.ndarray) -> np.ndarray:
        """Modes ``0..J`` of ``U^2``."""
        J = self.J
        return np.convolve(c, c)[2 * J:3 * J + 1]

    def residual(self, x: np.ndarray, h_scale: float = 1.0) -> np.ndarray:
        c = vector_to_coeffs(x, self.J)
        r = self.sig * c[self.J:] + (self.sig - 1.0) * self.square(c) - h_scale * self.h
        return _complex_to_real_rows(r)

    def forcing_vector(self) -> np.ndarray:
        return _complex_to_real_rows(self.h)

    def _coupling(self, c: np.ndarray) -> np.ndarray:
        """Complex matrix ``2 (sigma_k - 1) c_{k-j}``, rows k = 0..J, cols j = -J..J."""
        J = self.J
        ext = np.zeros(3 * J + 1, dtype=complex)   # c_{-J..2J}
        ext[:2 * J + 1] = c
        idx = self.k[:, None] - np.arange(-J, J + 1)[None, :] + J
        return 2.0 * (self.sig - 1.0)[:, None] * ext[idx]

    def _realify(self, A: np.ndarray) -> np.ndarray:
        J = self.J
        cols = np.empty((J + 1, 2 * J + 1), dtype=complex)
        cols[:, 0] = A[:, J]
        plus, minus = A[:, J + 1:], A[:, J - 1::-1]
        cols[:, 1:J + 1] = plus + minus
        cols[:, J + 1:] = 1j * (plus - minus)
        return np.vstack([cols[0:1].real, cols[1:].real, cols[1:].imag])

    def product_matrix(self, x: np.ndarray) -> np.ndarray:
        """Real matrix of ``d -> P(2 (sigma-1) (U d))``; linear and symmetric in (U, d)."""
        return self._realify(self._coupling(vector_to_coeffs(x, self.J)))

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        J = self.J
        A = self._coupling(vector_to_coeffs(x, J))
        A[self.k, self.k + J] += self.sig
        return self._realify(A)


# -- Newton ---------------------------------------------------------------------

@dataclass(frozen=True)
class GalerkinSolution:
    series: TrigSeries
    residual_norm: float
    amplitude: float
    iterations: int
    J: int
    step_history: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {"J": self.J, "residual_norm": self.residual_norm, "amplitude": self.amplitude,
                "iterations": self.iterations, "series": self.series.to_dict()}


def residual_norm(x_res: np.ndarray, J: int) -> float:
    """Order-0 norm of the residual series from its real layout."""
    r0 = abs(x_res[0])
    rk = np.hypot(x_res[1:J + 1], x_res[J + 1:])
    return float(r0 + 2.0 * np.sum(rk))


def newton_solve(
    params: ModelParams,
    U_init: TrigSeries | None = None,
    J: int = DEFAULT_J,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_NEWTON,
    check_condition: bool = True,
) -> GalerkinSolution:
    """Newton iteration on the ``2J+1`` real Galerkin unknowns.

    After the residual drops below ``tol`` one polishing step is taken unless
    the last update was already at rounding level.

    Raises
    ------
    NoConvergence
        ``max_iter`` iterations without reaching ``tol``.
    SingularJacobian
        Condition number above 1e14, typically at a fold.
    """
    if J < params.h.highest_mode() + 2:
        raise ValueError(f"J={J} too small for forcing modes up to {params.h.highest_mode()}")
    sys = GalerkinSystem(params, J)
    x = series_to_vector(U_init if U_init is not None else TrigSeries.zeros(J), J)
    steps: list[float] = []
    polished = False
    for it in range(1, max_iter + 1):
        r = sys.residual(x)
        rn = residual_norm(r, J)
        if rn <= tol:
            xs = np.max(np.abs(x)) if x.size else 0.0
            if rn == 0.0 or polished or (steps and steps[-1] <= 1e-12 * max(xs, 1e-300)):
                U = vector_to_series(x, J)
                return GalerkinSolution(U, rn, amplitude(U), it, J, tuple(steps))
            polished = True
        Jm = sys.jacobian(x)
        if check_condition:
            cond = np.linalg.cond(Jm)
            if not np.isfinite(cond) or cond > COND_LIMIT:
                raise SingularJacobian(f"Jacobian condition {cond:.3e} at iteration {it}")
        dx = np.linalg.solve(Jm, -r)
        x = x + dx
        steps.append(float(np.max(np.abs(dx))))
    raise NoConvergence(f"Newton did not reach {tol:g} in {max_iter} iterations (residual {rn:.3e})")


def pad_vector(x: np.ndarray, J: int, J_new: int) -> np.ndarray:
    return series_to_vector(vector_to_series(x, J), J_new)


# -- pseudo-arclength continuation ------------------------------------------------

VALIDITY_TOL = 1e-6


@dataclass(frozen=True)
class ContinuationPoint:
    h0: float
    solution: GalerkinSolution
    arc_s: float
    valid: bool = True
    fold: bool = False
    dh0_ds: float = float("nan")
    sigma_min: float = float("nan")


@dataclass(frozen=True)
class FoldPoint:
    h0: float
    amplitude: float
    index: int
    sigma_min: float
    sigma_min_bordered: float
    refined: bool


@dataclass
class ContinuationCurve:
    points: list = field(default_factory=list)
    folds: list = field(default_factory=list)
    stop_reason: str = ""

    def csv_rows(self, stable=None) -> list[list]:
        rows = []
        for i, pt in enumerate(self.points):
            st = "" if stable is None or stable[i] is None else str(bool(stable[i])).lower()
            rows.append([pt.h0, pt.solution.amplitude, pt.solution.residual_norm, st,
                         str(pt.valid).lower(), str(pt.fold).lower()])
        return rows

    CSV_HEADER = ("h0", "A", "residual", "stable", "valid", "fold_flag")

    def to_csv(self, path_or_file, stable=None) -> None:
        import csv
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        f = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(self.CSV_HEADER)
            for r in self.csv_rows(stable):
                w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])
        finally:
            if own:
                f.close()

    @property
    def n_folds(self) -> int:
        return len(self.folds)


class _Branch:
    """Bordered Newton machinery for ``R(x) - h0 f = 0``."""

    def __init__(self, params: ModelParams, shape: TrigSeries, J: int, tol: float):
        self.sys = GalerkinSystem(params.replace(h=shape.resized(max(shape.K_max, 0))), J)
        self.f = self.sys.forcing_vector()
        self.J = J
        self.tol = tol

    def R(self, y):
        return self.sys.residual(y[:-1], h_scale=y[-1])

    def bordered(self, y, t):
        n = y.size
        B = np.empty((n, n))
        B[:-1, :-1] = self.sys.jacobian(y[:-1])
        B[:-1, -1] = -self.f
        B[-1] = t
        return B

    def tangent(self, y, t_ref):
        B = self.bordered(y, t_ref)
        rhs = np.zeros(y.size)
        rhs[-1] = 1.0
        tau = np.linalg.solve(B, rhs)
        tau /= np.linalg.norm(tau)
        return tau if tau @ t_ref >= 0 else -tau

    def correct(self, y_pred, t, max_iter):
        """Newton on ``R = 0`` and ``t . (y - y_pred) = 0``; returns (y, iterations) or None."""
        y = y_pred.copy()
        polished = False
        for it in range(1, max_iter + 1):
            r = self.R(y)
            rn = residual_norm(r, self.J)
            if not np.isfinite(rn):
                return None
            if rn <= self.tol:
                if polished:
                    return y, it - 1
                polished = True
            B = self.bordered(y, t)
            g = np.concatenate([r, [t @ (y - y_pred)]])
            try:
                dy = np.linalg.solve(B, -g)
            except np.linalg.LinAlgError:
                return None
            y = y + dy
        rn = residual_norm(self.R(y), self.J)
        return (y, max_iter) if rn <= self.tol else None

    def sigma_min(self, y) -> float:
        return float(np.linalg.svd(self.sys.jacobian(y[:-1]), compute_uv=False)[-1])

    def solution(self, y) -> GalerkinSolution:
        U = vector_to_series(y[:-1], self.J)
        rn = residual_norm(self.R(y), self.J)
        return GalerkinSolution(U, rn, amplitude(U), 0, self.J)

    def locate_fold(self, y0, v0, max_iter=30):
        """Newton on ``R = 0, Jx v = 0, l . v = 1`` started near a fold."""
        n = y0.size - 1
        l = v0 / (v0 @ v0)
        w = np.concatenate([y0[:-1], v0, [y0[-1]]])
        for _ in range(max_iter):
            x, v, h = w[:n], w[n:2 * n], w[-1]
            Jx = self.sys.jacobian(x)
            g = np.concatenate([self.sys.residual(x, h_scale=h), Jx @ v, [l @ v - 1.0]])
            M = np.zeros((2 * n + 1, 2 * n + 1))
            M[:n, :n] = Jx
            M[:n, -1] = -self.f
            M[n:2 * n, :n] = self.sys.product_matrix(v)
            M[n:2 * n, n:2 * n] = Jx
            M[-1, n:2 * n] = l
            try:
                dw = np.linalg.solve(M, -g)
            except np.linalg.LinAlgError:
                return None
            w = w + dw
            if np.max(np.abs(dw)) <= 1e-13 * max(1.0, np.max(np.abs(w))):
                break
        x, h = w[:n], w[-1]
        if residual_norm(self.sys.residual(x, h_scale=h), self.J) > self.tol:
            return None
        return np.concatenate([x, [h]])


def _check_two_J(branch: _Branch, y, t, J2: int) -> bool:
    """Re-solve at ``2J`` on the hyperplane through ``y`` normal to ``t``."""
    J = branch.J
    big = _Branch.__new__(_Branch)
    big.sys = GalerkinSystem(branch.sys.params, J2)
    big.f = big.sys.forcing_vector()
    big.J, big.tol = J2, branch.tol
    pad = lambda v: np.concatenate([pad_vector(v[:-1], J, J2), [v[-1]]])
    y2p, t2 = pad(y), pad(t)
    out = big.correct(y2p, t2 / np.linalg.norm(t2), 12)
    if out is None:
        return False
    y2 = out[0]
    c1 = vector_to_coeffs(y[:-1], J)[J + 1:]
    c2 = vector_to_coeffs(y2[:-1], J2)[J2 + 1:J2 + 1 + J]
    kdom = int(np.argmax(np.abs(c1)))
    return bool(abs(c1[kdom] - c2[kdom]) < VALIDITY_TOL and abs(y[-1] - y2[-1]) < VALIDITY_TOL)


def continue_in_h0(
    params: ModelParams,
    h_shape: TrigSeries,
    h0_range: tuple[float, float],
    J: int = DEFAULT_J,
    ds0: float = 1e-3,
    ds_min: float = 1e-10,
    ds_max: float = 0.02,
    max_points: int = 5000,
    tol: float = DEFAULT_TOL,
    U_init: TrigSeries | None = None,
    validate: bool = True,
    h0_bounds: tuple[float, float] | None = None,
    max_corrector: int = 8,
) -> ContinuationCurve:
    """Trace solutions of ``h = h0 * h_shape`` by pseudo-arclength continuation.

    Starts at ``h0_range[0]`` heading towards ``h0_range[1]`` and follows the
    branch through folds until ``h0`` leaves ``h0_bounds`` (default: the
    range), the two-J check fails, or ``max_points`` are accepted.

    Folds are detected by a sign change of ``dh0/ds`` and refined by Newton on
    the extended system ``R = 0, J v = 0, l . v = 1``; the refined point is
    inserted into the curve with ``fold = True``.

    Raises
    ------
    StepUnderflow
        The step fell below ``ds_min`` without a converged corrector.
    """
    from .errors import StepUnderflow

    h0a, h0b = map(float, h0_range)
    lo, hi = h0_bounds if h0_bounds is not None else (min(h0a, h0b), max(h0a, h0b))
    direction = 1.0 if h0b >= h0a else -1.0
    br = _Branch(params, h_shape, J, tol)
    start = newton_solve(params.replace(h=h_shape * h0a), U_init, J=J, tol=tol)
    y = np.concatenate([series_to_vector(start.series, J), [h0a]])
    e_h = np.zeros(y.size)
    e_h[-1] = direction
    t = br.tangent(y, e_h)
    curve = ContinuationCurve()
    s = 0.0
    curve.points.append(ContinuationPoint(h0a, br.solution(y), s, True, False, float(t[-1]),
                                          br.sigma_min(y)))
    ys = [y]
    ds = ds0
    prev_y = None
    while len(curve.points) < max_points:
        sec = t if prev_y is None else (y - prev_y) / np.linalg.norm(y - prev_y)
        out = br.correct(y + ds * sec, sec, max_corrector)
        if out is None or np.linalg.norm(out[0] - (y + ds * sec)) > 0.5 * ds + 1e-14:
            ds *= 0.5
            if ds < ds_min:
                raise StepUnderflow(f"arclength step below {ds_min:g} at h0={y[-1]:.6g}")
            continue
        y_new, its = out
        t_new = br.tangent(y_new, sec)
        s_new = s + float(np.linalg.norm(y_new - y))
        valid = _check_two_J(br, y_new, t_new, 2 * J) if validate else True
        if np.sign(t_new[-1]) != np.sign(t[-1]) and t[-1] != 0:
            _insert_fold(br, curve, y, t, y_new, t_new, s, s_new)
        curve.points.append(ContinuationPoint(float(y_new[-1]), br.solution(y_new), s_new, valid,
                                              False, float(t_new[-1]), br.sigma_min(y_new)))
        prev_y, y, t, s = y, y_new, t_new, s_new
        if not valid:
            curve.stop_reason = "two-J check failed"
            break
        if not lo <= y[-1] <= hi:
            curve.stop_reason = "h0 left the bounds"
            break
        if its <= 3:
            ds = min(2 * ds, ds_max)
    else:
        curve.stop_reason = "max_points"
    return curve


def _insert_fold(br: _Branch, curve: ContinuationCurve, ya, ta, yb, tb, sa, sb) -> None:
    # start from the endpoint whose tangent is closer to vertical in h0
    y0, t0 = (ya, ta) if abs(ta[-1]) < abs(tb[-1]) else (yb, tb)
    yf = br.locate_fold(y0, t0[:-1])
    # reject a refinement that wandered off to another part of the branch
    refined = yf is not None and np.linalg.norm(yf - y0) <= 2.0 * np.linalg.norm(yb - ya)
    if not refined:
        # secant on the h0 component of the tangent
        w = ta[-1] / (ta[-1] - tb[-1])
        yf = (1 - w) * ya + w * yb
    sf = sa + float(np.linalg.norm(yf - ya))
    t_f = br.tangent(yf, ta if abs(ta[-1]) < abs(tb[-1]) else tb)
    B = br.bordered(yf, t_f)
    smin_b = float(np.linalg.svd(B, compute_uv=False)[-1])
    smin = br.sigma_min(yf)
    sol = br.solution(yf)
    curve.points.append(ContinuationPoint(float(yf[-1]), sol, sf, True, True, 0.0, smin))
    curve.folds.append(FoldPoint(float(yf[-1]), sol.amplitude, len(curve.points) - 1, smin,
                                 smin_b, bool(refined)))


def solve_on_curve(curve: ContinuationCurve, params: ModelParams, h_shape: TrigSeries, h0: float,
                   tol: float = DEFAULT_TOL, occurrence: int = 0) -> GalerkinSolution:
    """Newton solve at exactly ``h0`` starting from the traced curve.

    The initial guess interpolates the first (or ``occurrence``-th) pair of
    consecutive curve points bracketing ``h0``.

    Raises
    ------
    ValueError
        The curve does not reach ``h0``.
    """
    pts = curve.points
    hits = 0
    for a, b in zip(pts[:-1], pts[1:]):
        if (a.h0 - h0) * (b.h0 - h0) <= 0 and a.h0 != b.h0:
            if hits == occurrence:
                w = (h0 - a.h0) / (b.h0 - a.h0)
                J = a.solution.J
                xa = series_to_vector(a.solution.series, J)
                xb = series_to_vector(b.solution.series, J)
                guess = vector_to_series((1 - w) * xa + w * xb, J)
                return newton_solve(params.replace(h=h_shape * h0), guess, J=J, tol=tol)
            hits += 1
    raise ValueError(f"curve does not reach h0={h0:g}")
