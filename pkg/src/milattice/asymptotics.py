"""Leading-order branches of small waves at a simple resonance.

At a resonant mode ``k0`` the undamped symbol vanishes and the wave is
``U = c e^{i k0 z} + conj(c) e^{-i k0 z} + V`` with ``c = x + i y``.  The
reduced (bifurcation) system for ``(x, y)`` reads, with damping ``eps gamma``
and forcing ``eps h``,

    2 (mu_2/delta_2 + mu_0) eps x + (2 nu_2/delta_2 + gamma w k0) eps y
        + mu_k0 eps + upsilon x (x^2 + y^2) - (2 eps^2 / k0^2) S1 = 0
    (2 nu_2/delta_2 - gamma w k0) eps x + 2 (-mu_2/delta_2 + mu_0) eps y
        + nu_k0 eps + upsilon y (x^2 + y^2) - (2 eps^2 / k0^2) S2 = 0

where index ``2`` stands for ``2 k0``, ``upsilon = 2 (1 - delta_2) / delta_2``
and ``S1``, ``S2`` are finite sums over the forcing modes.  The scalings of
this system give the branch types computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ComplexBranch, DegenerateLinearPart, NotSimpleResonance
from .model import ModelParams, delta, resonance_scan
from .series import TrigSeries

DEGENERATE_TOL = 1e-12

CUBEROOT = "cuberoot"
LINEAR = "linear"
ORDER_EPS = "order-eps"
SQRT = "sqrt"


@dataclass(frozen=True)
class BifCoefficients:
    """Data of the reduced system at resonant mode ``k0``.

    ``mu``, ``nu``, ``delta`` and ``d`` are indexed by the signed mode ``k``
    over ``-K..K``; ``d_k = h_k / delta_k`` is zero at ``k = +-k0``.
    """

    k0: int
    K: int
    delta: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    d: np.ndarray
    upsilon: float
    gamma: float
    omega: float

    def at(self, arr: np.ndarray, k: int):
        if abs(k) > self.K:
            return 0.0 * arr[0]
        return arr[self.K + k]

    @property
    def delta_2k0(self) -> float:
        return float(self.at(self.delta, 2 * self.k0))

    @property
    def mu_k0(self) -> float:
        return float(self.at(self.mu, self.k0))

    @property
    def nu_k0(self) -> float:
        return float(self.at(self.nu, self.k0))

    @property
    def mu_2k0(self) -> float:
        return float(self.at(self.mu, 2 * self.k0))

    @property
    def nu_2k0(self) -> float:
        return float(self.at(self.nu, 2 * self.k0))

    @property
    def mu_0(self) -> float:
        return float(self.at(self.mu, 0))

    def mixing_sums(self) -> tuple[float, float]:
        """``S1, S2`` over ``k`` outside ``{0, +-k0, 2 k0}``.

        Only finitely many terms are nonzero because ``d_k = 0`` wherever
        ``h_k = 0``; the sums are therefore exact.
        """
        k0 = self.k0
        s1 = s2 = 0.0
        for k in range(-self.K, self.K + 1):
            j = k - k0
            if k in (0, k0, -k0, 2 * k0) or abs(j) > self.K:
                continue
            dk, dj = self.at(self.delta, k), self.at(self.delta, j)
            mk, nk = self.at(self.mu, k), self.at(self.nu, k)
            mj, nj = self.at(self.mu, j), self.at(self.nu, j)
            w = k0 * (k - k0) / (dk * dj)
            s1 += w * (mk * mj + nk * nj)
            s2 += w * (mj * nk - mk * nj)
        return float(s1), float(s2)

    def linear_matrix(self) -> np.ndarray:
        """Matrix multiplying ``(x, y)`` in the order-eps part of the reduced system."""
        d2, m2, n2, m0 = self.delta_2k0, self.mu_2k0, self.nu_2k0, self.mu_0
        g = self.gamma * self.omega * self.k0
        return np.array([[2 * (m2 / d2 + m0), 2 * n2 / d2 + g],
                         [2 * n2 / d2 - g, 2 * (-m2 / d2 + m0)]])

    def to_dict(self) -> dict:
        return {"k0": self.k0, "delta_2k0": self.delta_2k0, "upsilon": self.upsilon,
                "mu_k0": self.mu_k0, "nu_k0": self.nu_k0, "mu_2k0": self.mu_2k0,
                "nu_2k0": self.nu_2k0, "mu_0": self.mu_0}


def bif_coefficients(params: ModelParams, k0: int, check: bool = True) -> BifCoefficients:
    """Coefficients of the reduced system for forcing ``params.h``.

    ``params.gamma`` is the damping factor multiplying ``eps``.

    Raises
    ------
    NotSimpleResonance
        ``k0`` is not the only resonant pair (when ``check`` is set).
    """
    k0 = int(k0)
    if check:
        rep = resonance_scan(params, k_limit=max(1000, 4 * abs(k0)))
        if not rep.simple or abs(k0) not in {abs(m) for m in rep.resonant_modes}:
            raise NotSimpleResonance(
                f"k0={k0} is not a simple resonance (modes {list(rep.resonant_modes)})")
    K = max(params.h.highest_mode(), 2 * abs(k0)) + abs(k0)
    k = np.arange(-K, K + 1)
    dl = delta(params, k)
    dl[K] = 1.0
    h = params.h.resized(K).coeffs
    d = np.zeros_like(h)
    keep = (np.abs(k) != abs(k0))
    d[keep] = h[keep] / dl[keep]
    d2 = float(dl[K + 2 * k0])
    if d2 == 1.0:
        raise DegenerateLinearPart("delta_2k0 = 1: the cubic coefficient vanishes")
    ups = 2.0 * (1.0 - d2) / d2
    return BifCoefficients(k0, K, dl, h.real.copy(), h.imag.copy(), d, ups,
                           params.gamma, params.omega)


def bif_residual(coeffs: BifCoefficients, x: float, y: float, eps: float,
                 gamma_scaled: bool = True) -> tuple[float, float]:
    """Left-hand sides of the reduced system without remainder terms.

    With ``gamma_scaled`` (the default) the damping term carries the factor
    ``eps``; otherwise ``coeffs.gamma`` is taken to be the full damping.
    """
    A = coeffs.linear_matrix()
    g = coeffs.gamma * coeffs.omega * coeffs.k0
    if not gamma_scaled:
        # move the damping out of the eps-scaled matrix
        A = A - np.array([[0.0, g], [-g, 0.0]])
    lin = eps * (A @ np.array([x, y]))
    if not gamma_scaled:
        lin = lin + np.array([g * y, -g * x])
    s1, s2 = coeffs.mixing_sums()
    r2 = x * x + y * y
    pre = 2.0 * eps**2 / coeffs.k0**2
    ups = coeffs.upsilon
    r1 = lin[0] + coeffs.mu_k0 * eps + ups * x * r2 - pre * s1
    r2_ = lin[1] + coeffs.nu_k0 * eps + ups * y * r2 - pre * s2
    return float(r1), float(r2_)


# -- square-root branches ---------------------------------------------------------

@dataclass(frozen=True)
class TildeCoefficients:
    a: float
    b: float
    c: float
    d: float
    sign_eps: int


def tilde_coefficients(coeffs: BifCoefficients, sign_eps: int) -> TildeCoefficients:
    s = 1 if sign_eps > 0 else -1
    A = s * coeffs.linear_matrix() / coeffs.upsilon
    return TildeCoefficients(A[0, 0], A[0, 1], A[1, 0], A[1, 1], s)


def q_roots(t: TildeCoefficients) -> tuple[float, float] | None:
    """``q1, q2`` from ``c q^2 - (a - d) q - b = 0``; ``None`` if complex."""
    disc = (t.a - t.d) ** 2 + 4 * t.b * t.c
    if disc < 0:
        return None
    if t.c == 0:
        raise DegenerateLinearPart("c~ = 0: the ratio x / y is not determined by the quadratic")
    r = math.sqrt(disc)
    return ((t.a - t.d) + r) / (2 * t.c), ((t.a - t.d) - r) / (2 * t.c)


def sqrt_branches(coeffs: BifCoefficients, sign_eps: int = 1, strict: bool = False
                 ) -> list[tuple[float, float]]:
    """Nontrivial roots ``(q y, y)`` of the scaled cubic system.

    Returns the points with ``c~ q + d~ < 0`` ordered ``q1`` before ``q2`` and
    positive ``y`` first.  A negative discriminant of the ``q`` quadratic
    means no real branch and yields ``[]``; with ``strict`` it raises
    :class:`ComplexBranch` instead.
    """
    t = tilde_coefficients(coeffs, sign_eps)
    qs = q_roots(t)
    if qs is None:
        if strict:
            raise ComplexBranch("discriminant of the q quadratic is negative")
        return []
    out = []
    for q in qs:
        v = t.c * q + t.d
        if v < 0:
            y = math.sqrt(-v / (1 + q * q))
            out += [(q * y, y), (-q * y, -y)]
    return out


def reduced_system(t: TildeCoefficients, x: float, y: float) -> tuple[float, float]:
    r2 = x * x + y * y
    return t.a * x + t.b * y + x * r2, t.c * x + t.d * y + y * r2


@dataclass(frozen=True)
class BranchThresholds:
    discriminant: float
    two_branch: bool
    four_branch: bool
    mu0_two_branch_edge: float
    mu0_four_branch_edge: float

    def to_dict(self) -> dict:
        return {"discriminant": self.discriminant, "two_branch": self.two_branch,
                "four_branch": self.four_branch, "mu0_two_branch_edge": self.mu0_two_branch_edge,
                "mu0_four_branch_edge": self.mu0_four_branch_edge}


def branch_thresholds(coeffs: BifCoefficients) -> BranchThresholds:
    """Sign conditions selecting the number of square-root branches.

    ``disc = delta_2^2 (4 mu_0^2 + g) - 4 (mu_2^2 + nu_2^2)`` with
    ``g = (gamma omega k0)^2``.  Two branches exist for ``disc < 0`` and four
    (for one sign of ``eps``) when ``0 < disc < 4 mu_0^2``.  The edges are the
    values of ``|mu_0|`` at which each condition switches, other data fixed.
    """
    d2 = coeffs.delta_2k0
    s = coeffs.mu_2k0**2 + coeffs.nu_2k0**2
    g = (coeffs.gamma * coeffs.omega * coeffs.k0) ** 2
    m0 = coeffs.mu_0
    disc = d2**2 * (4 * m0**2 + g) - 4 * s
    e2 = (4 * s / d2**2 - g) / 4
    e3 = (4 * s - d2**2 * g) / (4 * (d2**2 - 1)) if d2**2 != 1 else float("nan")
    return BranchThresholds(
        discriminant=float(disc),
        two_branch=bool(disc < 0),
        four_branch=bool(0 < disc < 4 * m0**2),
        mu0_two_branch_edge=math.sqrt(e2) if e2 >= 0 else float("nan"),
        mu0_four_branch_edge=math.sqrt(e3) if e3 >= 0 else float("nan"),
    )


def branch_determinant(coeffs: BifCoefficients, q: float, y: float, sign_eps: int = 1) -> float:
    """Jacobian determinant of the scaled cubic system at ``(q y, y)``, divided by ``upsilon^2``."""
    t = tilde_coefficients(coeffs, sign_eps)
    a, b, c, d = t.a, t.b, t.c, t.d
    y2 = y * y
    return float(-b * c + a * d + (3 * a + d + q * (-2 * (b + c) + (a + 3 * d) * q)) * y2
                 + 3 * (1 + q * q) ** 2 * y2 * y2)


def linear_solution(coeffs: BifCoefficients) -> tuple[float, float]:
    """First-order coefficients ``(x'(0), y'(0))`` of the order-eps branch."""
    A = coeffs.linear_matrix()
    det = np.linalg.det(A)
    if abs(det) < DEGENERATE_TOL:
        raise DegenerateLinearPart(f"linear part is singular (det = {det:.3e})")
    s1, s2 = coeffs.mixing_sums()
    rhs = 2.0 / coeffs.k0**2 * np.array([s1, s2])
    x, y = np.linalg.solve(A, rhs)
    return float(x), float(y)


# -- predictions -------------------------------------------------------------------

@dataclass(frozen=True)
class BranchPrediction:
    """Leading-order branch.

    ``profile(eps)`` gives the predicted wave for the problem with damping
    ``eps * gamma`` and forcing ``eps * h`` (``eps^2 * h`` for the linear
    regime).  ``companions`` holds square-root branches that coexist with an
    order-eps branch.
    """

    regime: str
    k0: int
    points: tuple
    scaling_exponent: float
    forcing_order: int
    sign_eps: int
    profile: Callable[[float], TrigSeries] = field(repr=False, compare=False)
    determinants: tuple = ()
    companions: tuple = ()

    def to_dict(self, eps: float | None = None, n_samples: int = 64) -> dict:
        out = {"regime": self.regime, "k0": self.k0,
               "points": [list(p) for p in self.points],
               "scaling_exponent": self.scaling_exponent,
               "forcing_order": self.forcing_order, "sign_eps": self.sign_eps,
               "determinants": list(self.determinants)}
        if eps is not None:
            U = self.profile(eps)
            z = 2 * np.pi * np.arange(n_samples) / n_samples
            out["eps"] = eps
            out["profile"] = U.to_dict()
            out["samples"] = [float(v) for v in U.evaluate(z)]
        out["companions"] = [c.to_dict(eps, n_samples) for c in self.companions]
        return out


def scaled_problem(template: ModelParams, eps: float, forcing_order: int = 1) -> ModelParams:
    """Instance with damping ``eps * gamma`` and forcing ``eps^forcing_order * h``."""
    return template.replace(gamma=abs(eps) * template.gamma, h=template.h * eps**forcing_order)


def _mode_profile(k0: int, x: float, y: float, K: int) -> TrigSeries:
    if k0 > 0:
        return TrigSeries.from_modes({k0: complex(x, y)}, K)
    return TrigSeries.from_modes({-k0: complex(x, -y)}, K)


def _resonance_k0(params: ModelParams, k0: int | None) -> int:
    rep = resonance_scan(params)
    if not rep.simple:
        raise NotSimpleResonance(f"resonant modes {list(rep.resonant_modes)} are not a single pair")
    if k0 is None:
        return int(rep.resonant_modes[0])
    if abs(k0) != abs(rep.resonant_modes[0]):
        raise NotSimpleResonance(f"k0={k0} is not resonant (modes {list(rep.resonant_modes)})")
    return int(k0)


def predict(params: ModelParams, k0: int | None = None, forcing_order: int = 1,
            sign_eps: int = 1) -> BranchPrediction:
    """Select the regime and build the leading-order branch.

    Parameters
    ----------
    params
        Template instance: ``gamma`` and ``h`` are the factors of ``eps``.
    forcing_order
        1 for forcing ``eps h``; 2 for ``eps^2 h`` (needs ``gamma > 0``).
    sign_eps
        Sign of ``eps`` for the square-root branches.
    """
    k0 = _resonance_k0(params, k0)
    co = bif_coefficients(params, k0, check=False)
    K = co.K
    sign_eps = 1 if sign_eps > 0 else -1
    m, n = co.mu_k0, co.nu_k0
    d_series = TrigSeries(co.d)
    if (m, n) != (0.0, 0.0):
        if forcing_order == 2:
            if params.gamma == 0:
                raise DegenerateLinearPart("the linear regime needs gamma > 0")
            g = params.gamma * params.omega * k0
            x0, y0 = n / g, -m / g
            base = _mode_profile(k0, x0, y0, K)
            return BranchPrediction(LINEAR, k0, ((x0, y0),), 1.0, 2, sign_eps,
                                    lambda eps: base * eps)
        if forcing_order != 1:
            raise ValueError("forcing_order must be 1 or 2")
        d2 = co.delta_2k0
        r = -np.cbrt(d2 / (2 * (1 - d2) * (m * m + n * n)))
        x0, y0 = float(r * m), float(r * n)
        base = _mode_profile(k0, x0, y0, K)
        return BranchPrediction(CUBEROOT, k0, ((x0, y0),), 1.0 / 3.0, 1, sign_eps,
                                lambda eps: base * float(np.cbrt(eps)))
    if forcing_order != 1:
        raise ValueError("forcing with vanishing resonant coefficients is handled at forcing_order 1")
    xp, yp = linear_solution(co)
    lin = _mode_profile(k0, xp, yp, K) + d_series
    companions = []
    pts = sqrt_branches(co, sign_eps)
    if pts:
        dets = tuple(branch_determinant(co, x / y, y, sign_eps) for x, y in pts)
        for (x, y), dt in zip(pts, dets):
            if abs(dt) < DEGENERATE_TOL:
                continue
            base = _mode_profile(k0, x, y, K)
            companions.append(BranchPrediction(
                SQRT, k0, ((x, y),), 0.5, 1, sign_eps,
                (lambda b: (lambda eps: b * math.sqrt(abs(eps))))(base), (dt,)))
    return BranchPrediction(ORDER_EPS, k0, ((xp, yp),), 1.0, 1, sign_eps,
                            lambda eps: lin * eps, (), tuple(companions))
