"""Certified small travelling waves by contraction.

With ``C = omega (2 omega + 4 lam omega + gamma)`` the map
``R(U) = K^{-1} F(U, h)`` sends the ``||.||_2`` ball of radius ``rho`` into
itself whenever ``Theta rho - 2 C rho^2 = ||h||``, and contracts there with
constant ``4 C rho / Theta``.  A solution exists for
``0 < ||h|| < Theta^2 / (8 C)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonContraction, NotAdmissible
from .model import ModelParams, apply_F, invert_K, residual, theta
from .series import TAIL_RATIO, TrigSeries, norm, product


@dataclass(frozen=True)
class ExistenceCertificate:
    theta: float
    theta_case: str
    bound_H: float
    admissible: bool
    rho_h: float
    contraction_constant: float
    h_norm: float
    reason: str = ""

    @property
    def rho_max(self) -> float:
        """Double root of the radius equation at the largest admissible forcing."""
        return 2.0 * self.bound_H / self.theta if self.theta > 0 else 0.0

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "theta_case": self.theta_case,
            "bound_H": self.bound_H,
            "admissible": self.admissible,
            "rho_h": self.rho_h,
            "contraction_constant": self.contraction_constant,
            "h_norm": self.h_norm,
            "reason": self.reason,
        }


def ball_radius(theta_value: float, C: float, h_norm: float) -> float:
    """Smallest positive root of ``theta rho - 2 C rho^2 = h_norm``.

    Written as ``2 h / (theta + sqrt(theta^2 - 8 C h))`` to avoid cancellation
    for tiny forcing.
    """
    disc = theta_value**2 - 8.0 * C * h_norm
    if disc < 0:
        raise ValueError("forcing exceeds the admissible bound")
    return 2.0 * h_norm / (theta_value + math.sqrt(disc))


def certify(params: ModelParams, theta_value: float | None = None) -> ExistenceCertificate:
    """Admissibility of the forcing, ball radius and contraction constant."""
    if theta_value is None:
        th = theta(params)
        theta_value, case = th.value, th.case
    else:
        case = "given"
    C = params.nonlinear_constant
    hn = norm(params.h, 0)
    if theta_value <= 0:
        return ExistenceCertificate(0.0, case, 0.0, False, 0.0, float("nan"), hn, "resonant")
    bound = theta_value**2 / (8.0 * C)
    if hn == 0:
        return ExistenceCertificate(theta_value, case, bound, False, 0.0, 0.0, hn, "zero forcing")
    if hn >= bound:
        return ExistenceCertificate(theta_value, case, bound, False, float("nan"), float("nan"), hn,
                                    "forcing above bound")
    rho = ball_radius(theta_value, C, hn)
    return ExistenceCertificate(theta_value, case, bound, True, rho, 4.0 * C * rho / theta_value, hn)


def max_radius(params: ModelParams, theta_value: float) -> float:
    """Radius at the largest admissible forcing: ``Theta / (4 C)``."""
    return theta_value / (4.0 * params.nonlinear_constant)


@dataclass(frozen=True)
class ContractionResult:
    U: TrigSeries
    iterations: int
    residual: float
    observed_rate: float
    certificate: ExistenceCertificate
    max_iterate_norm: float
    K_work: int


def solve_contraction(
    params: ModelParams,
    tol: float = 1e-13,
    U0: TrigSeries | None = None,
    K_work: int | None = None,
    tail_ratio: float = TAIL_RATIO,
    K_cap: int = 1024,
    force: bool = False,
    max_iter: int | None = None,
) -> ContractionResult:
    """Banach iteration ``U <- K^{-1} F(U)`` from ``U0`` (default 0).

    Stops when successive iterates differ by less than ``tol`` in
    ``||.||_2`` and the order-0 residual is below ``10 tol``.  The working
    truncation starts at four times the highest forcing mode and doubles
    whenever the discarded tail of ``F`` exceeds ``tail_ratio`` of its norm.

    Raises
    ------
    NotAdmissible
        The forcing violates the smallness condition (unless ``force``).
    NonContraction
        The observed rate reaches 1 or the iteration budget is exhausted.
    """
    cert = certify(params)
    if not cert.admissible and not force:
        raise NotAdmissible(cert.reason or "not admissible")
    q = cert.contraction_constant if cert.admissible else 0.5
    if max_iter is None:
        if 0 < q < 1:
            max_iter = int(math.ceil(math.log(tol) / math.log(q))) + 50
        else:
            max_iter = 200
    Kh = max(params.h.highest_mode(), 1)
    K = K_work or 4 * Kh
    U = TrigSeries.zeros(K) if U0 is None else U0.resized(max(K, U0.K_max))
    K = max(K, U.K_max)
    rho_bound = cert.rho_h if cert.admissible else math.inf
    diffs: list[float] = []
    max_norm = norm(U, 2)
    it = 0
    while True:
        it += 1
        if it > max_iter:
            raise NonContraction(f"no convergence within {max_iter} iterations")
        F = apply_F(params, U)
        while F.tail_mass(K) > tail_ratio * max(norm(F, 0), np.finfo(float).tiny) and K < K_cap:
            K *= 2
        F = F.truncated(K, tail_ratio if K >= K_cap else None)
        U_new = invert_K(params, F)
        d = norm(U_new - U, 2)
        diffs.append(d)
        U = U_new
        max_norm = max(max_norm, norm(U, 2))
        if max_norm > rho_bound * (1 + 1e-9) + 1e-12:
            raise NonContraction(f"iterate left the ball: {max_norm:.3e} > rho_h = {rho_bound:.3e}")
        rate = _observed_rate(diffs, norm(U, 2))
        if rate >= 1.0 and len(diffs) > 3:
            raise NonContraction(f"observed rate {rate:.3f} >= 1")
        if d < tol:
            res = norm(residual(params, U), 0)
            if res < 10 * tol:
                break
    return ContractionResult(U, it, res, _observed_rate(diffs, norm(U, 2)), cert, max_norm, K)


def _observed_rate(diffs: list[float], scale: float) -> float:
    """Largest ratio of successive step sizes above the rounding floor."""
    floor = 1e3 * np.finfo(float).eps * max(scale, np.finfo(float).tiny)
    ratios = [b / a for a, b in zip(diffs, diffs[1:]) if a > floor and b > floor]
    return max(ratios) if ratios else 0.0


@dataclass(frozen=True)
class LipschitzReport:
    lhs: float
    rhs: float
    holds: bool


def lipschitz_check(params1: ModelParams, params2: ModelParams, U1: TrigSeries, U2: TrigSeries,
                    theta_value: float | None = None) -> LipschitzReport:
    """Check ``||U1 - U2||_2 <= ||h1 - h2|| / sqrt(Theta^2 - 8 C max ||h_i||)``."""
    for name in ("gamma", "lam", "omega", "p"):
        if getattr(params1, name) != getattr(params2, name):
            raise ValueError(f"instances differ in {name}")
    if theta_value is None:
        theta_value = theta(params1).value
    C = params1.nonlinear_constant
    H = max(norm(params1.h, 0), norm(params2.h, 0))
    lhs = norm(U1 - U2, 2)
    dh = norm(params1.h - params2.h, 0)
    rhs = dh / math.sqrt(theta_value**2 - 8 * C * H)
    return LipschitzReport(lhs, rhs, lhs <= rhs * (1 + 1e-12) + 1e-15)
