"""Problem instance, the linear operator K, its inverse, the nonlinearity F,
the invertibility constant Theta and detection of resonant modes.

The travelling-wave ansatz ``u_n(t) = U(omega t + p n)`` turns the lattice into
``K U = F(U, h)`` where K is diagonal in Fourier space with symbol

    sigma_k = 1 - omega^2 k^2 (1 - 2 lam cos kp) + i gamma omega k.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .errors import SingularSymbol
from .series import TrigSeries, derivative, norm, product, shift

SINGULAR_TOL = 1e-14
RESONANCE_RTOL = 1e-9
RATIONAL_DENOM_CAP = 10**6
RATIONAL_TOL = 1e-12


class IrrationalPhaseWarning(UserWarning):
    """Theta was obtained from a finite scan and is not certified."""


def recognize_rational(x: float, cap: int = RATIONAL_DENOM_CAP, tol: float = RATIONAL_TOL) -> Fraction | None:
    """Continued-fraction reconstruction of ``x`` with denominator <= ``cap``."""
    frac = Fraction(x).limit_denominator(cap)
    err = abs(float(frac) - x)
    # a best approximant of an irrational sits ~1/q^2 away; a rounded rational far closer
    if err <= tol * max(1.0, abs(x)) and err <= 1e-3 / frac.denominator**2:
        return frac
    return None


@dataclass(frozen=True)
class ModelParams:
    """Damping ``gamma``, coupling ``lam``, drive frequency ``omega``, phase ``p``
    and forcing series ``h``.

    ``p_over_pi`` holds the exact ratio ``p / pi`` when the phase was given
    symbolically; otherwise it is recovered by continued fractions on demand.
    """

    gamma: float
    lam: float
    omega: float
    p: float
    h: TrigSeries = field(default_factory=TrigSeries.zeros)
    p_over_pi: Fraction | None = None

    def __post_init__(self):
        if self.p_over_pi is not None:
            object.__setattr__(self, "p_over_pi", Fraction(self.p_over_pi))
            object.__setattr__(self, "p", float(self.p_over_pi) * math.pi)
        for name in ("gamma", "lam", "omega", "p"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.gamma >= 0:
            raise ValueError("gamma: must be >= 0")
        if not self.lam > 0:
            raise ValueError("lambda: must be > 0")
        if not self.omega > 0:
            raise ValueError("omega: must be > 0")
        if self.p == 0 or not math.isfinite(self.p):
            raise ValueError("p: must be finite and nonzero")
        if not self.h.is_real(1e-12):
            raise ValueError("h: coefficients are not conjugate symmetric")

    @classmethod
    def with_rational_phase(cls, gamma, lam, omega, num: int, den: int, h=None) -> ModelParams:
        """Phase ``p = (num/den) * pi`` kept exactly."""
        return cls(gamma, lam, omega, 1.0, h or TrigSeries.zeros(), Fraction(num, den))

    @property
    def phase_fraction(self) -> Fraction | None:
        if self.p_over_pi is not None:
            return self.p_over_pi
        return recognize_rational(self.p / math.pi)

    @property
    def nonlinear_constant(self) -> float:
        """``omega (2 omega + 4 lam omega + gamma)``, the scale of the quadratic bounds."""
        w = self.omega
        return w * (2 * w + 4 * self.lam * w + self.gamma)

    @property
    def operator_norm_bound(self) -> float:
        return 1.0 + self.omega**2 * (1 + 2 * self.lam) + self.gamma * self.omega

    def replace(self, **changes) -> ModelParams:
        return replace(self, **changes)

    def cos_kp(self, k) -> np.ndarray:
        """``cos(k p)``; reduced exactly modulo 2*pi when p/pi is a known fraction."""
        k = np.asarray(k)
        frac = self.p_over_pi
        if frac is not None:
            num, den = frac.numerator, frac.denominator
            r = np.mod(k.astype(np.int64) * num, 2 * den)
            return np.cos(np.pi * r / den)
        return np.cos(k * self.p)

    def to_dict(self) -> dict:
        if self.p_over_pi is not None:
            p = {"num": self.p_over_pi.numerator, "den": self.p_over_pi.denominator, "times_pi": True}
        else:
            p = self.p
        return {"gamma": self.gamma, "lambda": self.lam, "omega": self.omega, "p": p, "h": self.h.to_dict()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> ModelParams:
        p = data["p"]
        p_frac = None
        if isinstance(p, dict):
            if p.get("times_pi", True):
                p_frac = Fraction(int(p["num"]), int(p["den"]))
                p = 1.0
            else:
                p = float(p["num"]) / float(p["den"])
        elif isinstance(p, str):
            p_frac = parse_pi_multiple(p)
            p = 1.0
        h = data.get("h")
        h = TrigSeries.zeros() if h is None else TrigSeries.from_json(h)
        return cls(data.get("gamma", 0.0), data["lambda"], data["omega"], p, h, p_frac)

    @classmethod
    def from_json(cls, text: str) -> ModelParams:
        return cls.from_dict(json.loads(text))


def parse_pi_multiple(text: str) -> Fraction:
    """Parse ``"pi/4"``, ``"3*pi/8"``, ``"2pi"``, ``"-pi"`` into ``p / pi``."""
    s = text.replace(" ", "").lower()
    if "pi" not in s:
        raise ValueError(f"not a multiple of pi: {text!r}")
    before, after = s.split("pi", 1)
    before = before.rstrip("*")
    if before in ("", "+"):
        num = Fraction(1)
    elif before == "-":
        num = Fraction(-1)
    else:
        num = Fraction(before)
    if after:
        if not after.startswith("/"):
            raise ValueError(f"cannot parse phase {text!r}")
        num /= Fraction(after[1:])
    return num


# -- symbol -----------------------------------------------------------------

def sigma(params: ModelParams, k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    w2 = params.omega**2
    return (1.0 - w2 * k**2 * (1.0 - 2.0 * params.lam * params.cos_kp(k.astype(np.int64)))
            + 1j * params.gamma * params.omega * k)


def delta(params: ModelParams, k) -> np.ndarray:
    """Real part of the undamped symbol; ``delta_0 = 1``."""
    k = np.asarray(k, dtype=float)
    w2 = params.omega**2
    return 1.0 - w2 * k**2 * (1.0 - 2.0 * params.lam * params.cos_kp(k.astype(np.int64)))


@dataclass(frozen=True)
class KSymbol:
    ks: np.ndarray
    sigma: np.ndarray
    delta: np.ndarray

    def at(self, k: int) -> complex:
        return complex(self.sigma[int(k) - int(self.ks[0])])


def ksymbol(params: ModelParams, K: int) -> KSymbol:
    ks = np.arange(-K, K + 1)
    return KSymbol(ks, sigma(params, ks), delta(params, ks))


def apply_K(params: ModelParams, U: TrigSeries) -> TrigSeries:
    return TrigSeries(sigma(params, U.modes) * U.coeffs)


def invert_K(params: ModelParams, f: TrigSeries) -> TrigSeries:
    s = sigma(params, f.modes)
    small = np.abs(s) < SINGULAR_TOL
    if np.any(small):
        bad = f.modes[small]
        raise SingularSymbol(f"symbol vanishes at modes {sorted(set(np.abs(bad).tolist()))}")
    return TrigSeries(f.coeffs / s)


def apply_F(params: ModelParams, U: TrigSeries, K_work: int | None = None,
            tail_ratio: float | None = None) -> TrigSeries:
    """Nonlinear right-hand side assembled from series primitives.

    ``-omega^2 [(U^2)'' - lam (U^2)''(z-p) - lam (U^2)''(z+p)] - gamma omega (U^2)' + h``
    """
    w = product(U, U)
    w2 = derivative(w, 2)
    coupled = w2 - params.lam * shift(w2, -params.p) - params.lam * shift(w2, params.p)
    out = -params.omega**2 * coupled - params.gamma * params.omega * derivative(w, 1) + params.h
    if K_work is not None:
        out = out.truncated(K_work, tail_ratio)
    return out


def residual(params: ModelParams, U: TrigSeries) -> TrigSeries:
    """``K U - F(U)`` mode by mode: ``sigma_k c_k + (sigma_k - 1) (U^2)_k - h_k``.

    The coupled second-derivative and damping terms acting on ``U^2`` have
    symbol ``sigma_k - 1``.  All modes of ``U^2`` are kept.
    """
    w = product(U, U)
    K = max(w.K_max, params.h.K_max)
    s = sigma(params, np.arange(-K, K + 1))
    return TrigSeries(s * U.padded(K).coeffs + (s - 1.0) * w.padded(K).coeffs - params.h.padded(K).coeffs)


# -- Theta -------------------------------------------------------------------

@dataclass(frozen=True)
class ThetaResult:
    """Lower bound of ``|sigma_k| / k^2`` (capped at 1) and its provenance.

    ``case`` is one of ``"generic-scan"``, ``"integer-phase"``, ``"undamped-rational"``,
    ``"damped-rational"``; ``bound`` is the closed-form lower bound of that case
    (``nan`` for the generic scan).  ``certified`` is False only for the
    truncated scan used when p/pi is not recognised as rational.
    """

    value: float
    case: str
    certified: bool
    bound: float
    argmin: int | None

    def to_dict(self) -> dict:
        return {"value": self.value, "case": self.case, "certified": self.certified,
                "bound": self.bound, "argmin": self.argmin}


def _scaled_symbol_sq(a, g, k):
    t = 1.0 / np.asarray(k, dtype=float) ** 2
    return (t + a) ** 2 + g * t


def _class_infimum(params: ModelParams, gamma: float, exclude=frozenset(), extra_small: int = 64):
    """Exact ``inf_{k >= 1} (1/k^2 + a_k)^2 + g/k^2`` for p/pi rational.

    cos(kp) is periodic in k, so the positive integers split into finitely many
    classes with a common ``a = omega^2 (2 lam cos kp - 1)``; on each class the
    objective is a convex quadratic in ``t = 1/k^2``.  The infimum is attained
    at class members adjacent to the continuous minimiser or approached as
    ``k -> inf`` (value ``a^2``).

    Returns ``(value_squared, argmin)`` with ``argmin = None`` when the
    infimum is a limit.
    """
    frac = params.phase_fraction
    P = 2 * frac.denominator
    r = np.arange(1, P + 1, dtype=np.int64)
    a = params.omega**2 * (2 * params.lam * params.cos_kp(r) - 1.0)
    g = (gamma * params.omega) ** 2
    tstar = -a - 0.5 * g
    kstar = np.where(tstar > 0, 1.0 / np.sqrt(np.maximum(tstar, 1e-18)), 0.0)
    m0 = np.floor((kstar - r) / P).astype(np.int64)
    cands = [r]
    for dm in (-2, -1, 0, 1, 2, 3):
        m = np.maximum(m0 + dm, 0)
        cands.append(np.where(tstar > 0, r + P * m, r))
    K = np.concatenate(cands)
    K = np.concatenate([K, np.arange(1, extra_small + 1, dtype=np.int64)])
    K = np.unique(K)
    if exclude:
        K = K[~np.isin(K, np.fromiter(exclude, dtype=np.int64))]
    ak = params.omega**2 * (2 * params.lam * params.cos_kp(K) - 1.0)
    vals = _scaled_symbol_sq(ak, g, K)
    i = int(np.argmin(vals))
    best, argmin = float(vals[i]), int(K[i])
    limit = float(np.min(a**2))
    if limit < best:
        return limit, None
    return best, argmin


def _scan_infimum(params: ModelParams, gamma: float, k_scan: int):
    K = np.arange(1, k_scan + 1)
    a = params.omega**2 * (2 * params.lam * np.cos(K * params.p) - 1.0)
    vals = _scaled_symbol_sq(a, (gamma * params.omega) ** 2, K)
    i = int(np.argmin(vals))
    return float(vals[i]), int(K[i])


def theta(params: ModelParams, k_scan: int = 10**4) -> ThetaResult:
    """``Theta = min(1, inf_{k != 0} |sigma_k| / k^2)`` with the applicable bound."""
    frac = params.phase_fraction
    if frac is None:
        warnings.warn("p/pi not recognised as rational; Theta from a finite scan is not certified",
                      IrrationalPhaseWarning, stacklevel=2)
        sq, kmin = _scan_infimum(params, params.gamma, k_scan)
        return ThetaResult(min(1.0, math.sqrt(sq)), "generic-scan", False, float("nan"), kmin)

    sq, kmin = _class_infimum(params, params.gamma)
    value = min(1.0, math.sqrt(sq))
    if value == 1.0:
        kmin = None
    w2, lam, gamma = params.omega**2, params.lam, params.gamma
    rep = resonance_scan(params, k_limit=64)
    if gamma == 0 and rep.resonant_modes:
        # sigma vanishes at k0 up to rounding
        return ThetaResult(0.0, "generic-scan", True, float("nan"), min(abs(k) for k in rep.resonant_modes))

    if frac.denominator == 1 and frac.numerator % 2 == 0 and lam > 0.5:
        return ThetaResult(value, "integer-phase", True, min(1.0, w2 * (2 * lam - 1)), kmin)
    if gamma == 0 and rep.cosine_condition and not rep.resonant_modes:
        sq2, _ = _class_infimum(params, 0.0)
        return ThetaResult(value, "undamped-rational", True, min(1.0, math.sqrt(sq2)), kmin)
    if gamma > 0 and rep.cosine_condition:
        res = set(abs(k) for k in rep.resonant_modes)
        terms = [1.0]
        terms += [gamma * params.omega / k for k in res]
        sq3, _ = _class_infimum(params, 0.0, exclude=frozenset(res))
        terms.append(math.sqrt(sq3))
        return ThetaResult(value, "damped-rational", True, min(terms), kmin)
    return ThetaResult(value, "generic-scan", True, float("nan"), kmin)


# -- resonances ----------------------------------------------------------------

@dataclass(frozen=True)
class ResonanceReport:
    rational: bool
    p_num: int | None
    p_den: int | None
    M2: tuple
    cosine_condition: bool
    resonant_modes: tuple
    defects: tuple
    simple: bool
    k_searched: int

    def to_dict(self) -> dict:
        return {
            "rational": self.rational,
            "p_over_pi": None if self.p_num is None else [self.p_num, self.p_den],
            "M2": list(self.M2) if len(self.M2) <= 256 else f"{len(self.M2)} values",
            "cosine_condition": self.cosine_condition,
            "resonant_modes": list(self.resonant_modes),
            "defects": list(self.defects),
            "simple": self.simple,
            "k_searched": self.k_searched,
        }


def cosine_set(p2: int) -> np.ndarray:
    """``{cos(k pi / p2) : k = 0..2 p2 - 1}`` as sorted unique values."""
    vals = np.cos(np.pi * np.arange(2 * p2) / p2)
    return np.unique(np.round(vals, 12))


def resonance_defect(params: ModelParams, k) -> np.ndarray:
    """``omega^2 k^2 (1 - 2 lam cos kp) - 1``; zero exactly at a resonant mode."""
    k = np.asarray(k, dtype=np.int64)
    return params.omega**2 * k.astype(float) ** 2 * (1 - 2 * params.lam * params.cos_kp(k)) - 1.0


def resonance_scan(params: ModelParams, k_limit: int = 1000) -> ResonanceReport:
    """All integers ``k0 != 0`` with ``omega^2 k0^2 (1 - 2 lam cos k0 p) = 1``."""
    frac = params.phase_fraction
    lam, w = params.lam, params.omega
    k_max = int(k_limit)
    if lam < 0.5:
        k_max = max(k_max, math.ceil(1.0 / (w * math.sqrt(1 - 2 * lam))) + 1)
    cands = [np.arange(1, k_max + 1, dtype=np.int64)]
    if frac is not None:
        # each residue class of cos(kp) admits at most one resonant k
        P = 2 * frac.denominator
        r = np.arange(1, P + 1, dtype=np.int64)
        a = 1.0 - 2 * lam * params.cos_kp(r)
        pos = a > 0
        kstar = 1.0 / (w * np.sqrt(a[pos]))
        base = np.rint(kstar).astype(np.int64)
        cands += [np.maximum(base + d, 1) for d in (-1, 0, 1)]
        M2 = tuple(float(v) for v in cosine_set(frac.denominator))
        cond = bool(np.min(np.abs(2 * lam * np.asarray(M2) - 1)) > 1e-12)
    else:
        M2 = ()
        cond = bool(abs(2 * lam - 1) > 1e-12) if lam <= 0.5 else False
    K = np.unique(np.concatenate(cands))
    d = resonance_defect(params, K)
    hit = np.abs(d) <= RESONANCE_RTOL
    modes: list[int] = []
    defects: list[float] = []
    for k, dk in zip(K[hit], d[hit]):
        modes += [int(k), -int(k)]
        defects += [float(dk), float(dk)]
    n_pairs = len(modes) // 2
    return ResonanceReport(
        rational=frac is not None,
        p_num=None if frac is None else frac.numerator,
        p_den=None if frac is None else frac.denominator,
        M2=M2,
        cosine_condition=cond,
        resonant_modes=tuple(modes),
        defects=tuple(defects),
        simple=n_pairs == 1,
        k_searched=int(K.max()),
    )
