"""Truncated real trigonometric series on the 2*pi-periodic line.

A series is stored as the full symmetric coefficient vector ``c[-K..K]`` of
``U(z) = sum_k c_k exp(i k z)`` with ``c[-k] = conj(c[k])``.  The three
weighted l1 norms (orders 0, 1, 2) measure the series in the spaces of
continuous, C^1 and C^2 periodic functions with summable spectra.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import TailOverflow

#: default bound on discarded tail mass relative to the order-0 norm
TAIL_RATIO = 1e-10


@dataclass(frozen=True, eq=False)
class TrigSeries:
    """Immutable truncated Fourier series with conjugate-symmetric coefficients.

    Parameters
    ----------
    coeffs : array_like of complex, shape (2*K_max + 1,)
        Coefficients ordered ``k = -K_max, ..., K_max``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size % 2 != 1:
            raise ValueError("coefficient vector must have odd length 2*K_max+1")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # -- construction -----------------------------------------------------
    @classmethod
    def zeros(cls, K_max: int = 0) -> TrigSeries:
        return cls(np.zeros(2 * K_max + 1, dtype=complex))

    @classmethod
    def constant(cls, value: float, K_max: int = 0) -> TrigSeries:
        c = np.zeros(2 * K_max + 1, dtype=complex)
        c[K_max] = value
        return cls(c)

    @classmethod
    def from_modes(cls, modes: Mapping[int, complex], K_max: int | None = None) -> TrigSeries:
        """Build from ``{k: c_k}`` for k >= 0; negative modes follow by conjugation."""
        top = max((abs(int(k)) for k in modes), default=0)
        K = top if K_max is None else max(K_max, top)
        c = np.zeros(2 * K + 1, dtype=complex)
        for k, value in modes.items():
            k = int(k)
            if k < 0:
                k, value = -k, np.conj(value)
            if k == 0:
                c[K] = complex(value).real
            else:
                c[K + k] = value
                c[K - k] = np.conj(value)
        return cls(c)

    @classmethod
    def from_cos_sin(
        cls,
        const: float = 0.0,
        cos: Mapping[int, float] | None = None,
        sin: Mapping[int, float] | None = None,
        K_max: int | None = None,
    ) -> TrigSeries:
        """``const + sum a_k cos(kz) + sum b_k sin(kz)`` (k >= 1)."""
        cos = cos or {}
        sin = sin or {}
        modes: dict[int, complex] = {0: const}
        for k in set(cos) | set(sin):
            if int(k) <= 0:
                raise ValueError("cos/sin modes must be positive")
            modes[int(k)] = 0.5 * (cos.get(k, 0.0) - 1j * sin.get(k, 0.0))
        return cls.from_modes(modes, K_max)

    @classmethod
    def from_json(cls, data) -> TrigSeries:
        if isinstance(data, str):
            data = json.loads(data)
        K = int(data["K_max"])
        pairs = np.asarray(data["coeffs"], dtype=float).reshape(-1, 2)
        if pairs.shape[0] != 2 * K + 1:
            raise ValueError("coeffs length does not match K_max")
        return cls(pairs[:, 0] + 1j * pairs[:, 1])

    # -- basic accessors --------------------------------------------------
    @property
    def K_max(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        K = self.K_max
        return np.arange(-K, K + 1)

    def coeff(self, k: int) -> complex:
        K = self.K_max
        if abs(k) > K:
            return 0j
        return complex(self.coeffs[K + k])

    def highest_mode(self, atol: float = 0.0) -> int:
        nz = np.nonzero(np.abs(self.coeffs) > atol)[0]
        if nz.size == 0:
            return 0
        return int(np.max(np.abs(nz - self.K_max)))

    def reality_defect(self) -> float:
        """Largest ``|c_{-k} - conj(c_k)|`` (plus ``|Im c_0|``) relative to the norm."""
        c = self.coeffs
        scale = max(np.sum(np.abs(c)), np.finfo(float).tiny)
        return float(np.max(np.abs(c[::-1] - np.conj(c))) / scale)

    def is_real(self, rtol: float = 1e-12) -> bool:
        return self.reality_defect() <= rtol

    def to_dict(self) -> dict:
        return {
            "K_max": self.K_max,
            "coeffs": [[float(v.real), float(v.imag)] for v in self.coeffs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def cos_sin(self) -> tuple[float, np.ndarray, np.ndarray]:
        """Return ``(const, a, b)`` with ``U = const + sum a[k-1] cos kz + b[k-1] sin kz``."""
        K = self.K_max
        pos = self.coeffs[K + 1:]
        return float(self.coeffs[K].real), 2.0 * pos.real, -2.0 * pos.imag

    # -- evaluation -------------------------------------------------------
    def evaluate_complex(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        phase = np.exp(1j * np.multiply.outer(z, self.modes))
        return phase @ self.coeffs

    def evaluate(self, z) -> np.ndarray:
        return self.evaluate_complex(z).real

    def __call__(self, z):
        return self.evaluate(z)

    # -- norms and resizing ----------------------------------------------
    def norm(self, order: int = 0) -> float:
        return norm(self, order)

    def padded(self, K_max: int) -> TrigSeries:
        K = self.K_max
        if K_max < K:
            raise ValueError("padded() cannot shrink; use truncated()")
        c = np.zeros(2 * K_max + 1, dtype=complex)
        c[K_max - K:K_max + K + 1] = self.coeffs
        return TrigSeries(c)

    def tail_mass(self, K_work: int) -> float:
        K = self.K_max
        if K_work >= K:
            return 0.0
        c = self.coeffs
        return float(np.sum(np.abs(c[: K - K_work])) + np.sum(np.abs(c[K + K_work + 1:])))

    def truncated(self, K_work: int, tail_ratio: float | None = None) -> TrigSeries:
        """Drop modes ``|k| > K_work``.

        With ``tail_ratio`` set, raise :class:`TailOverflow` if the discarded
        mass exceeds ``tail_ratio * norm(self, 0)``.
        """
        K = self.K_max
        if K_work >= K:
            return self.padded(K_work)
        if tail_ratio is not None:
            tail = self.tail_mass(K_work)
            if tail > tail_ratio * norm(self, 0):
                raise TailOverflow(
                    f"tail mass {tail:.3e} beyond |k|={K_work} exceeds "
                    f"{tail_ratio:g} of the norm {norm(self, 0):.3e}"
                )
        return TrigSeries(self.coeffs[K - K_work:K + K_work + 1])

    def resized(self, K_max: int) -> TrigSeries:
        return self.padded(K_max) if K_max >= self.K_max else self.truncated(K_max)

    # -- arithmetic -------------------------------------------------------
    def _aligned(self, other: TrigSeries) -> tuple[np.ndarray, np.ndarray]:
        K = max(self.K_max, other.K_max)
        return self.padded(K).coeffs, other.padded(K).coeffs

    def __add__(self, other):
        if not isinstance(other, TrigSeries):
            return self + TrigSeries.constant(float(other))
        a, b = self._aligned(other)
        return TrigSeries(a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return TrigSeries(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, TrigSeries):
            return product(self, other)
        return TrigSeries(self.coeffs * float(other))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return TrigSeries(self.coeffs / float(scalar))

    def __repr__(self):
        return f"TrigSeries(K_max={self.K_max}, norm0={norm(self, 0):.6g})"


def norm(s: TrigSeries, order: int = 0) -> float:
    """Weighted l1 norm: ``|c_0| + sum_{k != 0} |k|**order |c_k|``."""
    if order not in (0, 1, 2):
        raise ValueError("norm order must be 0, 1 or 2")
    k = np.abs(s.modes).astype(float)
    w = np.where(k == 0, 1.0, k**order)
    return float(np.sum(w * np.abs(s.coeffs)))


def _symmetrize(c: np.ndarray) -> np.ndarray:
    return 0.5 * (c + np.conj(c[::-1]))


def product(a: TrigSeries, b: TrigSeries) -> TrigSeries:
    """Cauchy convolution; the result has ``K_max = a.K_max + b.K_max``."""
    return TrigSeries(_symmetrize(np.convolve(a.coeffs, b.coeffs)))


def derivative(s: TrigSeries, order: int = 1) -> TrigSeries:
    if order < 0:
        raise ValueError("derivative order must be nonnegative")
    return TrigSeries(s.coeffs * (1j * s.modes) ** order)


def shift(s: TrigSeries, p: float) -> TrigSeries:
    """Coefficients of ``z -> U(z + p)``: ``c_k exp(i k p)``."""
    return TrigSeries(s.coeffs * np.exp(1j * s.modes * p))


def sample_grid(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def amplitude(s: TrigSeries, n_grid: int = 1024) -> float:
    """Half the peak-to-peak range of ``U`` on an equispaced grid."""
    u = s.evaluate(sample_grid(n_grid))
    return 0.5 * float(np.max(u) - np.min(u))
