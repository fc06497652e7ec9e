"""Limiting spectral law of the signal-free multivariate F matrix.

The whitened pencil ``Sigma_hat^{-1} R_hat`` built from noise-only data has an
eigenvalue distribution that converges to a deterministic law depending only on
the aspect ratios ``c = n/m`` and ``c1 = n/N``. This module holds the shared
domain types plus the density, support, CDF and e.d.f. utilities for that law.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np
from scipy import integrate

from gevdetect import _kernels

Field = Literal["real", "complex"]
FIELDS = ("real", "complex")


class DomainError(ValueError):
    """Raised when inputs fall outside the domain where a formula is defined."""


class SingularNoiseError(DomainError):
    """The noise-only sample covariance is (or would be) singular."""


@dataclass(frozen=True)
class SystemShape:
    """Dimension ``n``, signal-bearing snapshots ``m``, noise-only snapshots ``N``."""

    n: int
    m: int
    N: int
    field: Field = "real"

    def __post_init__(self) -> None:
        if self.n < 1 or self.m < 1:
            raise DomainError(f"n and m must be positive, got n={self.n}, m={self.m}")
        if self.N < self.n + 2:
            raise SingularNoiseError(
                f"need N >= n + 2 for an invertible noise covariance, got n={self.n}, N={self.N}"
            )
        if self.field not in FIELDS:
            raise DomainError(f"field must be one of {FIELDS}, got {self.field!r}")

    @property
    def ratios(self) -> AspectRatios:
        return AspectRatios(self.n / self.m, self.n / self.N)


@dataclass(frozen=True)
class AspectRatios:
    """Limiting ratios ``c = n/m > 0`` and ``c1 = n/N`` in (0, 1)."""

    c: float
    c1: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.c) and self.c > 0):
            raise DomainError(f"c must be positive, got {self.c}")
        if not (0.0 < self.c1 < 1.0):
            raise DomainError(f"c1 must lie in (0, 1), got {self.c1}")

    @classmethod
    def from_shape(cls, shape: SystemShape) -> AspectRatios:
        return cls(shape.n / shape.m, shape.n / shape.N)


@dataclass(frozen=True)
class SupportInterval:
    b1: float
    b2: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.b1 < self.b2):
            raise DomainError(f"invalid support [{self.b1}, {self.b2}]")


@dataclass(frozen=True)
class EmpiricalSpectrum:
    """Sample generalized eigenvalues, stored in descending order."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise DomainError("spectrum must be one-dimensional")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DomainError("spectrum values must be finite and nonnegative")
        if np.any(np.diff(v) > 0):
            raise DomainError("spectrum values must be sorted in descending order")

    @classmethod
    def from_unsorted(cls, values: Sequence[float] | np.ndarray) -> EmpiricalSpectrum:
        v = np.sort(np.asarray(values, dtype=float))[::-1]
        return cls(tuple(float(x) for x in v))

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def _coerce(r: AspectRatios | tuple[float, float]) -> AspectRatios:
    return r if isinstance(r, AspectRatios) else AspectRatios(*r)


def support_endpoints(r: AspectRatios) -> SupportInterval:
    """Edges ``b1 < b2`` of the continuous part of the limiting F-matrix law."""
    r = _coerce(r)
    c, c1 = r.c, r.c1
    s = math.sqrt(1.0 - (1.0 - c) * (1.0 - c1))
    b1 = ((1.0 - s) / (1.0 - c1)) ** 2
    b2 = ((1.0 + s) / (1.0 - c1)) ** 2
    return SupportInterval(b1, b2)


def atom_at_zero(r: AspectRatios) -> float:
    r = _coerce(r)
    return max(0.0, 1.0 - 1.0 / r.c)


def _density_values(x: np.ndarray, r: AspectRatios, sup: SupportInterval) -> np.ndarray:
    c, c1 = r.c, r.c1
    inside = (x >= sup.b1) & (x <= sup.b2) & (x > 0)
    out = np.zeros_like(x)
    xi = x[inside]
    rad = np.clip((xi - sup.b1) * (sup.b2 - xi), 0.0, None)
    out[inside] = (1.0 - c1) * np.sqrt(rad) / (2.0 * np.pi * xi * (xi * c1 + c))
    return out


def limit_density(x: float, r: AspectRatios) -> tuple[float, float]:
    """Continuous density at ``x`` and the point mass at zero.

    Returns
    -------
    (density, atom_at_zero)
    """
    r = _coerce(r)
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    d = _density_values(np.array([float(x)]), r, support_endpoints(r))[0]
    return float(d), atom_at_zero(r)


def limit_density_grid(x: np.ndarray, r: AspectRatios) -> np.ndarray:
    """Vectorized continuous density (the atom is not included)."""
    r = _coerce(r)
    return _density_values(np.asarray(x, dtype=float), r, support_endpoints(r))


def _theta_integrand(theta: float, r: AspectRatios, sup: SupportInterval) -> float:
    # x = b1 + (b2-b1) sin^2(theta): the sqrt edge factors cancel against dx/dtheta
    w = sup.b2 - sup.b1
    s2 = math.sin(theta) ** 2
    x = sup.b1 + w * s2
    if x <= 0.0:
        # only reachable when b1 == 0 and theta == 0; take the limit
        return (1.0 - r.c1) * w / (math.pi * r.c)
    return (1.0 - r.c1) * w * w * s2 * (1.0 - s2) / (math.pi * x * (x * r.c1 + r.c))


def continuous_mass(x: float, r: AspectRatios) -> float:
    """Integral of the continuous density over ``[0, x]``."""
    r = _coerce(r)
    sup = support_endpoints(r)
    if x <= sup.b1:
        return 0.0
    if x >= sup.b2:
        upper = math.pi / 2
    else:
        upper = math.asin(math.sqrt((x - sup.b1) / (sup.b2 - sup.b1)))
    val, _ = integrate.quad(_theta_integrand, 0.0, upper, args=(r, sup), epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def limit_cdf(x: float, r: AspectRatios) -> float:
    """Limiting CDF: the zero atom plus the integrated continuous density."""
    r = _coerce(r)
    if x < 0:
        return 0.0
    return min(1.0, atom_at_zero(r) + continuous_mass(x, r))


def limit_cdf_grid(x: Sequence[float] | np.ndarray, r: AspectRatios) -> np.ndarray:
    r = _coerce(r)
    return np.array([limit_cdf(float(v), r) for v in np.asarray(x, dtype=float)])


def edf_and_ks(spec: EmpiricalSpectrum | Sequence[float], r: AspectRatios) -> tuple[Callable[[float], float], float]:
    """Empirical distribution function of ``spec`` and its KS distance to the limit law.

    The KS distance is the supremum over all jump points of the e.d.f., taken
    from both sides of each jump.
    """
    r = _coerce(r)
    values = spec.as_array() if isinstance(spec, EmpiricalSpectrum) else np.asarray(spec, dtype=float)
    if values.size == 0:
        raise DomainError("empty spectrum")
    asc = np.sort(values)
    n = asc.size

    def edf(x: float) -> float:
        return float(np.searchsorted(asc, x, side="right")) / n

    right = limit_cdf_grid(asc, r)
    # the only discontinuity of the limit law is the atom at zero
    left = np.where(asc <= 0.0, 0.0, right)
    ks = _kernels.ks_sorted(asc, right, left)
    return edf, ks
