"""Closed-form detectability limits for sample generalized eigenvalues.

A population generalized eigenvalue ``lambda > 1`` produces a sample eigenvalue
that separates from the noise bulk only if ``lambda > T(c, c1)``. Below that
level the top sample eigenvalue converges to the bulk edge ``b2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from gevdetect.spectra import AspectRatios, DomainError, _coerce, support_endpoints


@dataclass(frozen=True)
class PopulationSpectrum:
    """Signal eigenvalues of ``Sigma^{-1} R`` (all > 1); the rest equal 1."""

    signal_eigenvalues: tuple[float, ...]
    dimension: int

    def __post_init__(self) -> None:
        vals = tuple(sorted((float(v) for v in self.signal_eigenvalues), reverse=True))
        object.__setattr__(self, "signal_eigenvalues", vals)
        if any(v <= 1.0 for v in vals):
            raise DomainError("signal eigenvalues must be strictly greater than 1")
        if len(vals) > self.dimension:
            raise DomainError("more signal eigenvalues than dimensions")

    @property
    def k(self) -> int:
        return len(self.signal_eigenvalues)

    def diagonal(self) -> list[float]:
        return list(self.signal_eigenvalues) + [1.0] * (self.dimension - self.k)


@dataclass(frozen=True)
class TwoSourceGeometry:
    """Powers and whitened steering-vector summaries for two uncorrelated sources."""

    sigma1_sq: float
    sigma2_sq: float
    norm1_sq: float
    norm2_sq: float
    cross_sq: float

    def __post_init__(self) -> None:
        if self.sigma1_sq < 0 or self.sigma2_sq < 0:
            raise DomainError("signal powers must be nonnegative")
        if self.norm1_sq <= 0 or self.norm2_sq <= 0:
            raise DomainError("steering-vector norms must be positive")
        if self.cross_sq < 0:
            raise DomainError("cross term must be nonnegative")
        bound = self.norm1_sq * self.norm2_sq
        if self.cross_sq > bound * (1.0 + 1e-12):
            raise DomainError(f"Cauchy-Schwarz violated: |<u1,u2>|^2={self.cross_sq} > {bound}")


def _alpha(r: AspectRatios) -> float:
    # kept as a separate intermediate; c + c1 - c*c1 = 1 - (1-c)(1-c1) loses digits for c near 1
    return r.c + r.c1 - r.c1 * r.c


def tau_threshold(r: AspectRatios) -> float:
    """Threshold on the spike location of the inverse noise covariance law."""
    r = _coerce(r)
    c, c1 = r.c, r.c1
    a = _alpha(r)
    return ((1.0 + c1) * a + math.sqrt(a) * (2.0 * c1 + c * (1.0 - c1))) / ((1.0 - c1) ** 2 * a)


def lambda_threshold(r: AspectRatios) -> float:
    """Detectability threshold ``T(c, c1)`` on population generalized eigenvalues."""
    r = _coerce(r)
    # larger root of T^2 - (1 + tau (1 - c1)) T + tau = 0, written without the
    # discriminant, which cancels badly when the two roots are close
    return (1.0 + math.sqrt(_alpha(r))) / (1.0 - r.c1)


def spike_to_tprime(lam: float, c1: float) -> float:
    """Location of the top eigenvalue of ``R^{1/2} Sigma_hat^{-1} R^{1/2}`` for a spike ``lam``.

    Returns ``lam (lam - 1) / (lam (1 - c1) - 1)``.
    """
    den = lam * (1.0 - c1) - 1.0
    if den <= 0:
        raise DomainError(f"spike {lam} below the map domain: need lam (1 - c1) > 1")
    return lam * (lam - 1.0) / den


def _spike_formula(t_prime: float, r: AspectRatios) -> float:
    # defined wherever the radicand is nonnegative; only meaningful for t' >= tau
    c, c1 = r.c, r.c1
    sc = math.sqrt(c1)
    rad = max((1.0 - t_prime * (1.0 - sc) ** 2) * (1.0 - t_prime * (1.0 + sc) ** 2), 0.0)
    a = t_prime * (2.0 * c1 + c * (1.0 - c1)) - c
    den = a + c * math.sqrt(rad)
    if den <= 0.0:
        return (a - c * math.sqrt(rad)) / (2.0 * c1)
    # rationalized so the 1/c1 cancels exactly; stable as c1 -> 0
    return 2.0 * t_prime * ((1.0 - c) * (c * (t_prime - 1.0) + c1 * t_prime) + c * c * t_prime) / den


def lambda_of_tprime(t_prime: float, r: AspectRatios) -> float:
    """Sample-eigenvalue limit generated by a spike at ``t_prime >= tau``."""
    r = _coerce(r)
    tau = tau_threshold(r)
    if t_prime < tau * (1.0 - 1e-12):
        raise DomainError(f"t' = {t_prime} is below the threshold tau = {tau}")
    return _spike_formula(t_prime, r)


def edge_constant(r: AspectRatios) -> float:
    """Below-threshold limit of a spiked eigenvalue in expanded polynomial form.

    Equal to ``b2`` identically.
    """
    r = _coerce(r)
    c, c1 = r.c, r.c1
    return (-c1 * c + c + 1.0 + c1 + 2.0 * math.sqrt(_alpha(r))) / (c1 * c1 + 1.0 - 2.0 * c1)


def spiked_expression(x: float, r: AspectRatios) -> float:
    """Above-threshold spike limit in expanded form, as a function of t'.

    Algebraically the same function as :func:`lambda_of_tprime`; kept to check that.
    """
    r = _coerce(r)
    c, c1 = r.c, r.c1
    rad = c1 * c1 * x * x - 2 * c1 * x * x - 2 * c1 * x + x * x - 2 * x + 1
    return x * (1.0 - c - c * (-c1 * x - x + 1.0 + math.sqrt(rad)) / (2.0 * c1 * x))


def spiked_limit(lam: float, r: AspectRatios) -> float:
    """Almost-sure limit of the sample eigenvalue attached to population spike ``lam``."""
    r = _coerce(r)
    if lam <= 1.0:
        raise DomainError(f"spike must exceed 1, got {lam}")
    if lam > lambda_threshold(r):
        return lambda_of_tprime(spike_to_tprime(lam, r.c1), r)
    return edge_constant(r)


def k_eff(pop: PopulationSpectrum | Sequence[float], r: AspectRatios) -> int:
    """Number of signal eigenvalues strictly above ``T(c, c1)``."""
    r = _coerce(r)
    vals = pop.signal_eigenvalues if isinstance(pop, PopulationSpectrum) else tuple(pop)
    thr = lambda_threshold(r)
    return sum(1 for v in vals if v > thr)


def two_source_eigs(g: TwoSourceGeometry) -> tuple[float, float]:
    """The two non-unit eigenvalues of ``Sigma^{-1} R`` for two uncorrelated sources."""
    p1 = g.sigma1_sq * g.norm1_sq
    p2 = g.sigma2_sq * g.norm2_sq
    cross = min(g.cross_sq, g.norm1_sq * g.norm2_sq)
    disc = math.sqrt((p1 - p2) ** 2 + 4.0 * g.sigma1_sq * g.sigma2_sq * cross)
    mean = 1.0 + 0.5 * (p1 + p2)
    return mean + 0.5 * disc, max(mean - 0.5 * disc, 1.0)


def two_source_keff(g: TwoSourceGeometry, r: AspectRatios) -> int:
    lam1, lam2 = two_source_eigs(g)
    thr = lambda_threshold(_coerce(r))
    if thr < lam2:
        return 2
    if thr < lam1:
        return 1
    return 0


def edge(r: AspectRatios) -> float:
    """Right bulk edge ``b2``; shorthand used by experiments."""
    return support_endpoints(r).b2
