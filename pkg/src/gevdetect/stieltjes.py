"""Inverse Stieltjes machinery for sample covariance spectra with discrete population laws.

For a population spectral measure ``H`` made of weighted atoms and an aspect
ratio ``c``, the Stieltjes transform ``m`` of the limiting companion law has the
explicit inverse

    x(m) = -1/m + c * sum_i w_i l_i / (1 + l_i m).

Intervals outside the support are exactly the images of ``m`` ranges where
``x`` is increasing. Everything here is computed from ``H`` directly and serves
as an independent route to the closed forms in :mod:`gevdetect.phase`.

It is often convenient to substitute ``t = -1/m``; then

    dx/dm > 0   <=>   g(t) = c * sum_i w_i l_i^2 / (l_i - t)^2 < 1,

and ``x(-1/t) = t (1 + c * sum_i w_i l_i / (t - l_i))`` is the image of a
population spike placed at ``t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy import integrate, optimize

from gevdetect import _kernels
from gevdetect.spectra import DomainError

_POLE_RTOL = 1e-12


class NoThresholdError(DomainError):
    """g(t) never drops below one to the right of the population support."""


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure made of atoms ``weights[i] * delta(locations[i])``.

    Atoms are kept sorted by location.
    """

    weights: np.ndarray
    locations: np.ndarray
    _positive: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        loc = np.atleast_1d(np.asarray(self.locations, dtype=float))
        if w.shape != loc.shape or w.ndim != 1 or w.size == 0:
            raise DomainError("weights and locations must be equal-length nonempty 1-D arrays")
        if np.any(w <= 0):
            raise DomainError("weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise DomainError(f"weights must sum to 1, got {w.sum()!r}")
        if np.any(loc < 0) or not np.all(np.isfinite(loc)):
            raise DomainError("locations must be finite and nonnegative")
        order = np.argsort(loc, kind="stable")
        object.__setattr__(self, "weights", w[order])
        object.__setattr__(self, "locations", loc[order])
        object.__setattr__(self, "_positive", loc[order] > 0)

    @classmethod
    def point(cls, location: float) -> DiscreteMeasure:
        return cls(np.array([1.0]), np.array([float(location)]))

    @classmethod
    def from_atoms(cls, atoms: Sequence[tuple[float, float]]) -> DiscreteMeasure:
        """Build from ``(weight, location)`` pairs."""
        w, loc = zip(*atoms)
        return cls(np.array(w, dtype=float), np.array(loc, dtype=float))

    @classmethod
    def from_samples(cls, values: Sequence[float] | np.ndarray) -> DiscreteMeasure:
        """Equal-weight empirical measure of ``values`` (e.g. eigenvalues of a draw)."""
        v = np.asarray(values, dtype=float)
        w = np.full(v.size, 1.0 / v.size)
        w[-1] = 1.0 - w[:-1].sum()
        return cls(w, v)

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.weights.tolist(), self.locations.tolist()))

    @property
    def mass_at_origin(self) -> float:
        return float(self.weights[~self._positive].sum())

    @property
    def max_location(self) -> float:
        return float(self.locations[-1])

    def positive_atoms(self) -> tuple[np.ndarray, np.ndarray]:
        return self.weights[self._positive], self.locations[self._positive]


@dataclass(frozen=True)
class RealInterval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise DomainError(f"degenerate interval [{self.lo}, {self.hi}]")


def _check_pole(value: float, H: DiscreteMeasure, *, t: float) -> None:
    """Raise if ``t`` sits on an atom of H (i.e. 1 + l m = 0 with m = -1/t)."""
    _, loc = H.positive_atoms()
    hit = np.abs(loc - t) <= _POLE_RTOL * np.maximum(1.0, np.abs(loc))
    if np.any(hit):
        bad = float(loc[np.argmax(hit)])
        raise DomainError(f"pole: {value!r} hits the atom at {bad!r}")


def x_map(m_val: float, c: float, H: DiscreteMeasure) -> tuple[float, float]:
    """Inverse Stieltjes map ``x(m)`` and its derivative ``dx/dm``."""
    if m_val == 0 or not math.isfinite(m_val):
        raise DomainError("m must be a nonzero finite real")
    _check_pole(m_val, H, t=-1.0 / m_val)
    w, loc = H.positive_atoms()
    x, dx = _kernels.xmap_grid(np.array([m_val]), w, loc, c)
    return float(x[0]), float(dx[0])


def g_general(t: float, c: float, H: DiscreteMeasure) -> float:
    """``c * sum_i w_i l_i^2 / (l_i - t)^2``."""
    _check_pole(t, H, t=t)
    w, loc = H.positive_atoms()
    return float(_kernels.g_grid(np.array([t]), w, loc, c)[0])


def spike_prediction(t_prime: float, c: float, H: DiscreteMeasure) -> float:
    """Limit of the sample eigenvalue generated by a population spike at ``t_prime``."""
    if t_prime <= H.max_location:
        raise DomainError(f"spike {t_prime} must lie strictly right of all atoms (max {H.max_location})")
    _check_pole(t_prime, H, t=t_prime)
    w, loc = H.positive_atoms()
    return float(_kernels.spike_image_grid(np.array([t_prime]), w, loc, c)[0])


def mass_at_zero(c: float, H: DiscreteMeasure) -> float:
    """Limiting eigenvalue mass at zero of the sample covariance law."""
    h0 = H.mass_at_origin
    if c * (1.0 - h0) <= 1.0:
        return h0
    return 1.0 - 1.0 / c


def g_threshold(c: float, H: DiscreteMeasure, side: Literal["right"] = "right", *, t_max_factor: float = 1e12) -> float:
    """Solve ``g(t) = 1`` right of the largest atom.

    Population spikes above the returned value separate from the bulk; spikes at
    or below it stick to the bulk edge.
    """
    if side != "right":
        raise DomainError("only the right-hand threshold is supported")
    w, loc = H.positive_atoms()
    if loc.size == 0:
        raise NoThresholdError("H has no positive atoms")
    lam_max = float(loc[-1])

    def g(t: float) -> float:
        return float(_kernels.g_grid(np.array([t]), w, loc, c)[0])

    hi = 2.0 * lam_max
    while g(hi) >= 1.0:
        hi = lam_max + 2.0 * (hi - lam_max)
        if hi > t_max_factor * lam_max:
            raise NoThresholdError("g(t) >= 1 over the whole search range")
    lo = lam_max * (1.0 + 1e-15) + 1e-300
    if g(lo) < 1.0:
        # g does not blow up at the edge: every spike is visible
        return lam_max
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if g(mid) >= 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    t_star = hi if abs(g(hi) - 1.0) <= abs(g(lo) - 1.0) else lo
    if abs(g(t_star) - 1.0) > 1e-10:
        raise NoThresholdError(f"bisection stalled: g(t*) - 1 = {g(t_star) - 1.0:.3e}")
    return t_star


# -- support scanning ---------------------------------------------------------------


def _edge_grid(n: int) -> np.ndarray:
    """Points in (0, 1) clustered geometrically at both ends."""
    half = np.geomspace(1e-13, 0.5, max(n // 2, 4))
    return np.unique(np.concatenate([half, 1.0 - half[::-1]]))


def _segments(loc: np.ndarray, grid_points: int) -> list[tuple[np.ndarray, str, str]]:
    """t-grids for each open stretch between poles.

    Each entry is ``(t_grid, left_limit, right_limit)`` where the limit tags say
    what ``x`` tends to at that end of the segment.
    """
    lmax = float(loc[-1])
    n_big = max(grid_points // 4, 64)
    n_small = max((grid_points - 3 * n_big) // max(loc.size - 1, 1), 16)
    far = np.geomspace(1e-13, 1e9, n_big)
    first = loc[0] * _edge_grid(n_big)
    segs = [(-lmax * far[::-1], "-inf", "zero"), (first[first < loc[0]], "zero", "pole")]
    for a, b in zip(loc[:-1], loc[1:]):
        tg = a + (b - a) * _edge_grid(n_small)
        tg = tg[(tg > a) & (tg < b)]
        if tg.size:
            segs.append((tg, "pole", "pole"))
    last = lmax + lmax * far
    segs.append((last[last > lmax], "pole", "+inf"))
    return segs


def _scan(c: float, w: np.ndarray, loc: np.ndarray, segs) -> list[tuple[float, float]]:
    def g(t: float) -> float:
        return float(_kernels.g_grid(np.array([t]), w, loc, c)[0])

    def image(t: float) -> float:
        return float(_kernels.spike_image_grid(np.array([t]), w, loc, c)[0])

    def boundary(t_in: float, t_out: float) -> float:
        return optimize.brentq(lambda s: g(s) - 1.0, t_in, t_out, xtol=1e-14 * max(abs(t_in), 1e-300), rtol=1e-15, maxiter=500)

    limits = {"-inf": -math.inf, "+inf": math.inf, "zero": 0.0}
    raw: list[tuple[float, float]] = []
    for tg, left_tag, right_tag in segs:
        ok = _kernels.g_grid(tg, w, loc, c) < 1.0
        if not ok.any():
            continue
        # runs of consecutive grid points with dx/dm > 0
        edges = np.flatnonzero(np.diff(np.concatenate([[0], ok.astype(np.int8), [0]])))
        for start, stop in zip(edges[::2], edges[1::2]):
            x_lo = limits[left_tag] if start == 0 else image(boundary(tg[start], tg[start - 1]))
            x_hi = limits[right_tag] if stop == tg.size else image(boundary(tg[stop - 1], tg[stop]))
            raw.append((x_lo, x_hi))
    return raw


def support_scan(c: float, H: DiscreteMeasure, search: RealInterval, grid_points: int = 100_000) -> list[RealInterval]:
    """Maximal x-intervals inside ``search`` that lie outside the limiting support.

    Scans ``t = -1/m`` between consecutive poles, keeps the stretches where
    ``dx/dm > 0`` (equivalently ``g(t) < 1``), refines their ends by root
    bracketing and maps them through ``x``.
    """
    if grid_points < 100:
        raise DomainError("grid_points must be at least 100")
    if not isinstance(search, RealInterval):
        search = RealInterval(*search)
    w, loc = H.positive_atoms()
    if loc.size == 0:
        raise DomainError("H must have at least one positive atom")
    raw = _scan(c, w, loc, _segments(np.unique(loc), grid_points))

    clipped = sorted((max(a, search.lo), min(b, search.hi)) for a, b in raw)
    merged: list[list[float]] = []
    for a, b in clipped:
        if b <= a:
            continue
        if merged and a <= merged[-1][1] + 1e-12 * max(1.0, abs(a)):
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [RealInterval(a, b) for a, b in merged]


def support_right_edge(c: float, H: DiscreteMeasure, grid_points: int = 100_000) -> float:
    """Right edge of the limiting support (scans only right of the largest atom)."""
    w, loc = H.positive_atoms()
    if loc.size == 0:
        raise DomainError("H must have at least one positive atom")
    seg = _segments(np.unique(loc), grid_points)[-1]
    raw = _scan(c, w, loc, [seg])
    return min(a for a, _ in raw)


# -- closed forms for the inverse-MP population ----------------------------------------


def mh1_stieltjes(x: float, c1: float) -> float:
    """Stieltjes transform of the MP(c1) law at ``0 < x <= (1 - sqrt(c1))^2``.

    Uses the branch that is real and finite at ``x = 0``, written in the
    rationalized form ``2 / ((1 - c1 - x) + sqrt(D))`` which avoids the
    cancellation of the textbook expression near zero.
    """
    if not 0.0 < c1 < 1.0:
        raise DomainError(f"c1 must lie in (0, 1), got {c1}")
    a = (1.0 - math.sqrt(c1)) ** 2
    if not 0.0 < x <= a * (1.0 + 1e-15):
        raise DomainError(f"x must lie in (0, {a}], got {x}")
    b = (1.0 + math.sqrt(c1)) ** 2
    disc = max((x - a) * (x - b), 0.0)
    return 2.0 / ((1.0 - c1 - x) + math.sqrt(disc))


def g_closed(t: float, c: float, c1: float) -> float:
    """g(t) for the inverse-MP(c1) population, valid for ``t > (1 - sqrt(c1))^-2``."""
    sc = math.sqrt(c1)
    if t <= (1.0 - sc) ** -2:
        raise DomainError(f"t must exceed {(1.0 - sc) ** -2}, got {t}")
    root = math.sqrt((1.0 - t * (1.0 - sc) ** 2) * (1.0 - t * (1.0 + sc) ** 2))
    return c / (2.0 * c1) * (-(1.0 - c1) + (t * (1.0 - c1) ** 2 - (1.0 + c1)) / root)


# -- quantile discretizations ------------------------------------------------------------


def mp_quantile_measure(c1: float, atoms: int, grid: int = 40_001) -> DiscreteMeasure:
    """Equal-weight quantile atoms of the Marchenko-Pastur law with ratio ``c1 < 1``.

    The CDF is tabulated in the angle variable ``x = a + (b - a) sin^2(theta)``,
    where the integrand is smooth, then inverted at the midpoints
    ``(i - 1/2) / atoms``.
    """
    if not 0.0 < c1 < 1.0:
        raise DomainError(f"c1 must lie in (0, 1), got {c1}")
    if atoms < 1:
        raise DomainError("atoms must be positive")
    a = (1.0 - math.sqrt(c1)) ** 2
    b = (1.0 + math.sqrt(c1)) ** 2
    theta = np.linspace(0.0, math.pi / 2, grid)
    s2 = np.sin(theta) ** 2
    x = a + (b - a) * s2
    f = (b - a) ** 2 * s2 * (1.0 - s2) / (math.pi * c1 * x)
    cdf = integrate.cumulative_simpson(f, x=theta, initial=0.0)
    cdf /= cdf[-1]
    probs = (np.arange(atoms) + 0.5) / atoms
    th = np.interp(probs, cdf, theta)
    locs = a + (b - a) * np.sin(th) ** 2
    return DiscreteMeasure(np.full(atoms, 1.0 / atoms), locs)


def inverse_mp_measure(c1: float, atoms: int) -> DiscreteMeasure:
    """Discretized limit law of the inverse of a noise-only sample covariance."""
    mp = mp_quantile_measure(c1, atoms)
    return DiscreteMeasure(mp.weights, 1.0 / mp.locations)
