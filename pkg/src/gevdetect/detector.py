"""Sequential Tracy-Widom tests for the number of signals.

Two test statistics are supported:

``jacobi``
    Noise covariance estimated from ``N`` noise-only snapshots. The ``k``-th
    step standardizes ``log(m * l_{k+1} / N)``, which is the logit of the
    largest root of the matching Jacobi (double-Wishart) problem.
``wishart``
    Noise covariance known. The step standardizes ``m * l_{k+1}``.

At every step the statistic is compared against the Tracy-Widom ``1 - alpha``
quantile; a significant eigenvalue is counted as a signal and the test moves on
to the next one, otherwise it stops.
"""
from __future__ import annotations

import functools
import json
import math
import warnings
from dataclasses import asdict, dataclass
from typing import Literal, Sequence

import numpy as np

from gevdetect.simulate import TrialConfig, top_eigenvalues
from gevdetect.spectra import DomainError, EmpiricalSpectrum, Field, SystemShape
from gevdetect.tracy_widom import lookup, tw_quantile

Mode = Literal["jacobi", "wishart"]
Centering = Literal["analytic", "calibrated"]

# location/scale matching for calibration uses tabulated probabilities only
_CAL_MID, _CAL_LO, _CAL_HI = 0.50, 0.70, 0.95


class AnalyticUnavailableWarning(UserWarning):
    """No closed-form centering exists for the request; a calibrated one was used."""


@dataclass(frozen=True)
class CenteringScaling:
    mu: float
    sigma: float
    source: Literal["analytic", "calibrated"] = "analytic"

    def __post_init__(self) -> None:
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be positive, got {self.sigma}")

    def shifted(self, delta: float) -> CenteringScaling:
        return CenteringScaling(self.mu + delta, self.sigma, self.source)


@dataclass(frozen=True)
class Step:
    k: int
    statistic: float
    threshold: float
    decision: Literal["signal", "noise"]


@dataclass(frozen=True)
class DetectionReport:
    k_hat: int
    steps: tuple[Step, ...]
    alpha: float
    mode: Mode
    centerings: tuple[CenteringScaling, ...] = ()

    def to_dict(self) -> dict:
        def num(x: float) -> float | None:
            return x if math.isfinite(x) else None

        return {
            "k_hat": self.k_hat,
            "alpha": self.alpha,
            "mode": self.mode,
            "steps": [
                {"k": s.k, "statistic": num(s.statistic), "threshold": s.threshold, "decision": s.decision}
                for s in self.steps
            ],
            "centering": [asdict(c) for c in self.centerings],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def raw_statistic(eig: float | np.ndarray, m: int, N: int, mode: Mode) -> float | np.ndarray:
    """Unstandardized statistic for a sample eigenvalue."""
    if mode == "jacobi":
        with np.errstate(divide="ignore"):
            return np.log(m * np.asarray(eig, dtype=float) / N)
    if mode == "wishart":
        return m * np.asarray(eig, dtype=float)
    raise DomainError(f"unknown mode {mode!r}")


def jacobi_centering(p: int, m: int, N: int, field: Field = "real", *, trials: int = 2000, seed: int = 0) -> CenteringScaling:
    """Centering and scaling of ``log(m l_1 / N)`` under the null.

    Closed form for the real case. No closed form is available for the complex
    case; a simulated calibration at the same shape is returned instead and an
    :class:`AnalyticUnavailableWarning` is issued.
    """
    if p < 1 or m < 1:
        raise DomainError(f"p and m must be positive, got p={p}, m={m}")
    if N <= p + 1:
        raise DomainError(f"need N > p + 1, got p={p}, N={N}")
    if field == "complex":
        warnings.warn("no closed-form complex Jacobi centering; using simulated calibration", AnalyticUnavailableWarning, stacklevel=2)
        return _calibrated_step(p, m, N, "complex", "jacobi", trials, seed)
    if field != "real":
        raise DomainError(f"unknown field {field!r}")
    s = m + N - 1.0
    lo = (min(p, m) - 0.5) / s
    hi = (max(p, m) - 0.5) / s
    if not (0.0 < lo <= hi <= 1.0):
        raise DomainError(f"arcsin argument out of range for p={p}, m={m}, N={N}")
    gamma = 2.0 * math.asin(math.sqrt(lo))
    phi = 2.0 * math.asin(math.sqrt(hi))
    mu = 2.0 * math.log(math.tan(0.5 * (phi + gamma)))
    sigma3 = 16.0 / s**2 / (math.sin(phi + gamma) ** 2 * math.sin(phi) * math.sin(gamma))
    if not sigma3 > 0:
        raise DomainError(f"degenerate scaling for p={p}, m={m}, N={N}")
    return CenteringScaling(mu, sigma3 ** (1.0 / 3.0), "analytic")


def wishart_centering(p: int, m: int, field: Field = "real") -> CenteringScaling:
    """Centering and scaling of ``m l_1`` for a white Wishart matrix."""
    if p < 1 or m < 1:
        raise DomainError(f"p and m must be positive, got p={p}, m={m}")
    if field == "real":
        if m == 1:
            raise DomainError("real Wishart centering needs m >= 2")
        a, b = math.sqrt(m - 1.0), math.sqrt(p)
    elif field == "complex":
        a, b = math.sqrt(m), math.sqrt(p)
    else:
        raise DomainError(f"unknown field {field!r}")
    return CenteringScaling((a + b) ** 2, (a + b) * (1.0 / a + 1.0 / b) ** (1.0 / 3.0), "analytic")


@functools.lru_cache(maxsize=512)
def _calibrated_step(p: int, m: int, N: int, field: Field, mode: Mode, trials: int, seed: int) -> CenteringScaling:
    shape = SystemShape(p, m, N, field)
    derived = int(np.random.SeedSequence([seed, p, m, N]).generate_state(1, np.uint64)[0])
    cfg = TrialConfig(shape, trials=trials, seed=derived, noise="known" if mode == "wishart" else "estimated", stream=0xCA1B)
    stats = np.sort(raw_statistic(top_eigenvalues(cfg), m, N, mode))
    q_mid, q_lo, q_hi = np.quantile(stats, [_CAL_MID, _CAL_LO, _CAL_HI])
    t_mid = lookup(_CAL_MID, field).value
    t_lo = lookup(_CAL_LO, field).value
    t_hi = lookup(_CAL_HI, field).value
    sigma = float((q_hi - q_lo) / (t_hi - t_lo))
    return CenteringScaling(float(q_mid - sigma * t_mid), sigma, "calibrated")


def calibrate_null(shape: SystemShape, k_max: int, trials: int = 2000, seed: int = 0, mode: Mode = "jacobi") -> list[CenteringScaling]:
    """Simulated null centering/scaling for deflation steps ``k = 0..k_max``.

    Step ``k`` simulates noise-only data at ``(n - k, m - k, N)`` and matches the
    median and an upper quantile gap of the statistic to the Tracy-Widom law.
    The result is a deterministic function of the arguments.
    """
    if trials < 200:
        raise DomainError("calibration needs at least 200 trials")
    if not 0 <= k_max < min(shape.n, shape.m):
        raise DomainError(f"k_max must lie in [0, {min(shape.n, shape.m)})")
    return [_calibrated_step(shape.n - k, shape.m - k, shape.N, shape.field, mode, trials, seed) for k in range(k_max + 1)]


def _centering_for(k: int, shape: SystemShape, mode: Mode, centering: Centering, trials: int, seed: int) -> CenteringScaling:
    p, m = shape.n - k, shape.m - k
    if centering == "calibrated":
        return _calibrated_step(p, m, shape.N, shape.field, mode, trials, seed)
    if centering != "analytic":
        raise DomainError(f"unknown centering {centering!r}")
    if mode == "wishart":
        return wishart_centering(p, m, shape.field)
    if shape.field == "complex":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AnalyticUnavailableWarning)
            return jacobi_centering(p, m, shape.N, "complex", trials=trials, seed=seed)
    return jacobi_centering(p, m, shape.N, "real")


def detect(
    spec: EmpiricalSpectrum | Sequence[float] | np.ndarray,
    shape: SystemShape,
    alpha: float = 0.05,
    mode: Mode = "jacobi",
    centering: Centering = "analytic",
    calibration_trials: int = 2000,
    *,
    seed: int = 0,
    centerings: Sequence[CenteringScaling] | None = None,
) -> DetectionReport:
    """Estimate the number of signals from descending sample generalized eigenvalues.

    Parameters
    ----------
    spec
        ``shape.n`` eigenvalues in descending order. For ``mode="jacobi"`` these
        are eigenvalues of ``Sigma_hat^{-1} R_hat``; for ``mode="wishart"`` of the
        whitened ``R_hat`` with known noise covariance.
    centering
        ``"analytic"`` uses closed-form constants; ``"calibrated"`` simulates the
        null at each deflated shape (``calibration_trials`` trials, ``seed``).
    centerings
        Explicit per-step centering/scaling; overrides ``centering``.
    """
    if mode not in ("jacobi", "wishart"):
        raise DomainError(f"unknown mode {mode!r}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if isinstance(spec, EmpiricalSpectrum):
        vals = spec.as_array()
    else:
        vals = np.asarray(spec, dtype=float)
        if np.any(np.diff(vals) > 0):
            raise DomainError("spectrum must be sorted in descending order")
    if vals.size != shape.n:
        raise DomainError(f"expected {shape.n} eigenvalues, got {vals.size}")
    if mode == "jacobi" and shape.N <= shape.n + 1:
        raise DomainError("jacobi mode needs N > n + 1")

    threshold = tw_quantile(1.0 - alpha, shape.field)
    k_stop = min(shape.n, shape.m)
    steps: list[Step] = []
    used: list[CenteringScaling] = []
    k = 0
    while k < k_stop:
        if centerings is not None:
            if k >= len(centerings):
                raise DomainError(f"no centering supplied for step {k}")
            cs = centerings[k]
        else:
            cs = _centering_for(k, shape, mode, centering, calibration_trials, seed)
        used.append(cs)
        stat = float((raw_statistic(vals[k], shape.m, shape.N, mode) - cs.mu) / cs.sigma)
        if stat >= threshold:
            steps.append(Step(k, stat, threshold, "signal"))
            k += 1
        else:
            steps.append(Step(k, stat, threshold, "noise"))
            break
    return DetectionReport(k, tuple(steps), alpha, mode, tuple(used))
