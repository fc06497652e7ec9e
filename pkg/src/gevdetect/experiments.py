"""Monte Carlo experiments that check the limit theory at desk scale."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from gevdetect.detector import Centering, Mode, detect
from gevdetect.phase import PopulationSpectrum, lambda_threshold, spiked_limit
from gevdetect.simulate import TrialConfig, map_trials, top_eigenvalues
from gevdetect.spectra import AspectRatios, DomainError, SystemShape, edf_and_ks, support_endpoints


@dataclass(frozen=True)
class HeatmapGrid:
    """Sweep axes: eigen-SNR in dB (rows) and ``c = n/m`` (columns)."""

    snr_db_range: tuple[float, float, int]
    c_range: tuple[float, float, int]
    c1: float
    alpha: float = 0.01

    def __post_init__(self) -> None:
        for lo, hi, pts in (self.snr_db_range, self.c_range):
            if pts < 1 or (pts >= 2 and not lo < hi) or (pts == 1 and lo > hi):
                raise DomainError(f"invalid range {lo}:{hi}:{pts}")
        if not 0 < self.c1 < 1:
            raise DomainError(f"c1 must lie in (0, 1), got {self.c1}")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def snr_db(self) -> np.ndarray:
        lo, hi, pts = self.snr_db_range
        return np.linspace(lo, hi, pts)

    @property
    def c_values(self) -> np.ndarray:
        lo, hi, pts = self.c_range
        return np.linspace(lo, hi, pts)


@dataclass(frozen=True)
class SpikeResult:
    mean_top: float
    sd_top: float
    predicted: float
    top: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class CdfComparison:
    signal_top: np.ndarray = field(repr=False)
    null_top: np.ndarray = field(repr=False)
    ks: float


@dataclass(frozen=True)
class HeatmapResult:
    snr_db: np.ndarray
    c_nominal: np.ndarray
    m: np.ndarray
    c_actual: np.ndarray
    probability: np.ndarray  # (len(snr_db), len(c)); NaN marks skipped cells
    theory_db: np.ndarray
    known_noise_db: np.ndarray
    n: int
    N: int
    alpha: float


def db_to_spike(snr_db: float) -> float:
    return 1.0 + 10.0 ** (snr_db / 10.0)


def predicted_top(shape: SystemShape, population: PopulationSpectrum) -> float:
    r = shape.ratios
    if population.k == 0:
        return support_endpoints(r).b2
    return spiked_limit(population.signal_eigenvalues[0], r)


def experiment_spike(cfg: TrialConfig) -> SpikeResult:
    """Largest-eigenvalue statistics over trials next to the limit prediction."""
    top = top_eigenvalues(cfg)
    sd = float(np.std(top, ddof=1)) if top.size > 1 else 0.0
    return SpikeResult(float(np.mean(np.sort(top))), sd, predicted_top(cfg.shape, cfg.population), top)


def experiment_cdf_compare(cfg_signal: TrialConfig, cfg_null: TrialConfig) -> CdfComparison:
    """Sorted top-eigenvalue samples of two configurations and their two-sample KS distance."""
    if cfg_signal.shape != cfg_null.shape:
        raise DomainError("configurations must share a shape")
    a = np.sort(top_eigenvalues(cfg_signal))
    b = np.sort(top_eigenvalues(cfg_null))
    return CdfComparison(a, b, float(stats.ks_2samp(a, b).statistic))


def experiment_edf(cfg: TrialConfig) -> np.ndarray:
    """KS distance of each trial's e.d.f. to the limiting law at the trial's own ratios."""
    r = cfg.shape.ratios
    return np.array(map_trials(cfg, lambda v: edf_and_ks(v, r)[1]))


def experiment_heatmap(
    grid: HeatmapGrid,
    shape_base: SystemShape,
    trials: int,
    seed: int,
    alpha: float | None = None,
    mode: Mode = "jacobi",
    centering: Centering = "analytic",
) -> HeatmapResult:
    """Detection probability ``P(k_hat >= 1)`` over an (eigen-SNR, c) grid.

    ``shape_base`` supplies ``n``, ``N`` and the field; each column sets
    ``m = round(n / c)``. Columns with ``m <= 1`` are skipped and marked NaN.
    """
    alpha = grid.alpha if alpha is None else alpha
    n, N = shape_base.n, shape_base.N
    if abs(n / N - grid.c1) > 0.01:
        raise DomainError(f"grid c1={grid.c1} does not match n/N={n / N:.4f}")
    snr = grid.snr_db
    cs = grid.c_values
    ms = np.array([int(round(n / c)) for c in cs])
    prob = np.full((snr.size, cs.size), np.nan)
    theory = np.full(cs.size, np.nan)
    known = np.full(cs.size, np.nan)
    c_act = np.full(cs.size, np.nan)
    for j, m in enumerate(ms):
        if m <= 1:
            continue
        shape = SystemShape(n, int(m), N, shape_base.field)
        r = shape.ratios
        c_act[j] = r.c
        theory[j] = 10.0 * math.log10(lambda_threshold(r) - 1.0)
        known[j] = 10.0 * math.log10(math.sqrt(r.c))
        for i, s in enumerate(snr):
            pop = PopulationSpectrum((db_to_spike(s),), n)
            cfg = TrialConfig(shape, pop, trials, seed)
            hits = map_trials(cfg, lambda v: detect(v, shape, alpha, mode, centering, seed=seed).k_hat >= 1)
            prob[i, j] = float(np.mean(hits))
    return HeatmapResult(snr, cs, ms, c_act, prob, theory, known, n, N, alpha)


def empirical_transition(snr_db: np.ndarray, prob_column: np.ndarray, level: float = 0.5) -> float:
    """First SNR (linearly interpolated) at which detection probability reaches ``level``."""
    above = np.flatnonzero(prob_column >= level)
    if above.size == 0:
        return math.inf
    i = int(above[0])
    if i == 0:
        return float(snr_db[0])
    p0, p1 = prob_column[i - 1], prob_column[i]
    return float(snr_db[i - 1] + (level - p0) / (p1 - p0) * (snr_db[i] - snr_db[i - 1]))


def threshold_db(r: AspectRatios) -> float:
    return 10.0 * math.log10(lambda_threshold(r) - 1.0)
