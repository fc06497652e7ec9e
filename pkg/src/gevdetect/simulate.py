"""Gaussian snapshot simulation and sample generalized eigenvalues.

Simulation happens in whitened coordinates: the noise covariance is the
identity and the signal-plus-noise covariance is ``diag(lambda_1..lambda_k, 1..1)``.
The generalized spectrum of ``(R_hat, Sigma_hat)`` is invariant under a common
congruence, so this loses no generality.

Each trial draws from its own Philox stream keyed by ``(seed, trial_index,
role)``. Results therefore do not depend on how trials are scheduled across
workers (set ``GEVDETECT_WORKERS`` to use a thread pool).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Literal, TypeVar

import numpy as np
from scipy import linalg

from gevdetect.phase import PopulationSpectrum
from gevdetect.spectra import DomainError, EmpiricalSpectrum, SingularNoiseError, SystemShape

T = TypeVar("T")

SIGNAL, NOISE = 0, 1


@dataclass(frozen=True)
class TrialConfig:
    """A batch of independent trials at a fixed shape and population spectrum.

    ``noise="known"`` skips the noise-only sample and returns eigenvalues of the
    whitened ``R_hat`` directly (the known-covariance setting).
    """

    shape: SystemShape
    population: PopulationSpectrum | None = None
    trials: int = 1
    seed: int = 0
    noise: Literal["estimated", "known"] = "estimated"
    stream: int = 0
    population_diag: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise DomainError("trials must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.noise not in ("estimated", "known"):
            raise DomainError(f"noise must be 'estimated' or 'known', got {self.noise!r}")
        pop = self.population or PopulationSpectrum((), self.shape.n)
        if pop.dimension != self.shape.n:
            raise DomainError("population dimension does not match shape.n")
        object.__setattr__(self, "population", pop)
        object.__setattr__(self, "population_diag", np.asarray(pop.diagonal(), dtype=float))


def worker_count() -> int:
    """Thread count for trial loops; affects speed only, never results."""
    try:
        return max(1, int(os.environ.get("GEVDETECT_WORKERS", "1")))
    except ValueError:
        return 1


def stream(seed: int, trial_index: int, role: int, extra: int = 0) -> np.random.Generator:
    """Independent counter-based generator for one (seed, trial, role) triple."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(extra, trial_index, role))
    return np.random.Generator(np.random.Philox(ss))


def _gaussian(rng: np.random.Generator, rows: int, cols: int, complex_field: bool) -> np.ndarray:
    if complex_field:
        z = rng.standard_normal((rows, cols, 2))
        return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)
    return rng.standard_normal((rows, cols))


def generalized_eigenvalues(R_hat: np.ndarray, Sigma_hat: np.ndarray) -> EmpiricalSpectrum:
    """Eigenvalues of ``Sigma_hat^{-1} R_hat`` in descending order."""
    return EmpiricalSpectrum.from_unsorted(_gen_eigvals(np.asarray(R_hat), np.asarray(Sigma_hat)))


def _gen_eigvals(R_hat: np.ndarray, Sigma_hat: np.ndarray) -> np.ndarray:
    n = R_hat.shape[0]
    if R_hat.shape != (n, n) or Sigma_hat.shape != (n, n):
        raise DomainError(f"shape mismatch: {R_hat.shape} vs {Sigma_hat.shape}")
    try:
        L = linalg.cholesky(Sigma_hat, lower=True, check_finite=True)
    except linalg.LinAlgError as exc:
        raise SingularNoiseError(f"noise covariance is not positive definite: {exc}") from None
    # C = L^{-1} R L^{-H}; Hermitian with the same eigenvalues as Sigma^{-1} R
    Y = linalg.solve_triangular(L, R_hat, lower=True, check_finite=False)
    C = linalg.solve_triangular(L, Y.conj().T, lower=True, check_finite=False)
    vals = linalg.eigvalsh(C, check_finite=False, overwrite_a=True)
    return _clean(vals)


def _clean(vals: np.ndarray) -> np.ndarray:
    """Sort descending; snap rank-deficiency round-off to exact zeros."""
    vals = np.sort(vals.real)[::-1]
    tol = vals.size * np.finfo(float).eps * max(abs(vals[0]), 1.0)
    vals[vals <= tol] = 0.0
    return vals


def _trial_values(cfg: TrialConfig, trial_index: int) -> np.ndarray:
    n, m, N = cfg.shape.n, cfg.shape.m, cfg.shape.N
    cplx = cfg.shape.field == "complex"
    W = _gaussian(stream(cfg.seed, trial_index, SIGNAL, cfg.stream), n, m, cplx)
    X = np.sqrt(cfg.population_diag)[:, None] * W
    R_hat = (X @ X.conj().T) / m
    if cfg.noise == "known":
        return _clean(linalg.eigvalsh(R_hat, check_finite=False))
    Z = _gaussian(stream(cfg.seed, trial_index, NOISE, cfg.stream), n, N, cplx)
    Sigma_hat = (Z @ Z.conj().T) / N
    return _gen_eigvals(R_hat, Sigma_hat)


def simulate_trial(cfg: TrialConfig, trial_index: int) -> EmpiricalSpectrum:
    """Sample generalized eigenvalues for one trial; a pure function of (cfg, trial_index)."""
    if not 0 <= trial_index < cfg.trials:
        raise DomainError(f"trial_index {trial_index} outside [0, {cfg.trials})")
    vals = _trial_values(cfg, trial_index)
    return EmpiricalSpectrum(tuple(vals.tolist()))


def map_trials(cfg: TrialConfig, fn: Callable[[np.ndarray], T]) -> list[T]:
    """Apply ``fn`` to the descending eigenvalues of every trial, in trial order."""

    def one(i: int) -> T:
        return fn(_trial_values(cfg, i))

    workers = worker_count()
    if workers == 1 or cfg.trials == 1:
        return [one(i) for i in range(cfg.trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(cfg.trials)))


def run_spectra(cfg: TrialConfig) -> np.ndarray:
    """All trial spectra stacked as a ``(trials, n)`` array."""
    return np.vstack(map_trials(cfg, lambda v: v))


def top_eigenvalues(cfg: TrialConfig) -> np.ndarray:
    return np.array(map_trials(cfg, lambda v: float(v[0])))
