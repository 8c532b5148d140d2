"""Hyperparameter grids, discrete ELBO selection, and continuous tuning.

The discrete selector scores each grid value lambda by

    score(lambda) = collapsed_bound(lambda) + log mass(lambda)

and keeps the argmax, which coincides with the argmax of the collapsed
bound alone whenever the masses are uniform. The continuous tuner drives
(sigma, nu, tau) of the stationary-kernel workflow through Nelder-Mead on
log-parameters, rebuilding the sample spectral features at every objective
evaluation.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.optimize

from .errors import ConditioningError
from .exact import Dataset, SquaredExponential, exact_posterior, kernel_matrix, log_evidence
from .inducing import elbo_lambda, predict, sample_features, titsias_fit

__all__ = [
    "HyperGrid",
    "SelectionRecord",
    "SelectionReport",
    "poly_grid",
    "exp_grid",
    "dim_grid",
    "select_discrete",
    "coarse_init",
    "tune_continuous",
]

_FAIL = (ConditioningError, np.linalg.LinAlgError)


@dataclass(frozen=True)
class HyperGrid:
    """Finite hyperparameter grid with its mass function and feature rule."""

    family: str
    values: np.ndarray
    masses: np.ndarray
    m_rule: Callable[[float], int]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        masses = np.asarray(self.masses, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "masses", masses)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("grid needs at least one value")
        if np.any(np.diff(values) <= 0):
            raise ValueError("grid values must be strictly increasing")
        if masses.shape != values.shape:
            raise ValueError("masses must align with values")
        if np.any(masses <= 0) or abs(float(masses.sum()) - 1.0) > 1e-12:
            raise ValueError("masses must be a probability vector")
        for lam in values:
            if self.m_rule(lam) < 1:
                raise ValueError(f"m_rule must be >= 1 (violated at {lam})")

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass
class SelectionRecord:
    lam: float
    log_mass: float
    wall_time: float
    elbo_lambda: float | None = None
    elbo: float | None = None
    m: int | None = None
    error: str | None = None


@dataclass
class SelectionReport:
    chosen: object
    posterior: object
    records: list[SelectionRecord]
    diagnostics: dict = field(default_factory=dict)

    def record_for(self, lam) -> SelectionRecord:
        for rec in self.records:
            if rec.lam == lam:
                return rec
        raise KeyError(lam)


def poly_grid(beta_minus: float, beta_plus: float, n: int,
              c_m: float = 1.0, d: int = 1) -> HyperGrid:
    """Smoothness grid with spacing 1/log n on [beta_minus, beta_plus].

    The feature rule is ceil(c_m * n^(d/(d+2*alpha))).
    """
    if not (0.0 < beta_minus < beta_plus):
        raise ValueError("need 0 < beta_minus < beta_plus")
    if n < 3:
        raise ValueError("n must be at least 3")
    if c_m <= 0:
        raise ValueError("c_m must be positive")
    step = 1.0 / math.log(n)
    k_max = int(math.floor((beta_plus - beta_minus) / step + 1e-12))
    values = beta_minus + step * np.arange(k_max + 1)

    def m_rule(alpha: float) -> int:
        return max(1, math.ceil(c_m * n ** (d / (d + 2.0 * alpha))))

    return HyperGrid("poly", values, np.full(values.size, 1.0 / values.size),
                     m_rule)


def exp_grid(beta_minus: float, d: int, n: int) -> HyperGrid:
    """Scale grid {e^-j} for the exponentially decaying spectrum.

    j runs to floor(log n / (d + 2*beta_minus)); the feature rule is
    ceil(tau^-d * (log n)^(d+1)).
    """
    if beta_minus <= 0:
        raise ValueError("beta_minus must be positive")
    if d < 1:
        raise ValueError("d must be a positive integer")
    j_max = int(math.floor(math.log(n) / (d + 2.0 * beta_minus)))
    if j_max < 1:
        raise ValueError(f"n={n} is too small for beta_minus={beta_minus}")
    values = np.exp(-np.arange(j_max, 0, -1, dtype=float))
    log_n = math.log(n)

    def m_rule(tau: float) -> int:
        return max(1, math.ceil(tau ** (-d) * log_n ** (d + 1)))

    return HyperGrid("exp", values, np.full(values.size, 1.0 / values.size),
                     m_rule)


def dim_grid(n: int, powers_of_two: bool = False) -> HyperGrid:
    """Truncation-level grid {1, ..., floor(sqrt n)}, optionally dyadic."""
    if n < 1:
        raise ValueError("n must be positive")
    cap = math.isqrt(n)
    if powers_of_two:
        values = [1]
        while values[-1] * 2 <= cap:
            values.append(values[-1] * 2)
        values = np.asarray(values, dtype=float)
    else:
        values = np.arange(1, cap + 1, dtype=float)

    def m_rule(dim: float) -> int:
        return int(round(dim))

    return HyperGrid("dim", values, np.full(values.size, 1.0 / values.size),
                     m_rule)


def select_discrete(grid: HyperGrid, data: Dataset,
                    fitter: Callable[[float], tuple]) -> SelectionReport:
    """Fit every grid value and keep the best mass-weighted bound.

    ``fitter(lam)`` must return ``(fit, collapsed_bound)``. Conditioning
    failures exclude that value with the error recorded; ties resolve to
    the smaller lambda. Raises once every value has failed.
    """
    records: list[SelectionRecord] = []
    best = None  # (score, lam, fit)
    for lam, mass in zip(grid.values, grid.masses):
        log_mass = float(np.log(mass))
        t0 = time.perf_counter()
        try:
            fit, bound = fitter(lam)
        except _FAIL as exc:
            records.append(SelectionRecord(
                lam=float(lam), log_mass=log_mass,
                wall_time=time.perf_counter() - t0,
                error=f"{type(exc).__name__}: {exc}"))
            continue
        score = bound + log_mass
        model = getattr(fit, "model", None)
        m = int(model.m) if model is not None else grid.m_rule(lam)
        records.append(SelectionRecord(
            lam=float(lam), log_mass=log_mass,
            wall_time=time.perf_counter() - t0,
            elbo_lambda=float(bound), elbo=float(score), m=m))
        if best is None or score > best[0]:
            best = (score, float(lam), fit)
    if best is None:
        failures = "; ".join(f"{r.lam:g} -> {r.error}" for r in records)
        raise ConditioningError(f"every grid value failed: {failures}")
    return SelectionReport(chosen=best[1], posterior=best[2], records=records)


def coarse_init(data: Dataset, m: int, bounds: Sequence[tuple],
                kernel_ctor: Callable = SquaredExponential,
                objective: str = "elbo",
                points_per_axis: int = 3) -> tuple:
    """Pick a starting triple for :func:`tune_continuous` by grid scan.

    Evaluates the chosen objective on a log-spaced lattice interior to the
    bounds and returns the best (sigma, nu, tau). Failures are skipped;
    raises if every lattice point fails.
    """
    axes = []
    for lo, hi in bounds:
        grid = np.exp(np.linspace(np.log(lo), np.log(hi),
                                  points_per_axis + 2))[1:-1]
        axes.append(grid)
    best = None
    for sigma in axes[0]:
        for nu in axes[1]:
            for tau in axes[2]:
                shifted = data.with_sigma_sq(sigma * sigma)
                kern = kernel_ctor(nu, tau)
                try:
                    if objective == "evidence":
                        val = log_evidence(kern, shifted)
                    else:
                        with warnings.catch_warnings():
                            warnings.simplefilter("ignore", RuntimeWarning)
                            model = sample_features(
                                kernel_matrix(kern, data.x), m,
                                kernel=kern, x=data.x)
                        val = elbo_lambda(model, shifted)
                except _FAIL:
                    continue
                if best is None or val > best[0]:
                    best = (val, (float(sigma), float(nu), float(tau)))
    if best is None:
        raise ConditioningError("every coarse-grid evaluation failed")
    return best[1]


def _compose(free: np.ndarray, z_free: np.ndarray,
             log_init: np.ndarray) -> np.ndarray:
    z = log_init.copy()
    z[free] = z_free
    return np.exp(z)


def tune_continuous(data: Dataset, m: int,
                    init: Sequence[float], bounds: Sequence[tuple],
                    kernel_ctor: Callable = SquaredExponential,
                    free: Sequence[bool] = (True, True, True),
                    objective: str = "elbo",
                    maxiter: int = 200) -> SelectionReport:
    """Tune (sigma, nu, tau) by Nelder-Mead on log-parameters.

    ``objective="elbo"`` maximizes the collapsed bound of an m-feature
    sample-spectral model, recomputing the eigendecomposition at every
    evaluation; ``objective="evidence"`` maximizes the exact marginal
    likelihood instead (the empirical-Bayes reference). ``free`` pins
    coordinates (False entries stay at ``init``). The report's posterior
    is a callable mapping query points to a Gaussian law.
    """
    if objective not in ("elbo", "evidence"):
        raise ValueError("objective must be 'elbo' or 'evidence'")
    init = np.asarray(init, dtype=float)
    free = np.asarray(free, dtype=bool)
    if init.shape != (3,) or free.shape != (3,):
        raise ValueError("init and free must have length 3 (sigma, nu, tau)")
    if not free.any():
        raise ValueError("at least one coordinate must be free")
    if np.any(init <= 0):
        raise ValueError("init must be positive")
    lo = np.asarray([b[0] for b in bounds], dtype=float)
    hi = np.asarray([b[1] for b in bounds], dtype=float)
    if lo.shape != (3,) or np.any(lo <= 0) or not np.all(np.isfinite(hi)):
        raise ValueError("bounds must be three finite positive intervals")
    if np.any(init <= lo) or np.any(init >= hi):
        raise ValueError("init must be interior to bounds")

    log_init = np.log(init)
    log_lo, log_hi = np.log(lo), np.log(hi)
    n_evals = 0
    n_fails = 0
    PENALTY = 1e12

    def score(params: np.ndarray) -> float:
        sigma, nu, tau = params
        shifted = data.with_sigma_sq(sigma * sigma)
        kern = kernel_ctor(nu, tau)
        if objective == "evidence":
            return log_evidence(kern, shifted)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            model = sample_features(kernel_matrix(kern, data.x), m,
                                    kernel=kern, x=data.x)
        return elbo_lambda(model, shifted)

    def neg_objective(z_free: np.ndarray) -> float:
        nonlocal n_evals, n_fails
        n_evals += 1
        try:
            return -score(_compose(free, z_free, log_init))
        except _FAIL:
            n_fails += 1
            return PENALTY

    t0 = time.perf_counter()
    result = scipy.optimize.minimize(
        neg_objective, log_init[free], method="Nelder-Mead",
        bounds=list(zip(log_lo[free], log_hi[free])),
        options={"maxiter": maxiter, "xatol": 1e-6, "fatol": np.inf})
    wall = time.perf_counter() - t0
    if n_fails == n_evals or result.fun >= PENALTY:
        raise ConditioningError(
            f"continuous tuning failed on all {n_evals} evaluations")

    z_best = result.x
    pinned = (z_best - log_lo[free] < 1e-6) | (log_hi[free] - z_best < 1e-6)
    if pinned.any():
        names = np.array(["sigma", "nu", "tau"])[free][pinned]
        warnings.warn("tuned value pinned at bounds: " + ", ".join(names),
                      RuntimeWarning, stacklevel=2)

    params = _compose(free, z_best, log_init)
    sigma, nu, tau = (float(v) for v in params)
    shifted = data.with_sigma_sq(sigma * sigma)
    kern = kernel_ctor(nu, tau)
    if objective == "elbo":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            model = sample_features(kernel_matrix(kern, data.x), m,
                                    kernel=kern, x=data.x)
        q = titsias_fit(model, shifted)
        bound = elbo_lambda(model, shifted)
        handle = lambda query: predict(q, query)  # noqa: E731
        m_used = model.m
    else:
        bound = log_evidence(kern, shifted)
        handle = lambda query: exact_posterior(kern, shifted, query)  # noqa: E731
        m_used = None
    record = SelectionRecord(lam=float("nan"), log_mass=0.0, wall_time=wall,
                             elbo_lambda=float(bound), elbo=float(bound),
                             m=m_used)
    return SelectionReport(
        chosen=(sigma, nu, tau), posterior=handle, records=[record],
        diagnostics={"iterations": int(result.nit), "evaluations": n_evals,
                     "failures": n_fails, "converged": bool(result.success)})
