"""Sparse variational GP regression with inducing variables.

Two flavors of inducing variables are implemented, matching the two ways the
low-rank structure can be chosen:

* population features: the inducing variables are the first m basis weights
  of a series prior, u_j = <f, phi_j>, giving diagonal K_uu = diag(s_j^2)
  and K_uf[j, i] = s_j^2 phi_j(x_i);
* sample features: u_j = v_j' f(x) for the top-m eigenvectors v_j of the
  kernel matrix at the observed design, giving K_uu = diag(eigenvalues) and
  K_uf = diag(eigenvalues) V'.

The optimal Gaussian q(u) for fixed hyperparameters has the closed form

    Sigma = K_uu A^{-1} K_uu,   mu = sigma^{-2} K_uu A^{-1} K_uf y,
    A = K_uu + sigma^{-2} K_uf K_fu,

and the resulting collapsed objective

    log N(y; 0, Q_ff + sigma^2 I) - tr(K_ff - Q_ff) / (2 sigma^2),

is evaluated through the Woodbury identity in O(m^2 n).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from . import _linalg
from .basis import SeriesPrior
from .errors import ConditioningError
from .exact import (
    Dataset,
    GaussianPosterior,
    KernelSpec,
    kernel_cross,
    kernel_matrix,
    log_evidence,
)

__all__ = [
    "InducingModel",
    "VariationalGP",
    "population_features",
    "sample_features",
    "titsias_fit",
    "predict",
    "elbo_lambda",
    "elbo_profile",
    "elbo_at",
    "kl_to_posterior",
]


@dataclass
class InducingModel:
    """Low-rank prior summary: inducing covariances plus prior variances.

    ``V`` and ``eigvals`` are populated for the sample flavor only;
    ``prior`` for the population flavor; ``kernel`` when cross-covariances
    to new points are available for prediction.
    """

    flavor: str
    m: int
    K_uu: np.ndarray
    K_uf: np.ndarray
    kff_diag: np.ndarray
    x_train: np.ndarray
    V: np.ndarray | None = None
    eigvals: np.ndarray | None = None
    prior: SeriesPrior | None = None
    kernel: KernelSpec | None = None
    feature_cutoff: int | None = None  # series length J behind kff_diag
    tail_mode: str = "mean"

    @property
    def n(self) -> int:
        return self.K_uf.shape[1]


@dataclass
class VariationalGP:
    """Fitted variational distribution q(u) = N(mu, Sigma) over features."""

    model: InducingModel
    mu: np.ndarray
    Sigma: np.ndarray


def population_features(prior: SeriesPrior, x: np.ndarray, m: int,
                        j_cutoff: int | None = None,
                        tail_mode: str = "mean") -> InducingModel:
    """Spectral inducing variables: the first m prior basis weights.

    The prior variance sum behind ``kff_diag`` is truncated at
    J = max(10 m, 1000) (capped at the spectrum support, overridable via
    ``j_cutoff``). With ``tail_mode="mean"`` (default) the mean of the
    dropped tail, sum_{j>J} s_j^2, is added back so the trace penalty in
    the collapsed objective is unbiased for slowly decaying spectra; with
    ``tail_mode="truncate"`` the model describes exactly the J-term
    truncated prior, which is what a matching
    :class:`~gpadapt.exact.SeriesKernel` computes.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if m < 1:
        raise ValueError("need at least one inducing feature")
    if m > prior.support:
        raise ValueError(
            f"m = {m} exceeds the spectrum support {prior.support}")
    if tail_mode not in ("mean", "truncate"):
        raise ValueError("tail_mode must be 'mean' or 'truncate'")
    J = max(10 * m, 1000) if j_cutoff is None else int(j_cutoff)
    if J < m:
        raise ValueError("j_cutoff must be at least m")
    if np.isfinite(prior.support):
        J = min(J, int(prior.support))
    s2 = prior.spectrum(np.arange(1, J + 1)) ** 2
    Phi = prior.basis.features(x, J)
    kff = (Phi * Phi) @ s2
    if tail_mode == "mean":
        kff = kff + prior.tail_variance(J)
    K_uf = (Phi[:, :m] * s2[:m]).T.copy()
    return InducingModel(
        flavor="population",
        m=m,
        K_uu=np.diag(s2[:m]),
        K_uf=K_uf,
        kff_diag=kff,
        x_train=x,
        prior=prior,
        feature_cutoff=J,
        tail_mode=tail_mode,
    )


def sample_features(K_ff: np.ndarray, m: int, kernel: KernelSpec | None = None,
                    x: np.ndarray | None = None) -> InducingModel:
    """Empirical inducing variables: top-m eigenpairs of the kernel matrix.

    Non-positive eigenvalues among the requested m are dropped with a
    warning (rank-degenerate kernels), shrinking m. Pass ``kernel`` and
    ``x`` to enable prediction at new points.
    """
    K_ff = np.asarray(K_ff, dtype=float)
    n = K_ff.shape[0]
    if K_ff.shape != (n, n):
        raise ValueError("kernel matrix must be square")
    scale = max(float(np.max(np.abs(K_ff))), 1e-300)
    if float(np.max(np.abs(K_ff - K_ff.T))) > 1e-8 * scale:
        raise ValueError("kernel matrix must be symmetric")
    if not 1 <= m <= n:
        raise ValueError("m must lie in 1..n")
    K_sym = 0.5 * (K_ff + K_ff.T)
    if m < n:
        vals, vecs = scipy.linalg.eigh(K_sym, subset_by_index=[n - m, n - 1])
    else:
        vals, vecs = scipy.linalg.eigh(K_sym)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    tol = max(vals[0], 0.0) * n * np.finfo(float).eps
    keep = vals > tol
    if not np.any(keep):
        raise ConditioningError("kernel matrix has no positive eigenvalues")
    if np.count_nonzero(keep) < m:
        warnings.warn(
            f"dropping {m - np.count_nonzero(keep)} non-positive "
            "eigenvalues; reducing the number of features",
            RuntimeWarning,
            stacklevel=2,
        )
    vals = vals[keep]
    vecs = vecs[:, keep]
    m_eff = vals.size
    return InducingModel(
        flavor="sample",
        m=m_eff,
        K_uu=np.diag(vals),
        K_uf=(vecs * vals).T.copy(),
        kff_diag=np.diag(K_ff).copy(),
        x_train=None if x is None else np.atleast_1d(np.asarray(x, float)),
        V=vecs,
        eigvals=vals,
        kernel=kernel,
    )


def titsias_fit(model: InducingModel, data: Dataset) -> VariationalGP:
    """Closed-form optimal q(u) for the collapsed variational problem."""
    if data.n != model.n:
        raise ValueError("model was built for a different design")
    s2 = data.sigma_sq
    A = model.K_uu + (model.K_uf @ model.K_uf.T) / s2
    L_A, _ = _linalg.chol_jitter(A)
    T = _linalg.chol_solve(L_A, model.K_uu)
    Sigma = model.K_uu @ T
    Sigma = 0.5 * (Sigma + Sigma.T)
    mu = model.K_uu @ _linalg.chol_solve(L_A, model.K_uf @ data.y) / s2
    return VariationalGP(model=model, mu=mu, Sigma=Sigma)


def _cross_to_features(model: InducingModel, xs: np.ndarray) -> np.ndarray:
    """K_xu: covariance between f at new points and the inducing variables."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if model.flavor == "population":
        m = model.m
        s2 = model.prior.spectrum(np.arange(1, m + 1)) ** 2
        return model.prior.basis.features(xs, m) * s2
    if model.kernel is None or model.x_train is None:
        raise ValueError(
            "sample-feature prediction needs the kernel and training points")
    return kernel_cross(model.kernel, xs, model.x_train) @ model.V


def _prior_cov(model: InducingModel, xs: np.ndarray, ys: np.ndarray
               ) -> np.ndarray:
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    if model.flavor == "population":
        J = model.feature_cutoff
        prior = model.prior
        s2 = prior.spectrum(np.arange(1, J + 1)) ** 2
        Fa = prior.basis.features(xs, J)
        Fb = prior.basis.features(ys, J)
        out = (Fa * s2) @ Fb.T
        # dropped-tail mean belongs on exact variance entries only
        if model.tail_mode == "mean":
            tail = prior.tail_variance(J)
            if tail:
                out[xs[:, None] == ys[None, :]] += tail
        return out
    if model.kernel is None:
        raise ValueError(
            "sample-feature prediction needs the kernel and training points")
    return kernel_cross(model.kernel, xs, ys)


def predict(q: VariationalGP, query: np.ndarray) -> GaussianPosterior:
    """Variational predictive law of f, summarized at ``query``.

    Mean rule x -> K_xu K_uu^{-1} mu and covariance rule
    (x, x') -> k(x, x') - K_xu K_uu^{-1} (K_uu - Sigma) K_uu^{-1} K_ux'.
    """
    model = q.model
    L_uu, _ = _linalg.chol_jitter(model.K_uu)
    w = _linalg.chol_solve(L_uu, q.mu)  # K_uu^{-1} mu
    mid = model.K_uu - q.Sigma

    def mean_fn(xs):
        return _cross_to_features(model, xs) @ w

    def cov_fn(xs, ys):
        Ba = _linalg.chol_solve(L_uu, _cross_to_features(model, xs).T)
        Bb = _linalg.chol_solve(L_uu, _cross_to_features(model, ys).T)
        return _prior_cov(model, xs, ys) - Ba.T @ (mid @ Bb)

    query = np.atleast_1d(np.asarray(query, dtype=float))
    return GaussianPosterior(query, mean_fn(query), cov_fn(query, query),
                             mean_fn, cov_fn)


def _woodbury_parts(model: InducingModel):
    L_uu, _ = _linalg.chol_jitter(model.K_uu)
    W = _linalg.solve_lower(L_uu, model.K_uf)  # m x n, Q_ff = W'W
    G = W @ W.T
    return L_uu, W, G


def elbo_profile(model: InducingModel, y: np.ndarray
                 ) -> Callable[[float], float]:
    """Collapsed objective as a cheap function of the noise variance.

    The O(m^2 n) work (feature whitening and the m x m Gram) happens once;
    each call then costs O(m^3). Used both for fixed-noise evaluation and
    for profiling out sigma^2 during selection.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    _, W, G = _woodbury_parts(model)
    wy = W @ y
    yty = float(y @ y)
    kff_sum = float(np.sum(model.kff_diag))
    tr_G = float(np.trace(G))
    m = model.m
    eye = np.eye(m)

    def value(sigma_sq: float) -> float:
        if not sigma_sq > 0:
            raise ValueError("sigma_sq must be positive")
        M = sigma_sq * eye + G
        L_M, _ = _linalg.chol_jitter(M)
        z = _linalg.solve_lower(L_M, wy)
        quad = (yty - float(z @ z)) / sigma_sq
        logdet = _linalg.logdet_from_chol(L_M) + (n - m) * np.log(sigma_sq)
        fit = -0.5 * (n * np.log(2.0 * np.pi) + logdet + quad)
        penalty = 0.5 * (kff_sum - tr_G) / sigma_sq
        return fit - penalty

    return value


def elbo_lambda(model: InducingModel, data: Dataset) -> float:
    """Collapsed variational objective at the dataset's noise variance."""
    if data.n != model.n:
        raise ValueError("model was built for a different design")
    return elbo_profile(model, data.y)(data.sigma_sq)


def elbo_at(q: VariationalGP, data: Dataset) -> float:
    """Uncollapsed objective at an arbitrary q(u) = N(mu, Sigma).

    Expected log-likelihood under the induced law of f at the design minus
    KL(q(u) || prior over u). Coincides with :func:`elbo_lambda` when
    (mu, Sigma) come from :func:`titsias_fit`.
    """
    model = q.model
    if data.n != model.n:
        raise ValueError("model was built for a different design")
    s2 = data.sigma_sq
    n = data.n
    L_uu, W, G = _woodbury_parts(model)
    v = _linalg.chol_solve(L_uu, q.mu)  # K_uu^{-1} mu
    m_f = model.K_uf.T @ v
    resid = data.y - m_f
    rss = float(resid @ resid)
    tr_residual = float(np.sum(model.kff_diag)) - float(np.trace(G))
    C = _linalg.chol_solve(L_uu, model.K_uf)  # K_uu^{-1} K_uf
    CCt = C @ C.T
    tr_smear = float(np.sum(q.Sigma * CCt))
    L_S, _ = _linalg.chol_jitter(q.Sigma)
    S1 = _linalg.chol_solve(L_uu, q.Sigma)
    kl = 0.5 * (
        float(np.trace(S1))
        + float(q.mu @ v)
        - model.m
        + _linalg.logdet_from_chol(L_uu)
        - _linalg.logdet_from_chol(L_S)
    )
    exp_lik = (
        -0.5 * n * np.log(2.0 * np.pi * s2)
        - 0.5 * (rss + tr_residual + tr_smear) / s2
    )
    return exp_lik - kl


def kl_to_posterior(q: VariationalGP, data: Dataset,
                    kernel: KernelSpec) -> float:
    """KL divergence from q's process law to the exact posterior.

    Computed through the variational gap identity
    log_evidence - ELBO(q); non-negative up to roundoff. Reference-scale
    only (n <= 500): the evidence side is O(n^3).
    """
    if data.n > 500:
        raise ValueError("kl_to_posterior is a reference path; n must be <= 500")
    return log_evidence(kernel, data) - elbo_at(q, data)
