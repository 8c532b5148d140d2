"""Cholesky with escalating diagonal jitter.

Policy used everywhere a factorization might meet a semidefinite matrix:
start at 1e-10 * mean(diag), escalate by factors of 10 up to
1e-4 * mean(diag), then give up with :class:`ConditioningError`.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import ConditioningError

_JITTER_START = 1e-10
_JITTER_CAP = 1e-4


def chol_jitter(mat: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``mat``, jittering the diagonal if needed.

    Returns ``(L, jitter)`` with ``L @ L.T`` equal to ``mat + jitter * I``.
    Raises :class:`ConditioningError` once the jitter cap is exceeded.
    """
    mat = np.asarray(mat, dtype=float)
    if not np.isfinite(mat).all():
        raise ConditioningError("matrix has non-finite entries; cannot factor")
    n = mat.shape[0]
    scale = float(np.trace(mat)) / max(n, 1)
    try:
        return scipy.linalg.cholesky(mat, lower=True, check_finite=False), 0.0
    except scipy.linalg.LinAlgError:
        pass
    jitter = _JITTER_START * scale
    cap = _JITTER_CAP * scale
    while jitter <= cap * (1 + 1e-12):
        try:
            L = scipy.linalg.cholesky(
                mat + jitter * np.eye(n), lower=True, check_finite=False
            )
            return L, jitter
        except scipy.linalg.LinAlgError:
            jitter *= 10.0
    raise ConditioningError(
        f"Cholesky failed for {n}x{n} matrix even with jitter {cap:.3e}"
    )


def solve_lower(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``L z = b`` for lower-triangular ``L``."""
    return scipy.linalg.solve_triangular(L, b, lower=True)


def chol_solve(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``(L L^T) z = b`` given the lower factor ``L``."""
    return scipy.linalg.cho_solve((L, True), b)


def logdet_from_chol(L: np.ndarray) -> float:
    """log det of the factored matrix, i.e. 2 * sum(log diag(L))."""
    return 2.0 * float(np.sum(np.log(np.diag(L))))
