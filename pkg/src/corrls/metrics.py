"""Performance measures and the deviation-rate curve used for scaling checks."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["ree", "false_positives", "true_positive_rate", "column_norm_error", "rate_bound_en"]

#: covering-number base for the middle term of the rate curve
RATE_D = 100.0


def ree(beta_hat, beta0):
    """Relative estimation error ||beta_hat - beta0||_2 / ||beta0||_2."""
    beta_hat = np.asarray(beta_hat, dtype=float).ravel()
    beta0 = np.asarray(beta0, dtype=float).ravel()
    denom = np.linalg.norm(beta0)
    if denom == 0:
        raise ValueError("beta0 is zero; relative error undefined")
    return float(np.linalg.norm(beta_hat - beta0) / denom)


def false_positives(T_hat, T):
    """Number of selected indices outside the true support."""
    return len(set(T_hat) - set(T))


def true_positive_rate(T_hat, T):
    T = set(T)
    if not T:
        raise ValueError("true support is empty")
    return len(set(T_hat) & T) / len(T)


def column_norm_error(A, B):
    """Max over columns of the l2 norm of A - B."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise ValueError("shape mismatch")
    return float(np.max(np.sqrt(np.sum((A - B) ** 2, axis=0))))


def rate_bound_en(m, s, p, n, c3):
    """Deviation-rate curve sqrt(m log p / n) + sqrt((m+s) log D / n)
    + sqrt((m + s + log(1/c3)) / n), with D = 100.

    Diagnostic only; never used inside the estimators.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 < c3 < 1:
        raise ValueError("c3 must lie in (0, 1)")
    return (
        math.sqrt(m * math.log(p) / n)
        + math.sqrt((m + s) * math.log(RATE_D) / n)
        + math.sqrt((m + s + math.log(1.0 / c3)) / n)
    )
