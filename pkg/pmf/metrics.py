# metrics.py
"""Monte-Carlo accuracy metrics per state component."""
import numpy as np


def rmse(truth, estimates, j: int) -> float:
    """
    Root-mean-square error of state j over all runs and steps

    Args:
        truth: (M, T+1, n_x) true states
        estimates: (M, T+1, n_x) filtering means
        j: state index

    Returns:
        sqrt(mean over runs and steps of (x_j - x̂_j)²)
    """
    truth = np.asarray(truth, dtype=float)
    estimates = np.asarray(estimates, dtype=float)
    if truth.shape != estimates.shape:
        raise ValueError(f"truth {truth.shape} and estimates {estimates.shape} differ in shape")
    err = truth[..., j] - estimates[..., j]
    return float(np.sqrt(np.mean(err ** 2)))


def astd(covariances, j: int) -> float:
    """Root of the mean filter-reported variance of state j; covariances are (..., n_x, n_x)."""
    diag = np.asarray(covariances, dtype=float)[..., j, j]
    if np.any(diag < 0):
        raise ValueError(f"negative variance on state {j}")
    return float(np.sqrt(np.mean(diag)))
