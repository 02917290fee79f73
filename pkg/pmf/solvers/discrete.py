# discrete.py
"""Point-mass prediction with the exactly discretized model.

The grid is carried by F, so the transition kernel between cells depends
only on the index difference and the prediction is a convolution.
"""
import logging

import numpy as np
from scipy.signal import fftconvolve
from scipy.stats import multivariate_normal

from pmf.dynamics import DiscreteModel
from pmf.grid import PMD, normalize, transform_grid

logger = logging.getLogger(__name__)


def transition_kernel(p: PMD, dm: DiscreteModel) -> np.ndarray:
    """N(F·B·d; 0, Qd) over index differences d in [-(N-1), N-1] per axis."""
    g = p.grid
    try:
        noise = multivariate_normal(mean=np.zeros(g.n_x), cov=dm.Qd)
    except (np.linalg.LinAlgError, ValueError):
        raise ValueError("discrete prediction needs a nonsingular Qd")
    d = np.arange(-(g.N_pa - 1), g.N_pa)
    mesh = np.meshgrid(*([d] * g.n_x), indexing="ij")
    steps = np.stack([c.ravel() for c in mesh], axis=1) * g.delta0
    kernel = noise.pdf(steps @ (dm.F @ g.B).T)
    return np.atleast_1d(kernel).reshape((2 * g.N_pa - 1,) * g.n_x)


def discrete_predict(p: PMD, dm: DiscreteModel) -> PMD:
    kernel = transition_kernel(p, dm)
    predicted = fftconvolve(p.weights, kernel, mode="same") * p.grid.cell_volume
    g = transform_grid(p.grid, dm.F)
    return normalize(PMD(weights=np.clip(predicted, 0.0, None), grid=g))
