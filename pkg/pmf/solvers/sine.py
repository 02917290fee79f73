# sine.py
"""Efficient form of the finite-difference prediction.

The per-step tridiagonal Toeplitz matrices share the sine eigenvectors, so
the l-step product is diagonal in the DST-I basis and the prediction costs
two transforms per axis.
"""
import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import scipy.fft
from scipy.linalg import expm

from pmf.dynamics import CtModel
from pmf.grid import PMD, MovingGrid, normalize, transform_grid
from pmf.solvers.fdm import TridiagSpec, require_diagonal_q

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EigenSpec:
    lambdas: np.ndarray
    accumulated: np.ndarray


def _angles(N: int) -> np.ndarray:
    return np.arange(1, N + 1) * np.pi / (N + 1)


def fdiff_eigvals(spec: TridiagSpec) -> np.ndarray:
    return spec.b + 2 * spec.a * np.cos(_angles(spec.N))


def fdiff_eigvecs(N: int) -> np.ndarray:
    """R[i-1, j-1] = sin(i·j·π/(N+1)); (2/(N+1))·R·R is the identity."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    i = np.arange(1, N + 1)
    return np.sin(np.outer(i, i) * np.pi / (N + 1))


def lambda_product(m: CtModel, g: MovingGrid, t_k: float, l: int, dt: float, axis: int = 0) -> EigenSpec:
    """
    Eigenvalues of the l-step product along one axis

    Args:
        m: model with diagonal Q
        g: grid at t_k
        t_k: start of the interval (unused for time-invariant models)
        l: number of steps
        dt: step length
        axis: grid axis whose spacing drives the steps

    Returns:
        EigenSpec with the last step's eigenvalues and the entrywise product
    """
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    q = require_diagonal_q(m)[axis]
    phi = expm(m.A * dt)
    accumulated = np.ones(g.N_pa)
    for _ in range(l):
        g = transform_grid(g, phi)
        lambdas = fdiff_eigvals(TridiagSpec.for_axis(q, float(g.spacing[axis]), m.trace_a, dt, g.N_pa))
        accumulated = accumulated * lambdas
    return EigenSpec(lambdas=lambdas, accumulated=accumulated)


def dst1(v, axis: int = -1) -> np.ndarray:
    """Unnormalized DST-I: out[j-1] = Σ_i v[i-1]·sin(i·j·π/(N+1))."""
    v = np.asarray(v, dtype=float)
    if v.shape[axis] == 1:
        return v.copy()
    # scipy's type-I kernel carries a factor 2
    return scipy.fft.dst(v, type=1, axis=axis) / 2


def fst_predict(weights, spec: Union[EigenSpec, Sequence[EigenSpec]]) -> np.ndarray:
    """
    Apply the diagonalized transition S(Λ ⊙ S(P)) with the 2/(N+1) scaling.

    A single EigenSpec acts on a vector; a sequence of specs acts on a
    tensor axis by axis.
    """
    weights = np.asarray(weights, dtype=float)
    specs = [spec] if isinstance(spec, EigenSpec) else list(spec)
    if len(specs) != weights.ndim:
        raise ValueError(f"need one eigen spec per axis, got {len(specs)} for {weights.ndim} axes")
    out = weights
    for axis, s in enumerate(specs):
        N = out.shape[axis]
        if s.accumulated.shape != (N,):
            raise ValueError(f"eigenvalues of length {s.accumulated.size} do not match axis {axis} of length {N}")
        shape = [1] * out.ndim
        shape[axis] = N
        out = (2.0 / (N + 1)) * dst1(s.accumulated.reshape(shape) * dst1(out, axis=axis), axis=axis)
    return out


def eigen_tensor(m: CtModel, g: MovingGrid, l: int, dt: float) -> tuple:
    """Accumulated eigenvalues of the multi-D stencil and the grid after l steps."""
    q = require_diagonal_q(m)
    phi = expm(m.A * dt)
    cos_terms = np.cos(_angles(g.N_pa)) - 1.0
    acc = np.ones(g.shape)
    for _ in range(l):
        g = transform_grid(g, phi)
        lam = np.full(g.shape, 1.0 - dt * m.trace_a)
        for axis in range(g.n_x):
            a = q[axis] * dt / (2 * g.spacing[axis] ** 2)
            shape = [1] * g.n_x
            shape[axis] = g.N_pa
            lam = lam + 2 * a * cos_terms.reshape(shape)
        acc *= lam
    return acc, g


def sine_predict(p: PMD, m: CtModel, tau: float, l: int) -> PMD:
    """Finite-difference prediction over tau evaluated in the sine basis."""
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    acc, g = eigen_tensor(m, p.grid, l, tau / l)
    if acc.min() < 0:
        logger.warning("Sine prediction with unstable step; eigenvalue product has negative entries")
    coeffs = p.weights
    for axis in range(coeffs.ndim):
        coeffs = dst1(coeffs, axis=axis)
    coeffs = coeffs * acc
    for axis in range(coeffs.ndim):
        coeffs = dst1(coeffs, axis=axis)
    out = coeffs * (2.0 / (g.N_pa + 1)) ** g.n_x
    return normalize(PMD(weights=np.clip(out, 0.0, None), grid=g))
