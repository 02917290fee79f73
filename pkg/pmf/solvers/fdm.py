# fdm.py
"""Explicit finite-difference Fokker-Planck solver on the moving grid.

The grid follows the drift (ξ' = Aξ), so each step only applies the
trace(A) scaling and the central-difference diffusion stencil with zero
(Dirichlet) ghost cells.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, toeplitz
from scipy.ndimage import correlate1d

from pmf.dynamics import CtModel, is_diagonal
from pmf.grid import PMD, MovingGrid, normalize, transform_grid

logger = logging.getLogger(__name__)

LAPLACE_STENCIL = np.array([1.0, -2.0, 1.0])


@dataclass(frozen=True)
class TridiagSpec:
    """Per-step tridiagonal transition: a off the diagonal, b on it."""
    a: float
    b: float
    N: int

    @property
    def stable(self) -> bool:
        return self.b >= 0

    @classmethod
    def for_axis(cls, q: float, spacing: float, trace_a: float, dt: float, N: int) -> "TridiagSpec":
        a = q * dt / (2 * spacing ** 2)
        return cls(a=a, b=1.0 - 2 * a - dt * trace_a, N=N)


def require_diagonal_q(m: CtModel) -> np.ndarray:
    if not is_diagonal(m.Q):
        raise ValueError("grid solvers need a diagonal diffusion matrix; diagonalize the model first")
    return np.diagonal(m.Q)


def diffusion_rates(m: CtModel, g: MovingGrid) -> np.ndarray:
    return np.diagonal(m.Q) / g.spacing ** 2


def max_stable_dt(m: CtModel, g: MovingGrid) -> float:
    """Largest explicit step keeping the centre weight 1 - dt·(Σ Q_mm/δ_m² + trace(A)) nonnegative."""
    rate = diffusion_rates(m, g).sum() + m.trace_a
    return 1.0 / rate if rate > 0 else np.inf


def default_substeps(m: CtModel, g: MovingGrid, tau: float, safety: float = 0.5) -> int:
    """Smallest l with tau/l within safety times the tightest admissible step over the interval."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    end = transform_grid(g, expm(m.A * tau))
    dt_max = min(max_stable_dt(m, g), max_stable_dt(m, end))
    if not np.isfinite(dt_max):
        return 1
    l = max(1, math.ceil(tau / (safety * dt_max)))
    logger.debug(f"Stability needs {l} substeps over tau={tau:g} (dt_max={dt_max:.3g})")
    return l


def fdm_step(p: PMD, m: CtModel, dt: float) -> PMD:
    """
    One explicit Euler step of the diffusion and trace terms

    Args:
        p: weights on the grid already advanced for this step
        m: model with diagonal Q
        dt: step length

    Returns:
        Unnormalized PMD on the same grid
    """
    q = require_diagonal_q(m)
    spacing = p.grid.spacing
    dt_max = max_stable_dt(m, p.grid)
    if dt > dt_max * (1 + 1e-12):
        axis = int(np.argmax(diffusion_rates(m, p.grid)))
        raise ValueError(
            f"explicit step dt={dt:.6g} unstable on axis {axis}; max admissible dt is {dt_max:.6g}"
        )

    w = p.weights
    out = w * (1.0 - dt * m.trace_a)
    for axis in range(p.grid.n_x):
        if q[axis] == 0:
            continue
        a = q[axis] * dt / (2 * spacing[axis] ** 2)
        out = out + a * correlate1d(w, LAPLACE_STENCIL, axis=axis, mode="constant", cval=0.0)
    return PMD(weights=out, grid=p.grid)


def build_fdiff(spec: TridiagSpec) -> np.ndarray:
    column = np.zeros(spec.N)
    column[0] = spec.b
    if spec.N > 1:
        column[1] = spec.a
    return toeplitz(column)


def tpm_product(m: CtModel, g: MovingGrid, t_k: float, l: int, dt: float) -> np.ndarray:
    """
    Dense transition matrix over l steps for a 1D model

    The grid at t_k is advanced before each factor, so the n-th factor uses
    the spacing at t_k + n·dt. t_k only labels the interval for LTI models.
    """
    if m.n_x != 1:
        raise ValueError("the dense transition product is defined for 1D models only")
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    phi = expm(m.A * dt)
    q = float(m.Q[0, 0])
    T = np.eye(g.N_pa)
    for _ in range(l):
        g = transform_grid(g, phi)
        spec = TridiagSpec.for_axis(q, float(g.spacing[0]), m.trace_a, dt, g.N_pa)
        T = build_fdiff(spec) @ T
    return T


def fdm_predict(p: PMD, m: CtModel, tau: float, l: int) -> PMD:
    """l alternations of grid advance and fdm_step over tau, then normalize."""
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    dt = tau / l
    phi = expm(m.A * dt)
    for _ in range(l):
        p = PMD(weights=p.weights, grid=transform_grid(p.grid, phi))
        p = fdm_step(p, m, dt)
    return normalize(p)
