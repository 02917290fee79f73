# grid.py
"""Moving equidistant grid and the point-mass density (PMD) defined on it.

Weight tensors use C ordering with axis m of the tensor indexing grid axis m,
so `grid.points()` row i corresponds to `weights.ravel()[i]`.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.ndimage import map_coordinates

from pmf.dynamics import DiscreteModel

logger = logging.getLogger(__name__)

# Fractional indices this close to an integer are treated as lattice nodes
SNAP_TOL = 1e-9


@dataclass(frozen=True)
class MovingGrid:
    """
    Equidistant lattice with an affine physical placement.

    Physical point j = center + B @ offsets(j), where offsets are the
    canonical coordinates (j_m - (N_pa - 1)/2) * delta0[m].
    """
    N_pa: int
    B: np.ndarray
    center: np.ndarray
    delta0: Optional[np.ndarray] = None

    def __post_init__(self):
        B = np.array(self.B, dtype=float, ndmin=2)
        center = np.array(self.center, dtype=float, ndmin=1)
        n = center.shape[0]
        if B.shape != (n, n):
            raise ValueError(f"B must be {n}x{n}, got {B.shape}")
        if self.N_pa < 4 or self.N_pa % 2:
            raise ValueError(f"N_pa must be even and >= 4, got {self.N_pa}")
        delta0 = np.ones(n) if self.delta0 is None else np.array(self.delta0, dtype=float, ndmin=1)
        for arr in (B, center, delta0):
            arr.setflags(write=False)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "delta0", delta0)

    @property
    def n_x(self) -> int:
        return self.center.shape[0]

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.N_pa,) * self.n_x

    @property
    def size(self) -> int:
        return self.N_pa ** self.n_x

    @cached_property
    def offsets(self) -> np.ndarray:
        """(n_x, N_pa) canonical coordinates per axis."""
        j = np.arange(self.N_pa) - (self.N_pa - 1) / 2
        return self.delta0[:, None] * j[None, :]

    @cached_property
    def spacing(self) -> np.ndarray:
        """Physical spacing per axis: length of the m-th column of B times delta0."""
        return np.linalg.norm(self.B, axis=0) * self.delta0

    @property
    def extent(self) -> np.ndarray:
        return self.N_pa * self.spacing

    @cached_property
    def cell_volume(self) -> float:
        return float(abs(np.linalg.det(self.B)) * np.prod(self.delta0))

    def points(self) -> np.ndarray:
        """All physical points as an (N_pa**n_x, n_x) array."""
        mesh = np.meshgrid(*self.offsets, indexing="ij")
        canon = np.stack([c.ravel() for c in mesh], axis=1)
        return self.center + canon @ self.B.T

    def fractional_index(self, x: np.ndarray) -> np.ndarray:
        """Map physical points (M, n_x) to fractional lattice indices (M, n_x)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        canon = np.linalg.solve(self.B, (x - self.center).T).T
        f = canon / self.delta0 + (self.N_pa - 1) / 2
        nearest = np.rint(f)
        snap = np.abs(f - nearest) < SNAP_TOL
        f[snap] = nearest[snap]
        return f


@dataclass(frozen=True)
class PMD:
    """Point-mass density: weight tensor over a MovingGrid."""
    weights: np.ndarray
    grid: MovingGrid
    normalized: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.size != self.grid.size:
            raise ValueError(f"weights have {w.size} entries, grid has {self.grid.size}")
        w = w.reshape(self.grid.shape)
        object.__setattr__(self, "weights", w)

    @property
    def mass(self) -> float:
        return float(self.weights.sum() * self.grid.cell_volume)


def build_grid(mean, cov, N_pa: int, k_sigma: float) -> MovingGrid:
    """
    Axis-aligned grid centred at mean spanning ±k_sigma standard deviations

    Args:
        mean: grid centre
        cov: SPD covariance whose diagonal sets the per-axis span
        N_pa: points per axis (even)
        k_sigma: half-span in standard deviations

    Returns:
        MovingGrid with diagonal B = diag(2·k_sigma·σ / N_pa)
    """
    if k_sigma <= 0:
        raise ValueError(f"k_sigma must be positive, got {k_sigma}")
    if N_pa % 2:
        raise ValueError(f"N_pa must be even, got {N_pa}")
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape != (mean.size, mean.size):
        raise ValueError(f"covariance shape {cov.shape} does not match mean of size {mean.size}")
    try:
        np.linalg.cholesky(0.5 * (cov + cov.T))
    except np.linalg.LinAlgError:
        raise ValueError("covariance is not symmetric positive definite")
    sigma = np.sqrt(np.diagonal(cov))
    return MovingGrid(N_pa=N_pa, B=np.diag(2 * k_sigma * sigma / N_pa), center=mean)


def transform_grid(g: MovingGrid, phi: np.ndarray) -> MovingGrid:
    return MovingGrid(N_pa=g.N_pa, B=phi @ g.B, center=phi @ g.center, delta0=g.delta0)


def advance_grid(g: MovingGrid, A, dt: float) -> MovingGrid:
    """Move every grid point along ξ' = Aξ for dt (exact, via the matrix exponential)."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return transform_grid(g, expm(np.asarray(A, dtype=float) * dt))


def normalize(p: PMD) -> PMD:
    if np.any(p.weights < 0):
        raise ValueError("cannot normalize negative weights")
    mass = p.mass
    if not mass > 0:
        raise ValueError("cannot normalize all-zero weights")
    return PMD(weights=p.weights / mass, grid=p.grid, normalized=True)


def pmd_from_pdf(pdf: Callable[[np.ndarray], np.ndarray], g: MovingGrid) -> PMD:
    """Sample pdf at the physical grid points; pdf maps (M, n_x) to (M,)."""
    values = np.asarray(pdf(g.points()), dtype=float).reshape(g.shape)
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise ValueError("density values must be finite and nonnegative")
    if not values.any():
        raise ValueError("density not supported on grid")
    return normalize(PMD(weights=values, grid=g))


def moments(p: PMD) -> Tuple[np.ndarray, np.ndarray]:
    pts = p.grid.points()
    mass = p.weights.ravel() * p.grid.cell_volume
    mean = pts.T @ mass
    centred = pts - mean
    cov = (centred * mass[:, None]).T @ centred
    return mean, 0.5 * (cov + cov.T)


def eval_pmd(p: PMD, x):
    """
    Piece-wise constant density value at x (selection function).

    A point on a boundary between two cells takes the lower-index cell.
    Accepts a single point (n_x,) or an array (M, n_x).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    f = p.grid.fractional_index(x.reshape(-1, p.grid.n_x))
    N = p.grid.N_pa
    inside = np.all((f >= -0.5) & (f <= N - 0.5), axis=1)
    idx = np.clip(np.ceil(f - 0.5), 0, N - 1).astype(int)
    values = np.where(inside, p.weights[tuple(idx.T)], 0.0)
    return float(values[0]) if single else values


def interpolate_weights(p: PMD, g_new: MovingGrid) -> np.ndarray:
    """Multilinear interpolation of p's weights at g_new's points, 0 outside p's lattice."""
    f = p.grid.fractional_index(g_new.points())
    values = map_coordinates(p.weights, f.T, order=1, mode="constant", cval=0.0)
    return np.clip(values, 0.0, None).reshape(g_new.shape)


def regrid(p: PMD, g_new: MovingGrid) -> PMD:
    if g_new.n_x != p.grid.n_x:
        raise ValueError(f"cannot regrid a {p.grid.n_x}-D density onto a {g_new.n_x}-D grid")
    values = interpolate_weights(p, g_new)
    if not values.any():
        raise ValueError("new grid entirely outside old support")
    return normalize(PMD(weights=values, grid=g_new))


def design_covariance(cov, dm: DiscreteModel, previous: Optional[MovingGrid] = None) -> np.ndarray:
    """
    Covariance the next grid is designed for

    Args:
        cov: filtering covariance at the redesign time
        dm: discrete model over the coming measurement interval
        previous: grid being replaced; its spacing floors the per-axis variance

    Returns:
        P + F⁻¹ Qd F⁻ᵀ, so the grid carried forward by F covers F P Fᵀ + Qd
    """
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    back = np.linalg.solve(dm.F, np.linalg.solve(dm.F, dm.Qd).T)
    design = cov + 0.5 * (back + back.T)
    if previous is not None:
        floor = previous.spacing ** 2
        d = np.diagonal(design)
        lifted = np.maximum(d, floor)
        scale = np.sqrt(lifted / np.where(d > 0, d, 1.0))
        scale[d <= 0] = 1.0
        design = design * np.outer(scale, scale)
        design[np.diag_indices_from(design)] = lifted
    return design
