# terrain.py
"""Synthetic terrain elevation maps and the altimeter measurement function."""
import logging
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
import scipy.fft
from scipy.interpolate import RegularGridInterpolator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TerrainMap:
    """
    Altitude table over a regular lattice with bilinear interpolation.

    altitudes[i, j] is the altitude at (origin[0] + i*cell[0], origin[1] + j*cell[1]).
    """
    origin: Tuple[float, float]
    cell: Tuple[float, float]
    altitudes: np.ndarray
    _interp: RegularGridInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        alt = np.array(self.altitudes, dtype=float, ndmin=2)
        if alt.ndim != 2 or min(alt.shape) < 2:
            raise ValueError(f"altitudes must be a 2D grid of at least 2x2 nodes, got shape {alt.shape}")
        if not np.all(np.isfinite(alt)):
            raise ValueError("altitudes must be finite")
        if min(self.cell) <= 0:
            raise ValueError(f"cell sizes must be positive, got {self.cell}")
        alt.setflags(write=False)
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "cell", tuple(float(v) for v in self.cell))
        object.__setattr__(self, "altitudes", alt)
        axes = tuple(self.origin[m] + self.cell[m] * np.arange(alt.shape[m]) for m in range(2))
        object.__setattr__(self, "_interp", RegularGridInterpolator(axes, alt, method="linear", bounds_error=True))

    @property
    def upper(self) -> Tuple[float, float]:
        return tuple(self.origin[m] + self.cell[m] * (self.altitudes.shape[m] - 1) for m in range(2))

    def query(self, xy) -> np.ndarray:
        """Altitude at (M, 2) horizontal positions."""
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        try:
            return self._interp(xy)
        except ValueError:
            raise ValueError(
                f"terrain query outside map extent {self.origin} .. {self.upper}"
            )


def synth_terrain(
    seed: int,
    extent: Sequence[Sequence[float]],
    roughness: float,
    cell: float = 5.0,
    correlation_length: float = 60.0,
    slope: float = 3.0,
    base_altitude: float = 300.0,
) -> TerrainMap:
    """
    Fractal heightfield by spectral synthesis

    Args:
        seed: seed of the white-noise field
        extent: ((x_min, y_min), (x_max, y_max)) the map must cover
        roughness: standard deviation of the relief [m]; 0 gives flat terrain
        cell: lattice spacing [m]
        correlation_length: length scale where the spectrum rolls off [m]
        slope: spectral decay exponent
        base_altitude: mean altitude [m]

    Returns:
        TerrainMap covering extent
    """
    lower = np.asarray(extent[0], dtype=float)
    upper = np.asarray(extent[1], dtype=float)
    if np.any(upper <= lower):
        raise ValueError(f"terrain extent must be positive, got {lower} .. {upper}")
    if roughness < 0:
        raise ValueError(f"roughness must be nonnegative, got {roughness}")
    dims = tuple(int(np.ceil((upper[m] - lower[m]) / cell)) + 1 for m in range(2))

    if roughness == 0:
        return TerrainMap(origin=tuple(lower), cell=(cell, cell), altitudes=np.full(dims, base_altitude))

    rng = np.random.default_rng(seed)
    white = scipy.fft.fft2(rng.standard_normal(dims))
    fx = scipy.fft.fftfreq(dims[0], d=cell)
    fy = scipy.fft.fftfreq(dims[1], d=cell)
    freq = np.hypot(fx[:, None], fy[None, :])
    amplitude = (1.0 + (freq * correlation_length) ** 2) ** (-slope / 2)
    amplitude[0, 0] = 0.0
    relief = scipy.fft.ifft2(white * amplitude).real
    relief = relief / relief.std()
    logger.info(f"✓ Synthesized {dims[0]}x{dims[1]} terrain (seed={seed}, roughness={roughness:g} m)")
    return TerrainMap(origin=tuple(lower), cell=(cell, cell), altitudes=base_altitude + roughness * relief)


@dataclass(frozen=True)
class TerrainAltimeter:
    """Measurement function h: terrain altitude below the state's horizontal position."""
    terrain: TerrainMap
    position_index: Tuple[int, int] = (0, 1)
    offset: Tuple[float, float] = (0.0, 0.0)

    def horizontal(self, states) -> np.ndarray:
        states = np.atleast_2d(np.asarray(states, dtype=float))
        return states[:, list(self.position_index)] + np.asarray(self.offset)

    def __call__(self, states) -> np.ndarray:
        return self.terrain.query(self.horizontal(states))
