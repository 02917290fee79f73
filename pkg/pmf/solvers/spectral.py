# spectral.py
"""Spectral-differentiation Fokker-Planck solver.

Weights are transformed once per prediction, the per-step semi-implicit
Euler factors are accumulated as a tensor Ψ in the frequency domain, and
the result is transformed back once.
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.fft
from scipy.linalg import expm

from pmf.dynamics import CtModel
from pmf.grid import PMD, MovingGrid, normalize, transform_grid
from pmf.solvers.fdm import require_diagonal_q

logger = logging.getLogger(__name__)

# Relative imaginary residue tolerated when returning to real weights
IMAG_TOL = 1e-10


@dataclass(frozen=True)
class FreqPMD:
    coeffs: np.ndarray
    grid: MovingGrid


@dataclass(frozen=True)
class WaveNumbers:
    """Second-derivative multipliers c2 per axis, in FFT output order."""
    c2: Tuple[np.ndarray, ...]
    L: np.ndarray


def _integer_wavenumbers(N_pa: int) -> np.ndarray:
    if N_pa % 2:
        raise ValueError(f"N_pa must be even, got {N_pa}")
    # 0, 1, ..., N/2-1, -N/2, ..., -1
    return scipy.fft.fftfreq(N_pa, d=1.0 / N_pa)


def second_deriv_coeffs(N_pa: int, L: float) -> np.ndarray:
    """c2[s] = -((2π/L)·k_s)², Nyquist entry kept."""
    if L <= 0:
        raise ValueError(f"L must be positive, got {L}")
    k = _integer_wavenumbers(N_pa)
    return -((2 * np.pi / L) * k) ** 2


def first_deriv_coeffs(N_pa: int, L: float) -> np.ndarray:
    """i·2πk/L with the Nyquist entry zeroed so real input stays real."""
    if L <= 0:
        raise ValueError(f"L must be positive, got {L}")
    k = _integer_wavenumbers(N_pa)
    k[N_pa // 2] = 0.0
    return 1j * (2 * np.pi / L) * k


def wave_numbers(g: MovingGrid) -> WaveNumbers:
    L = g.extent
    return WaveNumbers(c2=tuple(second_deriv_coeffs(g.N_pa, float(Lm)) for Lm in L), L=L)


def dft_forward(p: PMD) -> FreqPMD:
    """Per-axis DFT with the 1/N factor on the forward transform."""
    if p.grid.N_pa % 2:
        raise ValueError(f"N_pa must be even, got {p.grid.N_pa}")
    return FreqPMD(coeffs=scipy.fft.fftn(p.weights, norm="forward"), grid=p.grid)


def _to_real(values: np.ndarray) -> np.ndarray:
    scale = max(float(np.abs(values.real).max(initial=0.0)), np.finfo(float).tiny)
    residue = float(np.abs(values.imag).max(initial=0.0))
    if residue > IMAG_TOL * scale:
        raise ValueError(f"inverse transform left an imaginary residue of {residue:.3g} (relative {residue / scale:.3g})")
    return values.real


def dft_inverse(f: FreqPMD) -> PMD:
    values = scipy.fft.ifftn(f.coeffs, norm="forward")
    return PMD(weights=_to_real(values), grid=f.grid)


def _along_axis(coeffs_1d: np.ndarray, ndim: int, axis: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = coeffs_1d.size
    return coeffs_1d.reshape(shape)


def _spectral_derivative(p: PMD, axis: int, multiplier: np.ndarray) -> PMD:
    w = p.weights
    coeffs = scipy.fft.fft(w, axis=axis, norm="forward")
    values = scipy.fft.ifft(coeffs * _along_axis(multiplier, w.ndim, axis), axis=axis, norm="forward")
    return PMD(weights=_to_real(values), grid=p.grid)


def spectral_derivative2(p: PMD, axis: int) -> PMD:
    """Second derivative along one grid axis; the result is not a density."""
    L = float(p.grid.extent[axis])
    return _spectral_derivative(p, axis, second_deriv_coeffs(p.grid.N_pa, L))


def spectral_derivative1(p: PMD, axis: int) -> PMD:
    L = float(p.grid.extent[axis])
    return _spectral_derivative(p, axis, first_deriv_coeffs(p.grid.N_pa, L))


def psi_step(w: WaveNumbers, Qdiag, dt: float) -> np.ndarray:
    """
    Semi-implicit diffusion factor for one step

    Args:
        w: wavenumbers of every axis
        Qdiag: diagonal of the diffusion matrix
        dt: step length

    Returns:
        ψ = 1 / (1 - 0.5·dt·Σ_m c2_m·Q_mm), broadcast over all axes
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    Qdiag = np.atleast_1d(np.asarray(Qdiag, dtype=float))
    if Qdiag.size != len(w.c2):
        raise ValueError(f"Q diagonal has {Qdiag.size} entries for {len(w.c2)} axes")
    ndim = len(w.c2)
    denom = np.ones([c.size for c in w.c2])
    for axis, (c2, q) in enumerate(zip(w.c2, Qdiag)):
        denom = denom - 0.5 * dt * q * _along_axis(c2, ndim, axis)
    return 1.0 / denom


def spectral_transition(g: MovingGrid, m: CtModel, tau: float, l: int) -> Tuple[np.ndarray, float, MovingGrid]:
    """
    Accumulated Ψ over l steps with the grid advanced before each step

    Returns:
        (Ψ, growth = (1 + Δt·trace(A))^l, grid at the end of the interval)
    """
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    q = require_diagonal_q(m)
    dt = tau / l
    if 1.0 + dt * m.trace_a <= 0:
        raise ValueError(
            f"spectral step dt={dt:.6g} flips the sign of the weights; max admissible dt is {-1.0 / m.trace_a:.6g}"
        )
    phi = expm(m.A * dt)
    psi = np.ones(g.shape)
    for _ in range(l):
        g = transform_grid(g, phi)
        psi *= psi_step(wave_numbers(g), q, dt)
    growth = (1.0 + dt * m.trace_a) ** l
    return psi, growth, g


def spectral_predict(p: PMD, m: CtModel, tau: float, l: int) -> PMD:
    """Prediction over tau with one forward and one inverse transform."""
    f = dft_forward(p)
    psi, growth, g = spectral_transition(p.grid, m, tau, l)
    predicted = dft_inverse(FreqPMD(coeffs=f.coeffs * (psi * growth), grid=g))
    # interpolation ripples near the boundary can dip below zero
    return normalize(PMD(weights=np.clip(predicted.weights, 0.0, None), grid=g))
