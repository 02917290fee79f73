# dynamics.py
"""Continuous and discrete stochastic models, diffusion diagonalization and
the measurement noise used by the filters."""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.special import logsumexp
from scipy.stats import norm

logger = logging.getLogger(__name__)


def _frozen(array, ndim: int, name: str) -> np.ndarray:
    arr = np.array(array, dtype=float, ndmin=ndim)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def is_diagonal(matrix: np.ndarray) -> bool:
    return np.count_nonzero(matrix - np.diag(np.diagonal(matrix))) == 0


@dataclass(frozen=True)
class CtModel:
    """Linear SDE dx = A x dt + dw with diffusion (covariance rate) Q."""
    A: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        A = _frozen(self.A, 2, "A")
        Q = _frozen(self.Q, 2, "Q")
        n = A.shape[0]
        if A.shape != (n, n) or Q.shape != (n, n):
            raise ValueError(f"A and Q must be square of equal size, got {A.shape} and {Q.shape}")
        if not np.allclose(Q, Q.T, atol=1e-12):
            raise ValueError("Q must be symmetric")
        if np.linalg.eigvalsh(Q).min() < -1e-12 * max(1.0, np.abs(Q).max()):
            raise ValueError("Q must be positive semidefinite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Q", Q)

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def trace_a(self) -> float:
        return float(np.trace(self.A))


@dataclass(frozen=True)
class DiagonalizedModel:
    base: CtModel
    G: np.ndarray
    Abar: np.ndarray


@dataclass(frozen=True)
class DiscreteModel:
    F: np.ndarray
    Qd: np.ndarray
    Ts: float

    def __post_init__(self):
        if self.Ts <= 0:
            raise ValueError(f"Ts must be positive, got {self.Ts}")
        object.__setattr__(self, "F", _frozen(self.F, 2, "F"))
        object.__setattr__(self, "Qd", _frozen(self.Qd, 2, "Qd"))


@dataclass(frozen=True)
class GaussianMixture:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights, 1, "weights")
        m = _frozen(self.means, 1, "means")
        v = _frozen(self.variances, 1, "variances")
        if not (len(w) == len(m) == len(v)) or len(w) == 0:
            raise ValueError("mixture weights, means and variances must have equal, nonzero length")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must be positive and sum to 1, got {w.tolist()}")
        if np.any(v <= 0):
            raise ValueError("mixture variances must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "variances", v)


@dataclass(frozen=True)
class MeasModel:
    """Scalar measurement z = h(x) + v; h maps an (M, n_x) array to (M,)."""
    h: Callable[[np.ndarray], np.ndarray]
    noise: GaussianMixture
    n_z: int = field(default=1)

    def __post_init__(self):
        if self.n_z != 1:
            raise ValueError(f"only scalar measurements are supported, got n_z={self.n_z}")


def diagonalize(m: CtModel) -> DiagonalizedModel:
    """
    Factor Q = G Gᵀ and rewrite the drift in x̄ = G⁻¹x coordinates

    Args:
        m: model with strictly positive definite diffusion

    Returns:
        DiagonalizedModel with identity diffusion and Abar = G⁻¹ A G
    """
    Q = m.Q
    if is_diagonal(Q):
        d = np.diagonal(Q)
        if np.any(d <= 0):
            raise ValueError("diffusion not diagonalizable")
        G = np.diag(np.sqrt(d))
    else:
        try:
            G = np.linalg.cholesky(Q)
        except np.linalg.LinAlgError:
            raise ValueError("diffusion not diagonalizable")
    Abar = np.linalg.solve(G, m.A @ G)
    return DiagonalizedModel(base=CtModel(A=Abar, Q=np.eye(m.n_x)), G=G, Abar=Abar)


def map_moments_back(mean_bar, cov_bar, G, congruent: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    Map moments from diagonalized coordinates back to the model state.

    The default evaluates cov = G cov̄ G⁻¹; `congruent=True` gives G cov̄ Gᵀ.
    Both agree for orthogonal G.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    mean_bar = np.atleast_1d(np.asarray(mean_bar, dtype=float))
    cov_bar = np.atleast_2d(np.asarray(cov_bar, dtype=float))
    if G.shape[0] != G.shape[1] or G.shape[0] != mean_bar.shape[0] or cov_bar.shape != G.shape:
        raise ValueError("inconsistent dimensions for moment mapping")
    if abs(np.linalg.det(G)) < 1e-300 or np.linalg.cond(G) > 1e14:
        raise ValueError("G is singular")
    mean = G @ mean_bar
    if congruent:
        cov = G @ cov_bar @ G.T
    else:
        cov = G @ cov_bar @ np.linalg.inv(G)
    return mean, cov


def coordinated_turn(alpha: float) -> CtModel:
    """Coordinated turn with known rate alpha [rad/s]; state [p_x, v_x, p_y, v_y]."""
    A = np.zeros((4, 4))
    A[0, 1] = 1.0
    A[1, 3] = -alpha
    A[2, 3] = 1.0
    A[3, 1] = alpha
    noise_input = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    return CtModel(A=A, Q=noise_input @ noise_input.T)


def planar_turn(alpha: float, q: float) -> CtModel:
    """Position-only turn about the origin with velocity folded into diffusion q."""
    if q < 0:
        raise ValueError(f"diffusion intensity must be nonnegative, got {q}")
    A = np.array([[0.0, -alpha], [alpha, 0.0]])
    return CtModel(A=A, Q=q * np.eye(2))


def coordinated_turn_transition(alpha: float, Ts: float) -> np.ndarray:
    x = alpha * Ts
    s_over = Ts * np.sinc(x / np.pi)                      # sin(αT)/α
    c_over = 0.5 * alpha * Ts**2 * np.sinc(x / (2 * np.pi))**2  # (1 - cos(αT))/α
    c, s = np.cos(x), np.sin(x)
    return np.array([
        [1.0, s_over, 0.0, -c_over],
        [0.0, c, 0.0, -s],
        [0.0, c_over, 1.0, s_over],
        [0.0, s, 0.0, c],
    ])


def discretize(m: CtModel, Ts: float) -> DiscreteModel:
    """
    Exact discretization of the LTI model over Ts (van Loan construction)

    Args:
        m: continuous model
        Ts: sampling period [s]

    Returns:
        DiscreteModel with F = exp(A Ts) and Qd = ∫ exp(As) Q exp(Aᵀs) ds
    """
    if Ts <= 0:
        raise ValueError(f"Ts must be positive, got {Ts}")
    n = m.n_x
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = -m.A
    M[:n, n:] = m.Q
    M[n:, n:] = m.A.T
    E = expm(M * Ts)
    F = E[n:, n:].T
    Qd = F @ E[:n, n:]
    Qd = 0.5 * (Qd + Qd.T)
    return DiscreteModel(F=F, Qd=Qd, Ts=Ts)


def gm_logpdf(gm: GaussianMixture, v):
    v = np.asarray(v, dtype=float)
    comps = norm.logpdf(v[..., None], loc=gm.means, scale=np.sqrt(gm.variances))
    return logsumexp(comps, axis=-1, b=gm.weights)


def gm_pdf(gm: GaussianMixture, v):
    """Σ_g w_g N(v; mean_g, var_g), elementwise over v."""
    return np.exp(gm_logpdf(gm, v))


def gm_sample(gm: GaussianMixture, rng: np.random.Generator, size: Optional[int] = None):
    idx = rng.choice(len(gm.weights), size=size, p=gm.weights)
    return rng.normal(gm.means[idx], np.sqrt(gm.variances[idx]))


def altimeter_noise() -> GaussianMixture:
    """Altimeter error with an unmapped bridge or tunnel 20 m above the terrain."""
    return GaussianMixture(weights=[0.5, 0.5], means=[0.0, 20.0], variances=[1.0, 1.0])
