# filters.py
"""Estimation loops: point-mass filter with any time-update solver,
bootstrap particle filter and the Kalman reference."""
import logging
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp
from scipy.stats import multivariate_normal

from pmf.dynamics import (
    CtModel,
    DiscreteModel,
    MeasModel,
    diagonalize,
    discretize,
    gm_logpdf,
    is_diagonal,
    map_moments_back,
)
from pmf.grid import PMD, build_grid, design_covariance, moments, normalize, pmd_from_pdf, regrid
from pmf.solvers.discrete import discrete_predict
from pmf.solvers.fdm import default_substeps, fdm_predict
from pmf.solvers.sine import sine_predict
from pmf.solvers.spectral import spectral_predict

logger = logging.getLogger(__name__)

SOLVERS = ("fdm", "sine", "spectral", "discrete")


@dataclass(frozen=True)
class FilterOutput:
    mean: np.ndarray
    cov: np.ndarray
    loglik: float = 0.0
    wall_time: float = 0.0

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diagonal(self.cov), 0.0, None))


@dataclass(frozen=True)
class PmfConfig:
    """Point-mass filter settings; substeps=None picks the FDM stability count."""
    prior_mean: np.ndarray
    prior_cov: np.ndarray
    Ts: float
    N_pa: int = 64
    k_sigma: float = 4.0
    substeps: Optional[int] = None
    spectral_substeps: int = 10


def measurement_update(p: PMD, mm: MeasModel, z: float) -> Tuple[PMD, float]:
    """
    Bayes update of a predictive PMD with one measurement

    Args:
        p: normalized predictive PMD
        mm: measurement model evaluated at the physical grid points
        z: scalar measurement

    Returns:
        (posterior PMD, predictive likelihood p(z | past measurements))
    """
    residual = z - np.asarray(mm.h(p.grid.points()), dtype=float).ravel()
    log_like = gm_logpdf(mm.noise, residual).reshape(p.grid.shape)
    with np.errstate(divide="ignore"):
        log_post = np.log(p.weights) + log_like
    peak = log_post.max()
    if not np.isfinite(peak):
        raise ValueError("measurement incompatible with grid support")
    posterior = np.exp(log_post - peak)
    likelihood = float(np.exp(peak) * posterior.sum() * p.grid.cell_volume)
    return normalize(PMD(weights=posterior, grid=p.grid)), likelihood


def _predictor(solver: str, model: CtModel, dm: DiscreteModel, cfg: PmfConfig) -> Callable[[PMD], PMD]:
    tau = cfg.Ts

    def fdm_like(step):
        def predict(p: PMD) -> PMD:
            l = cfg.substeps or default_substeps(model, p.grid, tau)
            return step(p, model, tau, l)
        return predict

    predictors: Dict[str, Callable[[PMD], PMD]] = {
        "fdm": fdm_like(fdm_predict),
        "sine": fdm_like(sine_predict),
        "spectral": lambda p: spectral_predict(p, model, tau, cfg.spectral_substeps),
        "discrete": lambda p: discrete_predict(p, dm),
    }
    if solver not in predictors:
        raise ValueError(f"unknown solver '{solver}', expected one of {', '.join(SOLVERS)}")
    return predictors[solver]


def pmf_run(m: CtModel, mm: MeasModel, zs: Sequence[float], solver: str, cfg: PmfConfig) -> List[FilterOutput]:
    """
    Point-mass filter over a measurement sequence

    The first measurement updates the prior directly; every later epoch runs
    the time update over Ts, the measurement update, moment extraction and a
    grid redesign at the filtering mean.

    Args:
        m: continuous model; a non-diagonal Q is handled in diagonalized coordinates
        mm: measurement model
        zs: measurements, one per epoch
        solver: one of fdm, sine, spectral, discrete
        cfg: filter settings

    Returns:
        One FilterOutput per measurement, or the prior moments alone for no measurements
    """
    prior_mean = np.atleast_1d(np.asarray(cfg.prior_mean, dtype=float))
    prior_cov = np.atleast_2d(np.asarray(cfg.prior_cov, dtype=float))
    if len(zs) == 0:
        return [FilterOutput(mean=prior_mean, cov=prior_cov)]

    if is_diagonal(m.Q):
        model, G = m, None
        h = mm.h
        mean, cov = prior_mean, prior_cov
    else:
        dmodel = diagonalize(m)
        model, G = dmodel.base, dmodel.G
        h = lambda pts: mm.h(pts @ G.T)
        mean = np.linalg.solve(G, prior_mean)
        cov = np.linalg.solve(G, np.linalg.solve(G, prior_cov).T)
        logger.info("Running point-mass filter in diagonalized coordinates")
    work_mm = MeasModel(h=h, noise=mm.noise, n_z=mm.n_z)
    dm = discretize(model, cfg.Ts)
    predict = _predictor(solver, model, dm, cfg)

    grid = build_grid(mean, cov, cfg.N_pa, cfg.k_sigma)
    p = pmd_from_pdf(multivariate_normal(mean=mean, cov=cov).pdf, grid)

    outputs = []
    for k, z in enumerate(zs):
        wall_time = 0.0
        if k > 0:
            start = time.perf_counter()
            p = predict(p)
            wall_time = time.perf_counter() - start
        p, likelihood = measurement_update(p, work_mm, float(z))
        mean, cov = moments(p)
        loglik = float(np.log(likelihood)) if likelihood > 0 else -np.inf
        if G is None:
            out_mean, out_cov = mean, cov
        else:
            out_mean, out_cov = map_moments_back(mean, cov, G, congruent=True)
        outputs.append(FilterOutput(mean=out_mean, cov=out_cov, loglik=loglik, wall_time=wall_time))

        if k + 1 < len(zs):
            design = design_covariance(cov, dm, previous=p.grid)
            p = regrid(p, build_grid(mean, np.diag(np.diagonal(design)), cfg.N_pa, cfg.k_sigma))

    logger.info(f"✓ {solver} point-mass filter finished {len(outputs)} epochs")
    return outputs


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Low-variance resampling; returns the selected particle indices."""
    N = len(weights)
    cumsum = np.cumsum(weights)
    u = rng.uniform(0, 1.0 / N) + np.arange(N) / N
    return np.clip(np.searchsorted(cumsum, u), 0, N - 1)


def bootstrap_pf(
    dm: DiscreteModel,
    mm: MeasModel,
    zs: Sequence[float],
    Np: int,
    seed,
    prior_mean,
    prior_cov,
) -> List[FilterOutput]:
    """
    Bootstrap particle filter with systematic resampling at every step

    Args:
        dm: discrete model propagating the particles
        mm: measurement model
        zs: measurements, the first one applied to the prior sample
        Np: number of particles
        seed: seed for numpy's default generator
        prior_mean, prior_cov: Gaussian p(x0)

    Returns:
        One FilterOutput per measurement; moments use the weights before resampling
    """
    if Np < 1:
        raise ValueError(f"Np must be >= 1, got {Np}")
    rng = np.random.default_rng(seed)
    prior_mean = np.atleast_1d(np.asarray(prior_mean, dtype=float))
    prior_cov = np.atleast_2d(np.asarray(prior_cov, dtype=float))
    particles = rng.multivariate_normal(prior_mean, prior_cov, size=Np)
    zero = np.zeros(prior_mean.size)

    outputs = []
    for k, z in enumerate(zs):
        start = time.perf_counter()
        if k > 0:
            particles = particles @ dm.F.T + rng.multivariate_normal(zero, dm.Qd, size=Np)
        residual = float(z) - np.asarray(mm.h(particles), dtype=float).ravel()
        log_w = gm_logpdf(mm.noise, residual)
        total = logsumexp(log_w)
        if not np.isfinite(total):
            raise ValueError("particle weights degenerate: every weight is zero")
        w = np.exp(log_w - total)

        mean = w @ particles
        diff = particles - mean
        cov = np.einsum("i,ij,ik->jk", w, diff, diff)
        particles = particles[systematic_resample(w, rng)]
        outputs.append(FilterOutput(
            mean=mean,
            cov=0.5 * (cov + cov.T),
            loglik=float(total - np.log(Np)),
            wall_time=time.perf_counter() - start,
        ))
    return outputs


def kalman_reference(dm: DiscreteModel, H, R, zs: Sequence, prior: Tuple[np.ndarray, np.ndarray]) -> List[FilterOutput]:
    """Kalman filter with the same epoch convention as pmf_run (update-only first epoch)."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    x = np.atleast_1d(np.asarray(prior[0], dtype=float))
    P = np.atleast_2d(np.asarray(prior[1], dtype=float))
    F, Qd = dm.F, dm.Qd

    outputs = []
    for k, z in enumerate(zs):
        if k > 0:
            x = F @ x
            P = F @ P @ F.T + Qd
        z = np.atleast_1d(np.asarray(z, dtype=float))
        S = H @ P @ H.T + R
        innovation = z - H @ x
        loglik = float(multivariate_normal(mean=np.zeros(z.size), cov=S).logpdf(innovation))
        K = np.linalg.solve(S, H @ P).T
        x = x + K @ innovation
        P = P - K @ S @ K.T
        P = 0.5 * (P + P.T)
        outputs.append(FilterOutput(mean=x, cov=P, loglik=loglik))
    return outputs
