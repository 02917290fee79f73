# scenario.py
"""Terrain-aided tracking scenario: models, synthetic map and simulation."""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from pmf.dynamics import (
    CtModel,
    DiscreteModel,
    GaussianMixture,
    MeasModel,
    coordinated_turn,
    discretize,
    gm_sample,
    planar_turn,
)
from pmf.models import ScenarioConfig
from pmf.terrain import TerrainAltimeter, TerrainMap, synth_terrain

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Scenario:
    cfg: ScenarioConfig
    model: CtModel
    dm: DiscreteModel
    terrain: TerrainMap
    altimeter: TerrainAltimeter
    mm: MeasModel
    prior_mean: np.ndarray
    prior_cov: np.ndarray


def open_loop_position_std(dm: DiscreteModel, prior_cov: np.ndarray, steps: int, position_index) -> float:
    """Largest horizontal standard deviation of the unconditioned state over the run."""
    P = prior_cov
    worst = np.sqrt(np.diagonal(P)[list(position_index)]).max()
    for _ in range(steps):
        P = dm.F @ P @ dm.F.T + dm.Qd
        worst = max(worst, np.sqrt(np.diagonal(P)[list(position_index)]).max())
    return float(worst)


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    """
    Assemble models, terrain and prior for a scenario config

    The 2d variant tracks position relative to the turn centre `pivot`, with
    velocity folded into the diffusion q; the 4d variant is the coordinated
    turn with state [p_x, v_x, p_y, v_y] in map coordinates.
    """
    alpha = math.radians(cfg.alpha_deg)
    if cfg.variant == "2d":
        model = planar_turn(alpha, cfg.q)
        position_index, offset = (0, 1), tuple(cfg.pivot)
    else:
        model = coordinated_turn(alpha)
        position_index, offset = (0, 2), (0.0, 0.0)
    dm = discretize(model, cfg.Ts)
    prior_mean = np.asarray(cfg.prior_mean, dtype=float)
    prior_cov = np.diag(np.asarray(cfg.prior_cov_diag, dtype=float))

    # terrain covers the noiseless trajectory plus a margin
    x = prior_mean
    horizontal = [x[list(position_index)]]
    for _ in range(cfg.steps):
        x = dm.F @ x
        horizontal.append(x[list(position_index)])
    horizontal = np.asarray(horizontal) + np.asarray(offset)
    margin = cfg.terrain.margin
    extent = (horizontal.min(axis=0) - margin, horizontal.max(axis=0) + margin)

    spread = open_loop_position_std(dm, prior_cov, cfg.steps, position_index)
    if 3 * spread > margin:
        logger.warning(
            f"Terrain margin {margin:g} m is below 3σ={3 * spread:.1f} m of the open-loop trajectory; "
            "runs may leave the map"
        )

    t = cfg.terrain
    terrain = synth_terrain(
        t.seed, extent, t.roughness,
        cell=t.cell, correlation_length=t.correlation_length, slope=t.slope, base_altitude=t.base_altitude,
    )
    altimeter = TerrainAltimeter(terrain=terrain, position_index=position_index, offset=offset)
    noise = GaussianMixture(weights=cfg.noise.weights, means=cfg.noise.means, variances=cfg.noise.variances)
    return Scenario(
        cfg=cfg,
        model=model,
        dm=dm,
        terrain=terrain,
        altimeter=altimeter,
        mm=MeasModel(h=altimeter, noise=noise),
        prior_mean=prior_mean,
        prior_cov=prior_cov,
    )


def simulate(
    dm: DiscreteModel,
    altimeter: TerrainAltimeter,
    noise: Optional[GaussianMixture],
    T: int,
    seed,
    prior_mean,
    prior_cov,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Simulate T steps of the discrete model with altimeter measurements

    Args:
        dm: discrete dynamics
        altimeter: terrain measurement function
        noise: measurement error mixture, None for exact measurements
        T: number of transitions
        seed: seed for numpy's default generator
        prior_mean, prior_cov: Gaussian the initial state is drawn from

    Returns:
        (states (T+1, n_x), measurements (T+1,))
    """
    rng = np.random.default_rng(seed)
    prior_mean = np.atleast_1d(np.asarray(prior_mean, dtype=float))
    prior_cov = np.atleast_2d(np.asarray(prior_cov, dtype=float))
    zero = np.zeros(prior_mean.size)

    states = np.empty((T + 1, prior_mean.size))
    states[0] = rng.multivariate_normal(prior_mean, prior_cov)
    for k in range(T):
        states[k + 1] = dm.F @ states[k] + rng.multivariate_normal(zero, dm.Qd)

    zs = altimeter(states)
    if noise is not None:
        zs = zs + gm_sample(noise, rng, size=T + 1)
    return states, zs
