# bench.py
"""Convergence study, Monte-Carlo tracking benchmark and single-run tracks."""
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from config import settings
from pmf.dynamics import CtModel, GaussianMixture, gm_pdf
from pmf.filters import FilterOutput, PmfConfig, bootstrap_pf, pmf_run
from pmf.grid import PMD, build_grid, pmd_from_pdf
from pmf.metrics import astd, rmse
from pmf.models import ConvergenceConfig, MetricsReport, ScenarioConfig
from pmf.scenario import Scenario, build_scenario, simulate
from pmf.solvers.fdm import default_substeps, fdm_predict
from pmf.solvers.sine import sine_predict
from pmf.solvers.spectral import spectral_predict
from pmf.storage import save_terrain, write_rows

logger = logging.getLogger(__name__)

CONVERGENCE_HEADER = ("density", "N", "solver", "error", "seconds")
PROFILE_HEADER = ("density", "N", "solver", "x", "error")


# ============================================================================
# Time-update accuracy
# ============================================================================

def study_density(cfg: ConvergenceConfig, density: str) -> GaussianMixture:
    if density == "gauss":
        return GaussianMixture(weights=[1.0], means=[cfg.gauss_mean], variances=[cfg.gauss_var])
    return GaussianMixture(weights=cfg.gm_weights, means=cfg.gm_means, variances=cfg.gm_vars)


def heat_kernel_solution(gm: GaussianMixture, q: float, tau: float) -> GaussianMixture:
    """Pure diffusion keeps each component Gaussian and adds q·tau to its variance."""
    return GaussianMixture(weights=gm.weights, means=gm.means, variances=gm.variances + q * tau)


def mixture_moments(gm: GaussianMixture) -> Tuple[float, float]:
    mean = float(gm.weights @ gm.means)
    var = float(gm.weights @ (gm.variances + gm.means ** 2) - mean ** 2)
    return mean, var


def _predict_1d(p: PMD, solver: str, model: CtModel, cfg: ConvergenceConfig) -> PMD:
    if solver == "spectral":
        return spectral_predict(p, model, cfg.tau, cfg.spectral_substeps)
    l = default_substeps(model, p.grid, cfg.tau)
    step = fdm_predict if solver == "fdm" else sine_predict
    return step(p, model, cfg.tau, l)


def time_update_error(cfg: ConvergenceConfig, density: str, N: int, solver: str) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Predict the test density over tau and compare with the analytic solution

    Returns:
        (grid points, signed pointwise error, solver seconds)
    """
    model = CtModel(A=[[0.0]], Q=[[cfg.q]])
    gm = study_density(cfg, density)
    mean, var = mixture_moments(gm)
    grid = build_grid([mean], [[var]], N, cfg.k_sigma)
    p = pmd_from_pdf(lambda pts: gm_pdf(gm, pts[:, 0]), grid)

    start = time.perf_counter()
    predicted = _predict_1d(p, solver, model, cfg)
    seconds = time.perf_counter() - start

    x = predicted.grid.points()[:, 0]
    exact = gm_pdf(heat_kernel_solution(gm, cfg.q, cfg.tau), x)
    return x, predicted.weights.ravel() - exact, seconds


def convergence_study(cfg: ConvergenceConfig) -> List[tuple]:
    """Max-abs predictive PMD error per density, grid size and solver."""
    rows = []
    for density in cfg.densities:
        for N in cfg.ns:
            for solver in cfg.solvers:
                _, error, seconds = time_update_error(cfg, density, N, solver)
                rows.append((density, N, solver, float(np.abs(error).max()), seconds))
                logger.info(f"{density} N={N} {solver}: max error {rows[-1][3]:.3e} in {seconds:.3f}s")
    log_gaussian_deterioration(rows)
    logger.info(f"✓ Convergence study finished ({len(rows)} rows)")
    return rows


def log_gaussian_deterioration(rows: Sequence[tuple]) -> None:
    """Report whether the Gaussian spectral error grows again at large N; never fails."""
    curve = sorted((N, err) for density, N, solver, err, _ in rows if density == "gauss" and solver == "spectral")
    if len(curve) < 2:
        return
    best_n, best = min(curve, key=lambda c: c[1])
    last_n, last = curve[-1]
    if last > best:
        logger.info(f"Gaussian spectral error rises from {best:.3e} at N={best_n} to {last:.3e} at N={last_n}")
    else:
        logger.info(f"Gaussian spectral error keeps decreasing up to N={last_n} ({last:.3e})")


def error_profile(cfg: ConvergenceConfig) -> List[tuple]:
    """Signed pointwise predictive error for the profile grid sizes."""
    rows = []
    for density in cfg.densities:
        for N in cfg.profile_ns:
            for solver in cfg.solvers:
                x, error, _ = time_update_error(cfg, density, N, solver)
                rows.extend((density, N, solver, float(xi), float(ei)) for xi, ei in zip(x, error))
    return rows


# ============================================================================
# Tracking
# ============================================================================

def run_filter(name: str, scenario: Scenario, zs: np.ndarray, seed) -> List[FilterOutput]:
    cfg = scenario.cfg
    if name == "pf":
        return bootstrap_pf(scenario.dm, scenario.mm, zs, cfg.particles, seed, scenario.prior_mean, scenario.prior_cov)
    pmf_cfg = PmfConfig(
        prior_mean=scenario.prior_mean,
        prior_cov=scenario.prior_cov,
        Ts=cfg.Ts,
        N_pa=cfg.N_pa,
        k_sigma=cfg.k_sigma,
        substeps=cfg.substeps,
        spectral_substeps=cfg.spectral_substeps,
    )
    return pmf_run(scenario.model, scenario.mm, zs, name, pmf_cfg)


def run_seeds(seed: int, run: int) -> Tuple[np.random.SeedSequence, np.random.SeedSequence]:
    """Per-run (simulation, filter) streams derived from the master seed and run index."""
    sim, filt = np.random.SeedSequence([seed, run]).spawn(2)
    return sim, filt


@lru_cache(maxsize=4)
def _cached_scenario(cfg_json: str) -> Scenario:
    return build_scenario(ScenarioConfig.model_validate_json(cfg_json))


def _run_once(cfg_json: str, filters: Tuple[str, ...], run: int) -> Dict[str, object]:
    """One Monte-Carlo run; failures are recorded per filter instead of raised."""
    scenario = _cached_scenario(cfg_json)
    cfg = scenario.cfg
    sim_seed, filter_seed = run_seeds(cfg.seed, run)
    try:
        truth, zs = simulate(scenario.dm, scenario.altimeter, scenario.mm.noise, cfg.steps, sim_seed,
                             scenario.prior_mean, scenario.prior_cov)
    except Exception as e:
        logger.warning(f"Run {run}: simulation failed: {str(e)}")
        return {"run": run, "truth": None, "filters": {name: None for name in filters}}

    results = {}
    for name in filters:
        try:
            outs = run_filter(name, scenario, zs, filter_seed)
            epoch_times = [o.wall_time for o in outs[1:]] or [outs[0].wall_time]
            results[name] = (
                np.array([o.mean for o in outs]),
                np.array([o.cov for o in outs]),
                float(np.mean(epoch_times)),
            )
        except Exception as e:
            logger.warning(f"Run {run}: {name} failed: {str(e)}")
            results[name] = None
    return {"run": run, "truth": truth, "filters": results}


def mc_benchmark(
    cfg: ScenarioConfig,
    filters: Optional[Sequence[str]] = None,
    mc: Optional[int] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> List[MetricsReport]:
    """
    Monte-Carlo comparison of the configured filters on paired runs

    Args:
        cfg: scenario config
        filters: override of cfg.filters
        mc: override of cfg.mc
        seed: override of cfg.seed
        workers: process pool size, settings.WORKERS by default

    Returns:
        One MetricsReport per filter, in the requested order
    """
    updates = {k: v for k, v in {"filters": list(filters) if filters else None, "mc": mc, "seed": seed}.items()
               if v is not None}
    cfg = ScenarioConfig.model_validate({**cfg.model_dump(), **updates})
    filters = tuple(cfg.filters)
    workers = workers or settings.WORKERS
    cfg_json = cfg.model_dump_json()
    logger.info(f"Benchmark: {cfg.mc} runs of {', '.join(filters)} ({cfg.variant}, N_pa={cfg.N_pa}, workers={workers})")

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = pool.map(_run_once, [cfg_json] * cfg.mc, [filters] * cfg.mc, range(cfg.mc))
            runs = list(tqdm(futures, total=cfg.mc, desc="monte-carlo"))
    else:
        runs = [_run_once(cfg_json, filters, run) for run in tqdm(range(cfg.mc), desc="monte-carlo")]
    runs.sort(key=lambda r: r["run"])

    reports = []
    for name in filters:
        ok = [(r["truth"], r["filters"][name]) for r in runs if r["filters"][name] is not None]
        failed = cfg.mc - len(ok)
        if failed:
            logger.warning(f"{name}: {failed} of {cfg.mc} runs failed and are excluded")
        if not ok:
            n_x = len(cfg.prior_mean)
            reports.append(MetricsReport(filter=name, rmse=[float("nan")] * n_x, astd=[float("nan")] * n_x,
                                         time=0.0, runs_ok=0, runs_failed=failed))
            continue
        truth = np.array([t for t, _ in ok])
        means = np.array([res[0] for _, res in ok])
        covs = np.array([res[1] for _, res in ok])
        n_x = truth.shape[-1]
        reports.append(MetricsReport(
            filter=name,
            rmse=[rmse(truth, means, j) for j in range(n_x)],
            astd=[astd(covs, j) for j in range(n_x)],
            time=float(np.mean([res[2] for _, res in ok])),
            runs_ok=len(ok),
            runs_failed=failed,
        ))
        logger.info(f"✓ {name}: RMSE {np.round(reports[-1].rmse, 3).tolist()} time {reports[-1].time:.2e}s")
    return reports


def write_benchmark(reports: Sequence[MetricsReport], path) -> Tuple[Path, Path]:
    """Metrics table at path and mean epoch times in a sidecar <stem>_timing.csv."""
    path = Path(path)
    n_x = len(reports[0].rmse)
    header = (
        ["filter"] + [f"rmse_{j}" for j in range(n_x)] + [f"astd_{j}" for j in range(n_x)]
        + ["runs_ok", "runs_failed"]
    )
    rows = [[r.filter, *r.rmse, *r.astd, r.runs_ok, r.runs_failed] for r in reports]
    metrics_path = write_rows(path, header, rows)
    timing_path = write_rows(path.with_name(f"{path.stem}_timing.csv"), ["filter", "time"],
                             [[r.filter, r.time] for r in reports])
    return metrics_path, timing_path


def run_track(cfg: ScenarioConfig, out_dir) -> List[Path]:
    """Simulate run 0 and write truth, per-filter estimates and the terrain map."""
    out_dir = Path(out_dir)
    scenario = build_scenario(cfg)
    sim_seed, filter_seed = run_seeds(cfg.seed, 0)
    truth, zs = simulate(scenario.dm, scenario.altimeter, scenario.mm.noise, cfg.steps, sim_seed,
                         scenario.prior_mean, scenario.prior_cov)
    n_x = truth.shape[1]

    written = [
        write_rows(out_dir / "truth.csv", ["epoch", *(f"x_{j}" for j in range(n_x)), "z"],
                   [[k, *x, z] for k, (x, z) in enumerate(zip(truth, zs))]),
        save_terrain(scenario.terrain, out_dir / "terrain.txt"),
    ]
    for name in cfg.filters:
        outs = run_filter(name, scenario, zs, filter_seed)
        header = ["epoch", *(f"mean_{j}" for j in range(n_x)), *(f"std_{j}" for j in range(n_x))]
        written.append(write_rows(out_dir / f"{name}.csv", header,
                                  [[k, *o.mean, *o.std] for k, o in enumerate(outs)]))
    logger.info(f"✓ Track written to {out_dir}")
    return written
