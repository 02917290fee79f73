import logging
import sys
from pathlib import Path

import click
from pydantic import ValidationError

import pmf  # This imports pmf/__init__.py which loads .env
from config import settings
from pmf.bench import (
    CONVERGENCE_HEADER,
    PROFILE_HEADER,
    convergence_study,
    error_profile,
    mc_benchmark,
    run_track,
    write_benchmark,
)
from pmf.models import ConvergenceConfig, ScenarioConfig
from pmf.storage import load_config, write_rows

logger = logging.getLogger(__name__)


def _split(value: str) -> list:
    return [item.strip() for item in value.split(",") if item.strip()]


def _run(action):
    """Turn user-facing errors into one clean CLI line"""
    try:
        return action()
    except ValidationError as e:
        raise click.ClickException(f"invalid configuration:\n{e}")
    except (ValueError, OSError) as e:
        raise click.ClickException(str(e))


@click.group()
@click.option("--log-level", default=None, help="Overrides PMF_LOG_LEVEL")
def cli(log_level):
    """Point-mass filter studies: time-update convergence and terrain-aided tracking."""
    logging.basicConfig(
        level=(log_level or settings.LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


@cli.command()
@click.option("--densities", default="gauss,gm", show_default=True)
@click.option("--n", "ns", default="16,32,64,128,200", show_default=True, help="Grid sizes (even)")
@click.option("--solver", "solvers", default="fdm,spectral", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="ConvergenceConfig JSON; command-line lists override it")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--profile/--no-profile", default=False, help="Also write the pointwise error profile")
def converge(densities, ns, solvers, config_path, out, profile):
    """Time-update accuracy against the analytic heat-kernel solution."""
    def action():
        base = load_config(config_path, ConvergenceConfig) if config_path else ConvergenceConfig()
        cfg = ConvergenceConfig.model_validate({
            **base.model_dump(),
            "densities": _split(densities),
            "ns": [int(n) for n in _split(ns)],
            "solvers": _split(solvers),
        })
        path = Path(out) if out else Path(settings.OUTPUT_DIR) / "convergence.csv"
        write_rows(path, CONVERGENCE_HEADER, convergence_study(cfg))
        if profile:
            write_rows(path.with_name(f"{path.stem}_profile.csv"), PROFILE_HEADER, error_profile(cfg))
        click.echo(f"✓ Convergence results written to {path}")
    _run(action)


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(file_okay=False), default=None)
def track(config_path, out):
    """Simulate one run and write truth, filter estimates and terrain."""
    def action():
        cfg = load_config(config_path, ScenarioConfig)
        out_dir = Path(out) if out else Path(settings.OUTPUT_DIR) / "track"
        for path in run_track(cfg, out_dir):
            click.echo(f"✓ {path}")
    _run(action)


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--filters", default=None, help="Comma list from spectral,sine,fdm,discrete,pf")
@click.option("--mc", type=int, default=None, help="Monte-Carlo runs")
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def bench(config_path, filters, mc, seed, out):
    """Monte-Carlo RMSE/ASTD table of the tracking filters."""
    def action():
        cfg = load_config(config_path, ScenarioConfig)
        reports = mc_benchmark(cfg, filters=_split(filters) if filters else None, mc=mc, seed=seed)
        path = Path(out) if out else Path(settings.OUTPUT_DIR) / "bench.csv"
        metrics_path, timing_path = write_benchmark(reports, path)
        click.echo(f"✓ Metrics written to {metrics_path} (timing in {timing_path})")
    _run(action)


if __name__ == "__main__":
    cli()
