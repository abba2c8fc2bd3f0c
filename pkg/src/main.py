import functools
import sys

import click
import numpy as np
import pandas as pd
from dotenv import load_dotenv
from pydantic import ValidationError

from src import __version__
from src.estimands.estimands import delta_ppr_estimate, delta_ppr_smart, relative_metrics
from src.model.grid import TimeGrid
from src.model.study import Estimand, GridKind, StudyConfig
from src.model.trajectory import ScenarioId
from src.quadrature.legendre import gauss_legendre
from src.study.study import run_continuous_study, run_discrete_study, table1
from src.trajectories.scenarios import control_mean, effect_trajectory, treated_mean
from src.util.csv_io import read_bundle, write_frame, write_study_csv
from src.util.errors import (
    ConvergenceError,
    IntegrationDomainError,
    InvalidArgumentError,
    ModelError,
)
from src.util.logging import logger
from src.weights.weights import gauss_legendre_grid, parse_estimand, resolve_contrast

EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_MODEL = 4


def exit_codes(command):
    """Map library errors onto the exit-code contract: 2 validation, 3 I/O, 4 numerical model."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (ModelError, ConvergenceError, IntegrationDomainError) as e:
            logger.error("Numerical model failure: %s", e)
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_MODEL)
        except (InvalidArgumentError, ValidationError, ValueError) as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_VALIDATION)
        except OSError as e:
            logger.error("I/O failure: %s", e)
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_IO)

    return wrapper


def _split(text: str | None) -> list[str] | None:
    if text is None:
        return None
    return [part.strip() for part in text.split(",") if part.strip()]


def _floats(text: str | None) -> tuple[float, ...] | None:
    parts = _split(text)
    return None if parts is None else tuple(float(p) for p in parts)


def _grid(kind: str, m: int) -> TimeGrid:
    if GridKind(kind) == GridKind.GAUSS_LEGENDRE:
        return gauss_legendre_grid(m)
    return TimeGrid.equal_spaced(m)


@click.group()
@click.version_option(version=__version__, prog_name="ppr")
def cli():
    """Principal Progression Rate estimands, contrasts and analytic studies."""
    load_dotenv()


@cli.command()
@click.option("--estimand", required=True, help="cfb, ols, auc, cfb-ols, partial-auc, beta:a,b or power-auc:alpha")
@click.option("--m", "m", type=click.IntRange(min=2), required=True, help="Number of visits")
@click.option("--grid", "grid_kind", type=click.Choice([g.value for g in GridKind]), default="equal")
@exit_codes
def weights(estimand: str, m: int, grid_kind: str):
    """Discrete weights w and contrast coefficients v on a visit grid."""
    spec = parse_estimand(estimand)
    grid = _grid(grid_kind, m)
    dw, contrast = resolve_contrast(spec, grid)
    w = [np.nan] * grid.m if dw is None else [np.nan, *dw.w]
    frame = pd.DataFrame({"t": grid.points, "w": w, "v": contrast.coeffs})
    write_frame(frame, sys.stdout)


@cli.command(name="table1")
@exit_codes
def table1_command():
    """OLS over CFB variance ratios under compound symmetry, m = 5..9."""
    rows = table1()
    frame = pd.DataFrame(
        {
            "m": [r.m for r in rows],
            "discrete": [f"{r.discrete:.2f}" for r in rows],
            "continuous": [f"{r.continuous:.2f}" for r in rows],
            "discrete_exact": [r.discrete for r in rows],
            "continuous_exact": [r.continuous for r in rows],
        }
    )
    write_frame(frame, sys.stdout)


@cli.command()
@click.option("--out", "out", type=click.Path(dir_okay=False), required=True, help="CSV file to write")
@click.option("--scenarios", default=None, help="Comma separated scenario ids")
@click.option("--estimands", default=None, help="Comma separated subset of cfb, ols, auc")
@click.option("--m", "m_values", default=None, help="Comma separated visit counts")
@click.option("--k", "k_values", default=None, help="Comma separated k values, rho <= k <= 1")
@click.option("--sigma", "sigma_values", default=None, help="Comma separated end-of-study SDs")
@click.option("--rho", type=float, default=None, help="Correlation between first and last visit")
@click.option("--grid", "grid_kind", type=click.Choice([g.value for g in GridKind]), default="equal")
@click.option("--smart", is_flag=True, help="Variance-minimizing baseline coefficient")
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Overrides PPR_THREADS")
@exit_codes
def study(
    out: str,
    scenarios: str | None,
    estimands: str | None,
    m_values: str | None,
    k_values: str | None,
    sigma_values: str | None,
    rho: float | None,
    grid_kind: str,
    smart: bool,
    threads: int | None,
):
    """Relative signal, standard error and sample size over the scenario grid."""
    overrides = {
        "scenarios": None if scenarios is None else tuple(ScenarioId(s) for s in _split(scenarios)),
        "estimands": None if estimands is None else tuple(Estimand(e) for e in _split(estimands)),
        "m_values": None if m_values is None else tuple(int(m) for m in _split(m_values)),
        "k_values": _floats(k_values),
        "sigma_values": _floats(sigma_values),
        "rho": rho,
    }
    cfg = StudyConfig(
        **{key: value for key, value in overrides.items() if value is not None},
        grid_kind=GridKind(grid_kind),
        use_smart=smart,
    )
    runner = run_discrete_study if cfg.grid_kind == GridKind.EQUAL else run_continuous_study
    table = runner(cfg, threads)
    write_study_csv(table, out)
    click.echo(f"Wrote {len(table.rows)} rows to {out}", err=True)
    click.echo(f"Config: {cfg.model_dump_json()}", err=True)


@cli.command()
@click.option("--effects", type=click.Path(dir_okay=False), required=True, help="CSV with header t,delta")
@click.option("--cov", "cov", type=click.Path(dir_okay=False), required=True, help="m x m covariance CSV, no header")
@click.option("--estimand", "estimands", multiple=True, required=True, help="Repeatable")
@click.option("--reference", default=None, help="Estimand the percentages are relative to")
@click.option("--smart", is_flag=True, help="Variance-minimizing baseline coefficient")
@exit_codes
def estimate(effects: str, cov: str, estimands: tuple[str, ...], reference: str | None, smart: bool):
    """Point estimate, SE and Z^2 of PPR differences from an MMRM estimate bundle."""
    bundle = read_bundle(effects, cov)
    estimator = delta_ppr_smart if smart else delta_ppr_estimate

    reference_result = None
    if reference is not None:
        _, contrast = resolve_contrast(parse_estimand(reference), bundle.grid)
        reference_result = delta_ppr_estimate(bundle, contrast, reference)

    records = []
    for name in estimands:
        _, contrast = resolve_contrast(parse_estimand(name), bundle.grid)
        result = estimator(bundle, contrast, name)
        record = {
            "estimand": name,
            "smart": "true" if smart else "false",
            "point": result.point,
            "se": result.se,
            "z_squared": result.z_squared,
        }
        if reference_result is not None:
            metrics = relative_metrics(
                result, result.point, reference_result, reference_result.point
            )
            record |= {
                "signal_pct": metrics.signal_pct,
                "se_pct": metrics.se_pct,
                "rel_n_pct": metrics.rel_sample_size_pct,
            }
        records.append(record)
    write_frame(pd.DataFrame.from_records(records), sys.stdout)


@cli.command()
@click.argument("scenario_id", type=click.Choice([s.value for s in ScenarioId]))
@click.option("--points", type=click.IntRange(min=2), default=11, help="Number of uniform time points")
@exit_codes
def scenario(scenario_id: str, points: int):
    """Control, treated and difference trajectories with their derivatives."""
    s = ScenarioId(scenario_id)
    t = np.linspace(0.0, 1.0, points)
    f, h, delta = control_mean(), treated_mean(s), effect_trajectory(s)
    frame = pd.DataFrame(
        {
            "t": t,
            "f": f(t),
            "h": h(t),
            "delta": delta(t),
            "f_prime": f.derivative(t),
            "h_prime": h.derivative(t),
            "delta_prime": delta.derivative(t),
        }
    )
    write_frame(frame, sys.stdout)


@cli.command(name="gl-nodes")
@click.option("--n", "n", type=int, required=True, help="Quadrature order, 1..64")
@exit_codes
def gl_nodes(n: int):
    """Gauss-Legendre nodes and weights on (-1, 1) and mapped to (0, 1)."""
    scheme = gauss_legendre(n)
    t, a = scheme.unit_interval()
    frame = pd.DataFrame(
        {
            "i": np.arange(1, n + 1),
            "x": scheme.node_array(),
            "a": scheme.weight_array(),
            "t": t,
            "half_a": a,
        }
    )
    write_frame(frame, sys.stdout)


if __name__ == "__main__":
    cli()
