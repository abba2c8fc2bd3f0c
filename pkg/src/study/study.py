import itertools
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from src import __version__
from src.covariance.covariance import effect_covariance
from src.estimands.estimands import (
    continuous_ppr,
    contrast_variance,
    cs_variance_ratio,
    optimal_snr,
    relative_metrics,
)
from src.model.covariance import (
    ArWithK,
    CompoundSymmetric,
    CovarianceSpec,
    ExponentialDecay,
    SdProfile,
)
from src.model.estimate import ComparisonRow, PprResult
from src.model.grid import TimeGrid
from src.model.study import Estimand, GridKind, StudyConfig, StudyTable, Table1Row
from src.model.trajectory import ScenarioId
from src.model.weight import OLS, Contrast
from src.trajectories.scenarios import effect_cumulative, effect_trajectory
from src.util.env import get_settings
from src.util.errors import InvalidArgumentError
from src.util.logging import logger
from src.weights.weights import (
    auc_discrete_weights,
    contrast_from_weights,
    endpoint_contrast,
    gauss_legendre_grid,
    ols_discrete_weights,
    quadrature_contrast,
    smart_first_coefficient,
)

Cell = tuple[ScenarioId, int, float, float]


def _discrete_contrast(estimand: Estimand, grid: TimeGrid) -> Contrast:
    match estimand:
        case Estimand.CFB:
            return endpoint_contrast(grid)
        case Estimand.OLS:
            return contrast_from_weights(ols_discrete_weights(grid))
        case Estimand.AUC:
            return contrast_from_weights(auc_discrete_weights(grid.m, grid))
    raise InvalidArgumentError(f"unknown estimand {estimand!r}")


def _continuous_contrast(estimand: Estimand, grid: TimeGrid) -> Contrast:
    if estimand == Estimand.CFB:
        return endpoint_contrast(grid)
    return quadrature_contrast(estimand.weight, grid.m)


def _run_cell(cfg: StudyConfig, cell: Cell) -> list[ComparisonRow]:
    """
    Every estimand of one (scenario, m, k, sigma) cell against the CFB reference.
    On the equal grid the signal of an estimand is the mean of its estimator, sum v_i Delta(t_i);
    on the Gauss-Legendre grid it is the continuous PPR difference int w Delta', which does not
    depend on m.
    """
    scenario, m, k, sigma_end = cell
    if cfg.grid_kind == GridKind.EQUAL:
        grid = TimeGrid.equal_spaced(m)
        profile = SdProfile.INDEX_LINEAR
        build = _discrete_contrast
    else:
        grid = gauss_legendre_grid(m)
        profile = SdProfile.TIME_LINEAR
        build = _continuous_contrast

    spec = ArWithK(rho=cfg.rho, k=k, sigma_end=sigma_end, sd_profile=profile)
    sigma = effect_covariance(spec, grid)
    delta = np.asarray(effect_cumulative(scenario, grid.as_array()), dtype=float)
    effect = effect_trajectory(scenario)

    # the reference stays plain so its rows are exactly 100
    reference_contrast = endpoint_contrast(grid)
    reference_signal = reference_contrast.apply(delta)
    reference = PprResult.from_point_variance(
        Estimand.CFB.value, reference_signal, contrast_variance(reference_contrast, sigma)
    )
    optimal_pct = 100 * (1 / optimal_snr(delta, sigma)) / (
        reference.variance / reference_signal**2
    )

    rows = []
    for estimand in cfg.estimands:
        contrast = build(estimand, grid)
        if cfg.use_smart and estimand != Estimand.CFB:
            contrast = smart_first_coefficient(contrast, sigma)
        if cfg.grid_kind == GridKind.GAUSS_LEGENDRE and estimand != Estimand.CFB:
            signal = continuous_ppr(effect, estimand.weight)
        else:
            signal = contrast.apply(delta)
        result = PprResult.from_point_variance(
            estimand.value, signal, contrast_variance(contrast, sigma)
        )
        metrics = relative_metrics(result, signal, reference, reference_signal)
        rows.append(
            ComparisonRow(
                scenario=scenario,
                estimand_id=estimand.value,
                m=m,
                k=k,
                sigma_end=sigma_end,
                grid_kind=cfg.grid_kind.value,
                smart=cfg.use_smart,
                signal_pct=metrics.signal_pct,
                se_pct=metrics.se_pct,
                rel_sample_size_pct=metrics.rel_sample_size_pct,
                optimal_sample_size_pct=optimal_pct,
            )
        )
    return rows


def _sort_key(row: ComparisonRow) -> tuple:
    scenarios = list(ScenarioId)
    estimands = [e.value for e in Estimand]
    return (
        scenarios.index(row.scenario),
        estimands.index(row.estimand_id),
        row.m,
        row.k,
        row.sigma_end,
    )


def _run(cfg: StudyConfig, threads: int | None) -> StudyTable:
    if threads is None:
        threads = get_settings().PPR_THREADS
    cells: list[Cell] = list(
        itertools.product(cfg.scenarios, cfg.m_values, cfg.k_values, cfg.sigma_values)
    )
    logger.info(
        "Running %s study over %d cells with %s threads",
        cfg.grid_kind.value,
        len(cells),
        threads or "default",
    )
    with ThreadPoolExecutor(max_workers=threads, thread_name_prefix="ppr-study") as executor:
        results = executor.map(lambda cell: _run_cell(cfg, cell), cells)
        rows = [row for cell_rows in results for row in cell_rows]
    rows.sort(key=_sort_key)
    metadata = {"config": cfg.model_dump(mode="json"), "version": __version__}
    return StudyTable(rows=tuple(rows), metadata=metadata)


def run_discrete_study(cfg: StudyConfig, threads: int | None = None) -> StudyTable:
    """
    Discrete PPRs on equal-spaced visits with standard deviations linear in the visit index.
    :param threads: Worker threads; defaults to PPR_THREADS.
    """
    if cfg.grid_kind != GridKind.EQUAL:
        raise InvalidArgumentError("the discrete study runs on the equal-spaced grid")
    return _run(cfg, threads)


def run_continuous_study(cfg: StudyConfig, threads: int | None = None) -> StudyTable:
    """
    Quadrature PPRs on {0, Gauss-Legendre nodes, 1} with standard deviations linear in time.
    The CFB reference uses the endpoints of the augmented grid.
    """
    if cfg.grid_kind != GridKind.GAUSS_LEGENDRE:
        raise InvalidArgumentError("the continuous study runs on the Gauss-Legendre grid")
    return _run(cfg, threads)


def variance_ratio_ols_vs_cfb(spec: CovarianceSpec, m: int) -> float:
    """Var of the discrete OLS PPR over Var of CFB on m equal-spaced visits."""
    grid = TimeGrid.equal_spaced(m)
    sigma = effect_covariance(spec, grid)
    ols = contrast_from_weights(ols_discrete_weights(grid))
    return contrast_variance(ols, sigma) / contrast_variance(endpoint_contrast(grid), sigma)


def table1(m_values: tuple[int, ...] = (5, 6, 7, 8, 9)) -> list[Table1Row]:
    """
    OLS over CFB variance ratios under compound symmetry: 6(m-1)/(m(m+1)) for equal
    spacing and sum q_i^2 / 2 for the quadrature contrast.
    """
    rows = []
    for m in m_values:
        q = quadrature_contrast(OLS, m).as_array()
        rows.append(
            Table1Row(
                m=m,
                discrete=cs_variance_ratio(m),
                continuous=math.fsum((q**2).tolist()) / 2,
            )
        )
    return rows


def exp_decay_counterexample(m: int = 8) -> float:
    """OLS over CFB variance ratio when Cov(t, s) = 0.5^|t - s|, where OLS loses to CFB."""
    return variance_ratio_ols_vs_cfb(ExponentialDecay(sd=1.0, base=0.5), m)


def compound_symmetric_ratio(m: int, sd: float = 1.0, corr: float = 0.6) -> float:
    return variance_ratio_ols_vs_cfb(CompoundSymmetric(sd=sd, corr=corr), m)
