import io
import math
from unittest import TestCase

from pydantic import ValidationError

from src.estimands.estimands import continuous_ppr
from src.model.study import Estimand, GridKind, StudyConfig
from src.model.trajectory import ScenarioId
from src.study.study import (
    compound_symmetric_ratio,
    exp_decay_counterexample,
    run_continuous_study,
    run_discrete_study,
    table1,
)
from src.trajectories.scenarios import effect_cumulative, effect_trajectory
from src.util.csv_io import read_study_csv, write_study_csv
from src.util.errors import InvalidArgumentError

GL = GridKind.GAUSS_LEGENDRE


def select(table, **filters):
    return [row for row in table.rows if all(getattr(row, k) == v for k, v in filters.items())]


class TestClosedForms(TestCase):
    def test_table1(self):
        rows = table1()
        assert [r.m for r in rows] == [5, 6, 7, 8, 9]
        assert [round(r.discrete, 2) for r in rows] == [0.80, 0.71, 0.64, 0.58, 0.53]
        assert [round(r.continuous, 2) for r in rows] == [1.67, 1.25, 1.01, 0.85, 0.74]

    def test_exponential_decay(self):
        ratio = exp_decay_counterexample()
        assert round(ratio, 1) == 1.1
        assert ratio > 1

    def test_compound_symmetric_ratio(self):
        assert math.isclose(compound_symmetric_ratio(8), 42 / 72)
        assert math.isclose(compound_symmetric_ratio(2), 1.0)
        assert math.isclose(compound_symmetric_ratio(6, sd=3.0, corr=0.2), 6 * 5 / (6 * 7))


class TestStudyConfig(TestCase):
    def test_defaults(self):
        cfg = StudyConfig()
        assert cfg.m_values == (5, 6, 7, 8, 9, 10)
        assert cfg.rho == 0.6
        assert cfg.grid_kind == GridKind.EQUAL

    def test_k_below_rho(self):
        with self.assertRaises(ValidationError) as ctx:
            StudyConfig(k_values=(0.5,))
        assert "ρ ≤ k ≤ 1" in str(ctx.exception)

    def test_small_m(self):
        with self.assertRaises(ValidationError):
            StudyConfig(m_values=(1,))
        with self.assertRaises(ValidationError):
            StudyConfig(m_values=(2,), grid_kind=GL)

    def test_bad_sigma(self):
        with self.assertRaises(ValidationError):
            StudyConfig(sigma_values=(0.0,))

    def test_duplicates_dropped(self):
        assert StudyConfig(m_values=(5, 5, 6)).m_values == (5, 6)

    def test_wrong_runner(self):
        with self.assertRaises(InvalidArgumentError):
            run_discrete_study(StudyConfig(grid_kind=GL))
        with self.assertRaises(InvalidArgumentError):
            run_continuous_study(StudyConfig())


class TestDiscreteStudy(TestCase):
    @classmethod
    def setUpClass(cls):
        cls.table = run_discrete_study(StudyConfig())

    def test_cardinality(self):
        assert len(self.table.rows) == 4 * 6 * 4 * 3 * 3
        assert self.table.metadata["config"]["rho"] == 0.6

    def test_reference_rows(self):
        for row in select(self.table, estimand_id="cfb"):
            assert row.signal_pct == 100.0
            assert row.se_pct == 100.0
            assert row.rel_sample_size_pct == 100.0

    def test_optimal_bounds_every_estimand(self):
        for row in self.table.rows:
            assert row.optimal_sample_size_pct <= row.rel_sample_size_pct * (1 + 1e-9) + 1e-9, row

    def test_constant_effect(self):
        for row in select(self.table, scenario=ScenarioId.CONSTANT):
            assert math.isclose(row.signal_pct, 100.0, rel_tol=1e-12), row

    def test_decreasing_auc_signal(self):
        for row in select(self.table, scenario=ScenarioId.DECREASING, estimand_id="auc", m=10):
            assert 117 <= row.signal_pct <= 123

    def test_increasing_auc_signal(self):
        for row in select(self.table, scenario=ScenarioId.INCREASING, estimand_id="auc"):
            assert 88 <= row.signal_pct <= 92

    def test_inc_then_dec_ols_signal(self):
        for row in select(self.table, scenario=ScenarioId.INC_THEN_DEC, estimand_id="ols"):
            assert 106 <= row.signal_pct <= 116

    def test_ols_sample_size_at_high_correlation(self):
        sigma = math.sqrt(2)
        inc = select(self.table, scenario=ScenarioId.INCREASING, estimand_id="ols", m=10, k=0.6, sigma_end=sigma)
        itd = select(self.table, scenario=ScenarioId.INC_THEN_DEC, estimand_id="ols", m=10, k=0.6, sigma_end=sigma)
        assert inc and itd
        for row in inc:
            assert 35 <= row.rel_sample_size_pct <= 55
        for row in itd:
            assert 35 <= row.rel_sample_size_pct <= 45
        for row in inc + itd:
            assert row.rel_sample_size_pct - row.optimal_sample_size_pct <= 5

    def test_ols_sample_size_snapshot(self):
        expected = {
            (ScenarioId.INCREASING, math.sqrt(2)): (48.3, 47.7),
            (ScenarioId.INC_THEN_DEC, math.sqrt(2)): (40.4, 38.8),
            (ScenarioId.INCREASING, math.sqrt(5)): 56.7,
            (ScenarioId.INC_THEN_DEC, math.sqrt(5)): 47.4,
        }
        for (scenario, sigma), values in expected.items():
            (row,) = select(self.table, scenario=scenario, estimand_id="ols", m=10, k=0.6, sigma_end=sigma)
            if isinstance(values, tuple):
                rel, optimal = values
                assert abs(row.optimal_sample_size_pct - optimal) <= 0.051, row
            else:
                rel = values
            assert abs(row.rel_sample_size_pct - rel) <= 0.051, row

    def test_ols_se_falls_with_visits(self):
        for scenario in ScenarioId:
            for sigma in StudyConfig().sigma_values:
                rows = select(self.table, scenario=scenario, estimand_id="ols", k=0.6, sigma_end=sigma)
                se = [row.se_pct for row in sorted(rows, key=lambda r: r.m)]
                assert all(a > b for a, b in zip(se, se[1:])), se

    def test_csv_round_trip(self):
        buffer = io.StringIO()
        write_study_csv(self.table, buffer)
        buffer.seek(0)
        rows = read_study_csv(buffer)
        assert len(rows) == len(self.table.rows)
        for read, original in zip(rows, self.table.rows):
            assert read.scenario == original.scenario
            assert read.estimand_id == original.estimand_id
            assert read.m == original.m
            assert math.isclose(read.rel_sample_size_pct, original.rel_sample_size_pct, rel_tol=1e-9)


class TestSmartStudy(TestCase):
    def test_smart_never_worse(self):
        cfg = StudyConfig(m_values=(5, 8), k_values=(0.6, 0.9))
        plain = run_discrete_study(cfg)
        smart = run_discrete_study(cfg.model_copy(update={"use_smart": True}))
        for p, s in zip(plain.rows, smart.rows):
            assert (p.scenario, p.estimand_id, p.m, p.k) == (s.scenario, s.estimand_id, s.m, s.k)
            assert s.smart
            assert s.se_pct <= p.se_pct + 1e-9
            if p.estimand_id == Estimand.CFB.value:
                assert s.se_pct == 100.0

    def test_deterministic_across_threads(self):
        cfg = StudyConfig(m_values=(5, 6), sigma_values=(math.sqrt(3),))
        one = run_discrete_study(cfg, threads=1)
        many = run_discrete_study(cfg, threads=4)
        assert one.rows == many.rows


class TestContinuousStudy(TestCase):
    @classmethod
    def setUpClass(cls):
        cls.table = run_continuous_study(StudyConfig(grid_kind=GL))

    def test_cardinality_and_reference(self):
        assert len(self.table.rows) == 864
        for row in select(self.table, estimand_id="cfb"):
            assert row.rel_sample_size_pct == 100.0
            assert row.grid_kind == "gl"

    def test_increasing_auc_signal(self):
        for row in select(self.table, scenario=ScenarioId.INCREASING, estimand_id="auc"):
            assert 85 <= row.signal_pct <= 92

    def test_inc_then_dec_ols_sample_size(self):
        rows = select(self.table, scenario=ScenarioId.INC_THEN_DEC, estimand_id="ols", m=10, k=0.6)
        assert rows
        for row in rows:
            assert 30 <= row.rel_sample_size_pct <= 50

    def test_ols_signal_stable_in_m(self):
        for scenario in ScenarioId:
            signals = [
                row.signal_pct
                for row in select(self.table, scenario=scenario, estimand_id="ols")
                if row.m >= 7
            ]
            assert max(signals) - min(signals) <= 2

    def test_signal_is_continuous_truth_for_every_m(self):
        for scenario in ScenarioId:
            for estimand in (Estimand.OLS, Estimand.AUC):
                truth = 100 * continuous_ppr(effect_trajectory(scenario), estimand.weight) / effect_cumulative(
                    scenario, 1.0
                )
                rows = select(self.table, scenario=scenario, estimand_id=estimand.value)
                assert {row.m for row in rows} == {5, 6, 7, 8, 9, 10}
                for row in rows:
                    assert math.isclose(row.signal_pct, truth, rel_tol=1e-9), row

    def test_optimal_bounds_every_estimand(self):
        for row in self.table.rows:
            assert row.optimal_sample_size_pct <= row.rel_sample_size_pct * (1 + 1e-9) + 1e-9, row
