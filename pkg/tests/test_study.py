import math

import numpy as np
import pytest

from casecohort.errors import AggregationError, ConfigError, ContractViolation
from casecohort.simgen import default_params
from casecohort.study import ScenarioConfig, coverage, run_scenario, run_simulation


@pytest.fixture(scope="module")
def small_config():
    return ScenarioConfig(n=600, subcohort_fraction=0.3, n_sims=6, B=20, master_seed=5)


def test_coverage_values():
    assert coverage([True] * 10) == 1.0
    assert coverage([False] * 10) == 0.0
    assert coverage([True] * 9490 + [False] * 510) == pytest.approx(0.949)


def test_coverage_empty():
    with pytest.raises(ContractViolation):
        coverage([])


def test_smoke_single_simulation():
    cfg = ScenarioConfig(n=800, n_sims=1, B=2, master_seed=3)
    report = run_scenario(cfg)
    assert report.n_sims == 1
    for c in report.coefficients:
        values = [getattr(c, f) for f in c.__dataclass_fields__ if f != "name"]
        assert all(math.isfinite(v) for v in values)
        assert c.cp_robust in (0.0, 1.0)
        assert c.cp_boot_proposed in (0.0, 1.0)
    assert len(report.outcomes) == 1


def test_whole_line_interval_gives_full_coverage(small_config):
    report = run_scenario(small_config, interval=lambda est, se, level: (-math.inf, math.inf))
    for c in report.coefficients:
        assert c.cp_robust == c.cp_boot_naive == c.cp_boot_proposed == 1.0


def test_report_aggregates_outcomes(small_config):
    report = run_scenario(small_config)
    est = np.vstack([o.beta_hat for o in report.outcomes])
    b1 = report.coefficient("beta1")
    assert b1.true_value == 0.96
    assert b1.mean_estimate == pytest.approx(est[:, 1].mean())
    assert b1.empirical_sd == pytest.approx(est[:, 1].std(ddof=1))
    assert b1.mean_se_robust == pytest.approx(np.mean([o.se_robust[1] for o in report.outcomes]))
    assert report.mean_duplicates == pytest.approx(np.mean([o.m for o in report.outcomes]))
    assert all(0.0 <= c.cp_boot_proposed <= 1.0 for c in report.coefficients)


def test_determinism_across_threads(small_config):
    progress = []
    a = run_scenario(small_config, threads=1, progress=lambda d, t: progress.append((d, t)))
    b = run_scenario(small_config, threads=3)
    assert a == b
    for oa, ob in zip(a.outcomes, b.outcomes):
        np.testing.assert_array_equal(oa.beta_hat, ob.beta_hat)
        np.testing.assert_array_equal(oa.se_boot_proposed, ob.se_boot_proposed)
    assert progress == [(i, 6) for i in range(1, 7)]


def test_failed_simulations_are_redrawn():
    # tiny cohorts often produce separated fits
    cfg = ScenarioConfig(n=60, subcohort_fraction=0.3, n_sims=1, B=5, master_seed=0)
    outcomes = [run_simulation(cfg, s) for s in range(30)]
    assert any(o.failed_attempts > 0 for o in outcomes)
    assert all(np.all(np.isfinite(o.beta_hat)) for o in outcomes)


def test_scenario_aborts_above_failure_limit():
    cfg = ScenarioConfig(n=60, subcohort_fraction=0.3, n_sims=20, B=5, master_seed=0)
    with pytest.raises(AggregationError):
        run_scenario(cfg)


def test_config_lists_every_violation():
    cfg = ScenarioConfig(n=0, subcohort_fraction=1.5, n_sims=0, B=1, sim_params=default_params())
    with pytest.raises(ConfigError) as info:
        cfg.validate()
    assert len(info.value.problems) == 4
