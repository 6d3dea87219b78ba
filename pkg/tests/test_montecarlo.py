import numpy as np
import pytest

from fogplan._rng import make_rng
from fogplan.montecarlo import McConfig, TrialError, ci_halfwidth, estimate_pi_c, lhs_sample


def _occupancy(x, n):
    return np.stack([np.bincount(np.floor(x[:, d] * n).astype(int), minlength=n)
                     for d in range(x.shape[1])])


@pytest.mark.parametrize("n", [1, 4, 100])
@pytest.mark.parametrize("dims", [1, 5])
def test_lhs_one_point_per_stratum(n, dims):
    x = lhs_sample(n, dims, make_rng(n, dims))
    assert x.shape == (n, dims)
    assert np.all((x >= 0) & (x < 1))
    assert np.all(_occupancy(x, n) == 1)


def test_lhs_rejects_empty():
    with pytest.raises(ValueError):
        lhs_sample(0, 1, make_rng(0))


def test_ci_halfwidth():
    assert ci_halfwidth([2.0] * 10) == 0
    x = [0.0] * 500 + [1.0] * 500
    assert ci_halfwidth(x) == pytest.approx(1.959964 * 0.50025 / np.sqrt(1000), abs=1e-5)
    rng = np.random.default_rng(0)
    s = rng.random(50)
    assert ci_halfwidth(np.tile(s, 4)) < ci_halfwidth(s)
    with pytest.raises(ValueError):
        ci_halfwidth([1.0])


def test_zero_variance_stops_at_minimum():
    res = estimate_pi_c(lambda p: 3.0, McConfig())
    assert res.stopped_by == "zero_variance"
    assert res.trials_used == 30 and res.ci_halfwidth == 0


def test_stops_by_max_trials():
    res = estimate_pi_c(lambda p: float(p[0]) * 100.0, McConfig(target_rel_error=1e-9))
    assert res.trials_used == 1000 and res.stopped_by == "max_trials"


def test_quadratic_maximum():
    res = estimate_pi_c(lambda p: float(p[0] * (1 - p[0])), McConfig(seed=3))
    assert abs(res.estimate - 0.5) <= 0.02


def test_seeds_differ_but_agree():
    a = estimate_pi_c(lambda p: float(p[0] * (1 - p[0])), McConfig(seed=1))
    b = estimate_pi_c(lambda p: float(p[0] * (1 - p[0])), McConfig(seed=2))
    assert [s[0] for s in a.samples[:5]] != [s[0] for s in b.samples[:5]]
    assert abs(a.estimate - b.estimate) <= a.estimate_halfwidth + b.estimate_halfwidth + 1e-3
    assert abs(a.mean_savings - b.mean_savings) <= a.ci_halfwidth + b.ci_halfwidth


def test_same_seed_same_result(tmp_path):
    f = lambda p: float(np.sin(3 * p[0]) + p[1])
    a = estimate_pi_c(f, McConfig(dims=2, seed=5, max_trials=90))
    b = estimate_pi_c(f, McConfig(dims=2, seed=5, max_trials=90))
    assert a == b
    a.write_csv(tmp_path / "mc.csv")
    assert (tmp_path / "mc.csv").read_text().startswith("trial,pi_c,savings")


def test_objective_failure_reports_trial():
    def bad(p):
        raise RuntimeError("boom")

    with pytest.raises(TrialError, match="trial 0"):
        estimate_pi_c(bad)


def test_config_validation():
    with pytest.raises(ValueError):
        McConfig(max_trials=1)
    with pytest.raises(ValueError):
        McConfig(ci_level=1.0)
