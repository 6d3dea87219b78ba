import math

import numpy as np
import pytest
from sklearn.base import clone

from fogplan._rng import make_rng
from fogplan.mde import (HISTORY_COLUMNS, MdeConfig, ModifiedDE, de_variation, evolve,
                         genome_distance, niche_count, niche_counts, rank, shared_fitness_max,
                         shared_fitness_min, sharing_value)


def sphere(x):
    return float(np.sum((np.asarray(x) - 0.5) ** 2))


def test_genome_distance():
    rng = np.random.default_rng(0)
    x = rng.random(5)
    assert genome_distance(x, x) == 0
    assert genome_distance([0.0], [1.0]) == 1
    for _ in range(100):
        a, b = rng.random(4), rng.random(4)
        assert genome_distance(a, b) == genome_distance(b, a)
    with pytest.raises(ValueError):
        genome_distance([0, 1], [0])


def test_sharing_kernel_boundaries():
    assert sharing_value(0.0, 0.3) == 1
    assert sharing_value(0.3, 0.3) == 0
    assert sharing_value(0.7, 0.3) == 0
    assert sharing_value(0.15, 0.3) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        sharing_value(0.1, 0.0)


def test_niche_counts():
    assert niche_count(0, [[0.2, 0.2]], 0.5) == 1
    twins = [[0.1, 0.1], [0.1, 0.1]]
    assert niche_count(0, twins, 0.5) == 2 and niche_count(1, twins, 0.5) == 2
    apart = np.eye(3)
    np.testing.assert_array_equal(niche_counts(apart, 1.0), np.ones(3))


def test_shared_fitness():
    assert shared_fitness_min(3, 1) == 3
    assert shared_fitness_min(3, 2) == 6
    assert shared_fitness_max(4, 1) == 4
    assert shared_fitness_max(4, 2) == 2
    raw, count = 5.0, 1.7
    assert shared_fitness_max(raw, count) * shared_fitness_min(raw, count) == pytest.approx(raw ** 2)


def test_sharing_neutral_when_niches_isolated():
    rng = np.random.default_rng(4)
    pop = np.eye(8)                  # pairwise distance sqrt(2)
    raw = rng.random(8) * 10
    counts = niche_counts(pop, rho=1.0)
    shared = [shared_fitness_min(r, c) for r, c in zip(raw, counts)]
    np.testing.assert_array_equal(rank(shared), rank(raw))


def test_rank_breaks_ties_by_index():
    np.testing.assert_array_equal(rank([2.0, 1.0, 2.0, 1.0]), [1, 3, 0, 2])


def test_de_variation_degenerate_cases():
    rng = np.random.default_rng(0)
    pop = rng.random((6, 4))
    cfg = MdeConfig(pop_size=6, diff_weight=0.0, crossover_rate=1.0)
    trial = de_variation(pop, 2, cfg, make_rng(1))
    assert any(np.array_equal(trial, pop[j]) for j in range(6) if j != 2)
    same = np.tile(rng.random(4), (6, 1))
    np.testing.assert_array_equal(de_variation(same, 0, MdeConfig(), make_rng(2)), same[0])


def test_de_variation_stays_in_box():
    rng = make_rng(5)
    pop = rng.random((10, 3))
    cfg = MdeConfig(pop_size=10, diff_weight=1.5)
    for k in range(10_000):
        t = de_variation(pop, k % 10, cfg, rng)
        assert t.min() >= 0.0 and t.max() <= 1.0


def test_config_validation():
    with pytest.raises(ValueError):
        MdeConfig(pop_size=3)
    with pytest.raises(ValueError):
        MdeConfig(niche_radius=0)
    with pytest.raises(ValueError):
        MdeConfig(crossover_rate=1.5)


def test_sphere_smoke():
    opt = ModifiedDE(pop_size=40, max_generations=200, stall_generations=200, seed=0)
    opt.fit(sphere, n_genes=10)
    assert opt.best_.raw_fitness < 1e-3
    rng = make_rng(9)
    random_best = min(sphere(rng.random(10)) for _ in range(40 * 201))
    assert random_best >= 10 * opt.best_.raw_fitness


def test_best_ever_is_monotone():
    opt = ModifiedDE(pop_size=12, max_generations=60, seed=3).fit(sphere, n_genes=6)
    best = [row["best_raw"] for row in opt.history_]
    assert all(b <= a for a, b in zip(best, best[1:]))
    assert list(opt.history_[0]) == list(HISTORY_COLUMNS)


def test_determinism():
    a = ModifiedDE(pop_size=10, max_generations=30, seed=7).fit(sphere, n_genes=5)
    b = ModifiedDE(pop_size=10, max_generations=30, seed=7).fit(sphere, n_genes=5)
    assert a.history_ == b.history_
    np.testing.assert_array_equal(a.best_.genome, b.best_.genome)


def test_thread_count_does_not_change_result(monkeypatch):
    a = ModifiedDE(pop_size=10, max_generations=20, seed=7).fit(sphere, n_genes=5)
    monkeypatch.setenv("FOGPLAN_THREADS", "4")
    b = ModifiedDE(pop_size=10, max_generations=20, seed=7).fit(sphere, n_genes=5)
    assert a.history_ == b.history_


def test_penalised_objective_tracks_feasibility():
    def objective(x):
        return float(x[0]), max(0.0, 0.3 - float(x[1]))

    opt = ModifiedDE(pop_size=10, max_generations=40, seed=1).fit(objective, n_genes=2)
    assert opt.best_feasible_ is not None and opt.best_feasible_.feasible
    assert opt.best_feasible_.genome[1] >= 0.3


def test_evolve_reports_infeasible_best():
    best, history = evolve(lambda x: (1.0, 1.0), MdeConfig(pop_size=4, max_generations=3),
                           n_genes=2)
    assert best.penalty == 1.0
    assert len(history) >= 2


def test_bimodal_niching_keeps_both_basins():
    def bimodal(x):
        u = float(x[0])
        return min((u - 0.2) ** 2, (u - 0.8) ** 2)

    opt = ModifiedDE(pop_size=40, niche_radius=0.3, max_generations=100, stall_generations=100,
                     seed=0).fit(bimodal, n_genes=1)
    u = opt.population_[:, 0]
    left, right = np.mean(u < 0.5), np.mean(u >= 0.5)
    assert left >= 0.2 and right >= 0.2


def test_estimator_api(tmp_path):
    opt = ModifiedDE(pop_size=8, max_generations=5)
    assert clone(opt).get_params() == opt.get_params()
    assert ModifiedDE.from_config(opt.config).get_params()["pop_size"] == 8
    opt.fit(sphere, n_genes=3)
    path = tmp_path / "history.csv"
    opt.write_history(path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(HISTORY_COLUMNS)
    assert len(lines) == len(opt.history_) + 1
