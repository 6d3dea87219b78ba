import numpy as np
import pytest

from fogplan.feasibility import check_all
from fogplan.params import pilot_params
from fogplan.problem import (TOY_SCENARIOS, ToyVanetProblem, grid_oracle, pilot_problem,
                             restrict_seed, small_instance, toy_breakdown, toy_brute_force,
                             toy_cost, toy_feasible, toy_upload_delay)


@pytest.fixture(scope="module")
def pilot():
    return pilot_problem(pilot_params(), 0, consumer_cities=20)


def _full_path(problem, genome):
    dv = problem.decode(genome)
    return problem.cost(dv), check_all(dv, problem.topo, problem.params).penalty()


@pytest.mark.parametrize("which", ["pilot", "toy", "small"])
def test_fast_decode_matches_repair_and_checks(which, pilot):
    problem = {"pilot": pilot, "toy": ToyVanetProblem(), "small": small_instance(3)}[which]
    rng = np.random.default_rng(0)
    for k in range(40):
        g = rng.random(problem.n_genes)
        if k % 3 == 0:
            g = g * (g > 0.9)
        cost, pen = _full_path(problem, g)
        plan, fast_pen = problem.fast_decode(g)
        assert fast_pen == pytest.approx(pen, rel=1e-9, abs=1e-12)
        assert problem.plan_cost(plan) == pytest.approx(cost, rel=1e-12)


def test_genome_round_trip(pilot):
    rng = np.random.default_rng(1)
    dv = pilot.decode(rng.random(pilot.n_genes))
    again = pilot.decode(pilot.encode(dv))
    assert again == dv


def test_all_zero_genome_is_the_greedy_plan(pilot):
    dv = pilot.decode(np.zeros(pilot.n_genes))
    assoc, host = pilot.assignment(dv)
    assert np.all(assoc >= 0)
    assert check_all(dv, pilot.topo, pilot.params).feasible


def test_evaluate_is_memoised(pilot):
    g = np.random.default_rng(2).random(pilot.n_genes)
    first = pilot.evaluate(g)
    assert pilot.evaluate(g.copy()) == first


def test_toy_scenario_costs_are_exact():
    assert toy_cost(*TOY_SCENARIOS[1]).total == 73
    assert toy_cost(*TOY_SCENARIOS[2]).total == 43
    b1 = toy_breakdown(*TOY_SCENARIOS[1])
    assert (b1.extra["upload"], b1.extra["vm"], b1.extra["inter_rsu"]) == (20, 8, 45)
    b2 = toy_breakdown(*TOY_SCENARIOS[2])
    assert (b2.extra["upload"], b2.extra["vm"], b2.extra["inter_rsu"]) == (15, 8, 20)


def test_toy_upload_delays():
    assert max(toy_upload_delay(TOY_SCENARIOS[1][0])) == 1
    assert max(toy_upload_delay(TOY_SCENARIOS[2][0])) == pytest.approx(0.25)


def test_toy_problem_prices_scenarios_like_the_fixture():
    prob = ToyVanetProblem()
    for k in (1, 2):
        g = prob.encode_assignment(*TOY_SCENARIOS[k])
        assert prob.evaluate(g) == (toy_cost(*TOY_SCENARIOS[k]).total, 0.0)


def test_brute_force_optimum():
    cost, assoc, host = toy_brute_force()
    assert cost == 23
    assert toy_feasible(assoc, host)
    assert toy_cost(assoc, host).total == cost


def test_grid_oracle_beats_the_greedy_genome():
    prob = small_instance(0)
    best, *_ = grid_oracle(prob, n_grid=10)
    assert best <= prob.evaluate(np.zeros(prob.n_genes))[0] + 1e-12


def test_restrict_seed_carries_assignment_to_a_bigger_network():
    p = pilot_params()
    small = pilot_problem(p.with_(n_fogs=20), 0, consumer_cities=20)
    big = pilot_problem(p.with_(n_fogs=30), 0, consumer_cities=20)
    dv = small.decode(np.zeros(small.n_genes))
    g = restrict_seed(small, dv, big)
    a1, h1 = small.assignment(dv)
    a2, h2 = big.assignment(big.decode(g))
    np.testing.assert_array_equal(a1, a2)
    np.testing.assert_array_equal(h1, h2)


def test_restrict_seed_drops_consumers_when_shrinking():
    p = pilot_params()
    big = pilot_problem(p.with_(n_consumers=90), 0, consumer_cities=20)
    small = pilot_problem(p.with_(n_consumers=60), 0, consumer_cities=20)
    dv = big.decode(np.zeros(big.n_genes))
    g = restrict_seed(big, dv, small)
    assert g.shape == (small.n_genes,)
    assert small.evaluate(g)[1] == 0
