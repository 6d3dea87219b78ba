import json

import numpy as np
import pytest

from fogplan._rng import make_rng
from fogplan.costmodel import (CSV_COLUMNS, CostBreakdown, FlowPlan, LatencyTerms,
                               PlacementError, UnservedConsumerError, cloud_comp_power,
                               dispatch_latency, emission_cost, evaluate_fog_path, fne,
                               fne_regime, fog_comm_cost, fog_comp_power, interfog_latency,
                               net_power, total_cloud_cost, total_fog_cost, traffic_cost,
                               upload_latency)
from fogplan.params import ScenarioParams
from fogplan.problem import toy_cost, TOY_SCENARIOS
from fogplan.topology import generate_topology


@pytest.fixture(scope="module")
def scenario():
    p = ScenarioParams(n_consumers=2000, n_fogs=12, n_servers=2, max_consumers=5000)
    topo = generate_topology(p, seed=3)
    return p, topo, FlowPlan.from_topology(topo, p)


def test_upload_latency():
    assert upload_latency(1.0, 1, 1.0) == 1.0
    assert upload_latency(1.0, 4, 1.0) == 0.25
    assert upload_latency(0.0, 3, 7.0) == 0.0
    with pytest.raises(UnservedConsumerError):
        upload_latency(1.0, 0, 1.0)


def test_interfog_and_dispatch_latency():
    assert interfog_latency(10, 5) == 2
    assert interfog_latency(0, 3) == 0
    assert 3 * interfog_latency(5, 1) == 15
    with pytest.raises(ValueError):
        interfog_latency(1, 0)
    assert dispatch_latency(2, 3) == 6
    assert dispatch_latency(0.7, 0) == 0
    assert dispatch_latency(0.7, 8) == 2 * dispatch_latency(0.7, 4)


def test_fog_comm_cost_branches():
    lat = LatencyTerms(1, 1, 1, 1, 1)
    assert fog_comm_cost(lat, 0.5, 0.0, 1.0) == pytest.approx(3.5)
    lat = LatencyTerms(1, 2, 3, 4, 5)
    assert fog_comm_cost(lat, 1.0, 0.3, 2.0) == pytest.approx(2 * (1 + 2 + 3))
    assert fog_comm_cost(lat, 0.0, 1.0, 1.0) == pytest.approx(1 + 2 + 4)


def test_traffic_cost():
    assert traffic_cost(np.zeros((2, 3)), np.ones((2, 2)), np.ones((3, 3))) == 0
    P = np.array([[1, 0], [0, 1]])
    theta = np.array([[0, 5], [0, 0]])
    U = np.array([[0, 2], [2, 0]])
    assert traffic_cost(P, theta, U) == 10
    with pytest.raises(PlacementError):
        traffic_cost(np.array([[1, 1]]), np.zeros((1, 1)), np.ones((2, 2)))


def test_toy_inter_rsu_cost():
    assert toy_cost(*TOY_SCENARIOS[2]).inter_rsu == 20


def test_fog_comp_power():
    assert fog_comp_power([2], (1, 0, 0), 1, 1, 1) == 4
    assert fog_comp_power([2], (1, 0, 0), 1, 1, 0) == 0
    assert fog_comp_power([6], (1, 0, 0), 1, 1, 1) > 2 * fog_comp_power([3], (1, 0, 0), 1, 1, 1)
    p = lambda y: fog_comp_power([y], (0.5, 2.0, 1.0), 1, 1, 1)
    assert p(3.0) < 0.5 * (p(1.0) + p(5.0))
    with pytest.raises(ValueError):
        fog_comp_power([1], (0, 1, 0), 1, 1, 1)


def test_cloud_comp_power():
    assert cloud_comp_power(1, 1, 2, (1, 0, 3), 0) == 8
    assert cloud_comp_power(0, 5, 2, (1, 0, 3), 0) == 0
    assert cloud_comp_power(1, 3, 1.5, (2, 5, 2.5), 0) == pytest.approx(31.54, abs=0.01)
    with pytest.raises(ValueError):
        cloud_comp_power(1, 1, 2, (1, 0, 2), 0)


def test_emission_unit_chain():
    p = ScenarioParams(emission_price=1, emission_rate=1, pue=1)
    assert emission_cost(1.0, p, beta_c=1, hours=1) == 0
    assert emission_cost(0.0, p, beta_c=1, hours=1) == pytest.approx(0.001)
    half = ScenarioParams(emission_price=1, emission_rate=1, pue=0.5)
    assert emission_cost(0.0, half, 1, 1) == pytest.approx(0.5 * emission_cost(0.0, p, 1, 1))


def test_fne_and_regimes():
    assert fne(0, 10) == 1.0 and fne_regime(fne(0, 10)) == "Edge"
    assert fne(10, 10) == 0.0 and fne_regime(0.0) == "Pure cloud"
    assert fne(2, 10) == pytest.approx(0.8)
    with pytest.raises(ValueError):
        fne(0, 0)


def test_fne_matches_pi_f_under_bernoulli_dispatch():
    rng = make_rng(11)
    n = 100_000
    for pi_f in (0.2, 0.5, 0.9):
        to_cloud = int((rng.random(n) < 1 - pi_f).sum())
        assert abs(fne(to_cloud, n) - pi_f) <= 0.01


def test_breakdown_additivity_and_serialisation(scenario):
    p, topo, plan = scenario
    for b in (evaluate_fog_path(plan, topo, p), total_cloud_cost(plan, topo, p)):
        assert b.total == b.comm + b.comp + b.cons + b.ems
        assert min(b.comm, b.comp, b.cons, b.ems) > 0
        back = CostBreakdown.from_dict(json.loads(b.to_json()))
        assert back.total == pytest.approx(b.total, rel=1e-15)
        assert len(b.to_row("x", 1, 0.5)) == len(CSV_COLUMNS)


def test_zero_workload_is_all_zero(scenario):
    p, topo, plan = scenario
    empty = FlowPlan(plan.assoc[:0], plan.host[:0], plan.count[:0], plan.bus[:0], plan.rate[:0])
    assert total_cloud_cost(empty, topo, p).total == 0
    assert total_fog_cost(empty, topo, p).total == 0


def test_degenerate_offload_equals_cloud(scenario):
    p, topo, plan = scenario
    cloud = total_cloud_cost(plan, topo, p)
    mixed = total_fog_cost(plan, topo, p.with_(pi_c=1.0), bv1=0.0)
    assert mixed.total == pytest.approx(cloud.total, rel=1e-9)
    pure = total_fog_cost(plan, topo, p.with_(pi_c=0.0), bv1=1.0)
    assert pure.total == pytest.approx(evaluate_fog_path(plan, topo, p).total, rel=1e-12)


def test_expected_cost_is_linear_in_pi_c(scenario):
    p, topo, plan = scenario
    c0 = total_fog_cost(plan, topo, p.with_(pi_c=0.0)).total
    c1 = total_fog_cost(plan, topo, p.with_(pi_c=1.0)).total
    mid = total_fog_cost(plan, topo, p.with_(pi_c=0.3)).total
    assert mid == pytest.approx(0.7 * c0 + 0.3 * c1, rel=1e-12)


def test_edge_regime_has_no_cloud_terms(scenario):
    p, topo, plan = scenario
    lat = evaluate_fog_path(plan, topo, p.with_(pi_f=1.0)).latency_terms
    assert lat.dispatch == 0 and lat.cloud_comp == 0


def test_latency_monotone_in_bus_and_rate(scenario):
    p, topo, plan = scenario
    base = evaluate_fog_path(plan, topo, p).latency_terms.service
    more_bu = FlowPlan(plan.assoc, plan.host, plan.count, plan.bus * 2, plan.rate)
    assert evaluate_fog_path(more_bu, topo, p).latency_terms.service <= base
    busier = FlowPlan(plan.assoc, plan.host, plan.count, plan.bus, plan.rate * 1.5)
    assert evaluate_fog_path(busier, topo, p).latency_terms.service >= base


def test_net_power_matches_straight_line_recomputation(scenario):
    p, topo, plan = scenario
    req = plan.count * plan.rate
    load = np.zeros(topo.n_fogs)
    for h, r in zip(plan.host, req):
        load[h] += r
    up = req.sum() * p.packet_bytes
    tx = p.tx_energy_af * up + (1 - p.pi_f) * p.tx_energy_fc * load.sum() * p.packet_bytes
    tx += len(set(plan.assoc) | set(plan.host)) * (p.router_power_1g_w + p.router_power_10g_w)
    a, b, c = p.fog_power_coeffs
    fog = 0.0
    for f in range(topo.n_fogs):
        if load[f] > 0:
            y = load[f] * p.packet_bytes
            fog += p.fog_comp_energy * p.fog_weight * (a * y * y + b * y + c)
            fog += topo.fog_nodes[f].energy_rate
    A, B, D = p.cloud_power_coeffs
    cloud = 0.0
    for j in range(topo.n_servers):
        lam = sum((1 - p.pi_f) * load[f] for f in range(topo.n_fogs) if topo.server_of_fog[f] == j)
        if lam > 0:
            mu = p.cloud_service_rate
            n = int(lam // (mu * p.cloud_target_util)) + 1
            cloud += n * (A * p.cpu_freq_ghz ** D + B)
    assert net_power(plan, topo, p) == pytest.approx(tx + fog + cloud, rel=1e-12)


def test_net_power_zero_traffic():
    p = ScenarioParams(n_consumers=0, n_fogs=4, n_servers=1)
    topo = generate_topology(p)
    assert net_power(FlowPlan.from_topology(topo, p), topo, p) == 0
