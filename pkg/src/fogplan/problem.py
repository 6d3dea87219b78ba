"""Placement problems exposed to the optimizer, plus the worked-example fixtures.

A :class:`PlacementProblem` maps a box genome in ``[0, 1]^n`` to a repaired
:class:`~fogplan.feasibility.DecisionVector` and scores it.  The genome holds,
per consumer, one relaxed binary gene for every candidate ingress FCN and one
for every candidate VM host, followed by one continuous gene per cloud server
(its normalised CPU frequency).
"""

import itertools
import math
from collections import OrderedDict
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .costmodel import (CostBreakdown, FlowPlan, LatencyTerms, interfog_latency, total_fog_cost,
                        traffic_cost, weighted_latency)
from .feasibility import DecisionVector, check_all, repair
from .queueing import min_servers, mm1_latency, mmn_response_time
from .params import ScenarioParams
from .topology import City, CloudServer, FogNode, Topology, generate_topology

THRESHOLD = 0.5


class PlacementProblem:
    """Genome codec and objective for a fixed topology.

    Parameters
    ----------
    topo, params
        Network and scenario.
    assoc_candidates, host_candidates : list of int arrays, optional
        Per consumer, the FCNs it may upload to and the FCNs that may host its
        VM.  Default: the consumer's reachable FCNs for association and every
        FCN for hosting, since repair may relocate a VM anywhere.
    demand : array, optional
        Per-consumer request rate; ``params.arrival_rate`` by default.
    penalty_weight : float
        Multiplier on the constraint-violation magnitude added to the cost.
    """

    def __init__(self, topo, params, assoc_candidates=None, host_candidates=None,
                 demand=None, penalty_weight=1e4):
        self.topo = topo
        self.params = params
        reach = topo.reach_matrix()
        listed = [np.nonzero(row)[0] for row in reach]
        self.assoc_candidates = [np.asarray(c, np.int64) for c in (assoc_candidates or listed)]
        every = [np.arange(topo.n_fogs)] * topo.n_consumers
        self.host_candidates = [np.asarray(c, np.int64) for c in (host_candidates or every)]
        n = topo.n_consumers
        self.demand = (np.full(n, float(params.arrival_rate)) if demand is None
                       else np.asarray(demand, float))
        self.penalty_weight = penalty_weight
        self._reach = reach

        sizes = [len(c) for c in self.assoc_candidates] + [len(c) for c in self.host_candidates]
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        self._assoc_slices = [slice(offsets[i], offsets[i + 1]) for i in range(n)]
        self._host_slices = [slice(offsets[n + i], offsets[n + i + 1]) for i in range(n)]
        self._cont = slice(offsets[-1], offsets[-1] + topo.n_servers)
        self.n_genes = int(offsets[-1]) + topo.n_servers
        self._n_binary = int(offsets[-1])
        cdist = topo.consumer_fog_dist()
        self._listed_order = [np.lexsort((row, cdist[a][row])) for a, row in enumerate(listed)]
        self._listed_order = [row[o] for row, o in zip(listed, self._listed_order)]
        self._cache = OrderedDict()
        self.cache_size = 100_000

    # codec ----------------------------------------------------------------

    def _blank(self):
        dv = DecisionVector.empty(self.topo.n_consumers, self.topo.n_fogs, self.topo.n_bus,
                                  self.topo.n_servers, self.params.cpu_freq_ghz)
        dv.bv_l[:] = self._reach
        return dv

    def decode(self, genome):
        """Threshold the binary genes at 0.5, set frequencies, then repair."""
        g = np.asarray(genome, dtype=float)
        if g.shape != (self.n_genes,):
            raise ValueError(f"genome must have {self.n_genes} genes")
        dv = self._blank()
        for a in range(self.topo.n_consumers):
            on = self.assoc_candidates[a][g[self._assoc_slices[a]] >= THRESHOLD]
            dv.bv2[a, on] = 1
            on = self.host_candidates[a][g[self._host_slices[a]] >= THRESHOLD]
            dv.bv5[a, on] = 1
        for j, srv in enumerate(self.topo.servers):
            lo, hi = srv.cpu_freq_range
            dv.cpu_freq[j] = lo + g[self._cont][j] * (hi - lo)
        return repair(dv, self.topo, self.params, demand=self.demand)

    def encode(self, dv):
        """Genome whose decoding reproduces the binaries of a repaired ``dv``."""
        g = np.zeros(self.n_genes)
        served = dv.service_load()
        for a in range(self.topo.n_consumers):
            g[self._assoc_slices[a]] = dv.bv2[a, self.assoc_candidates[a]]
            g[self._host_slices[a]] = served[a, self.host_candidates[a]] > 0
        for j, srv in enumerate(self.topo.servers):
            lo, hi = srv.cpu_freq_range
            g[self._cont][j] = 0.0 if hi == lo else (dv.cpu_freq[j] - lo) / (hi - lo)
        return g

    def encode_assignment(self, assoc, host, freq=None):
        """Genome for an explicit (association, host) pair per consumer."""
        g = np.zeros(self.n_genes)
        for a, (f, h) in enumerate(zip(assoc, host)):
            g[self._assoc_slices[a]] = self.assoc_candidates[a] == f
            g[self._host_slices[a]] = self.host_candidates[a] == h
        if freq is not None:
            for j, srv in enumerate(self.topo.servers):
                lo, hi = srv.cpu_freq_range
                g[self._cont][j] = 0.0 if hi == lo else (freq[j] - lo) / (hi - lo)
        return g

    @staticmethod
    def assignment(dv):
        """(association, primary host) per consumer of a decision vector."""
        return dv.association(), np.argmax(dv.service_load(), axis=1)

    # objective -----------------------------------------------------------

    def cost(self, dv):
        """Expected fog-assisted cost of a repaired decision vector."""
        return self.plan_cost(FlowPlan.from_decision(dv, self.topo, self.params))

    def plan_cost(self, plan):
        return total_fog_cost(plan, self.topo, self.params, strict=False).total

    def evaluate(self, genome):
        """``(cost, penalty)`` of a genome; infinite costs become penalties.

        Results are memoised on the thresholded binary genes plus the exact
        continuous genes, which fully determine the decoded vector.
        """
        g = np.asarray(genome, dtype=float)
        key = np.packbits(g[:self._n_binary] >= THRESHOLD).tobytes() + g[self._n_binary:].tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        result = self._evaluate(g)
        self._cache[key] = result
        if len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)
        return result

    def _evaluate(self, genome):
        plan, pen = self.fast_decode(genome)
        value = self.plan_cost(plan)
        if not math.isfinite(value):
            pen += self.params.big_m
            value = 0.0
        return float(value), float(self.penalty_weight * pen)

    def __call__(self, genome):
        return self.evaluate(genome)

    def fast_decode(self, genome):
        """``(FlowPlan, penalty)`` of a genome without building the dense vector.

        Applies exactly the rules of :func:`~fogplan.feasibility.repair` to a
        freshly decoded vector (association, round-robin BUs, single host per
        consumer, lowest-traffic-first VM eviction, machine sizing) and
        returns the unweighted violation total that
        :func:`~fogplan.feasibility.check_all` would report.  The test suite
        checks the two paths agree.
        """
        topo, params = self.topo, self.params
        g = np.asarray(genome, dtype=float)
        A, F = topo.n_consumers, topo.n_fogs
        hops = topo.interfog_hops
        bu_size = [len(f.bandwidth_units) for f in topo.fog_nodes]
        used = [0] * F
        assoc = np.full(A, -1, dtype=np.int64)
        for a in range(A):
            on = set(self.assoc_candidates[a][g[self._assoc_slices[a]] >= THRESHOLD].tolist())
            order = self._listed_order[a]
            pick = next((f for f in order if f in on and used[f] < bu_size[f]), None)
            if pick is None:
                pick = next((f for f in order if used[f] < bu_size[f]), None)
            if pick is not None:
                assoc[a] = pick
                used[pick] += 1

        n_bu = np.zeros(A)
        rank = np.zeros(A, dtype=np.int64)
        seen = [0] * F
        for a in np.nonzero(assoc >= 0)[0]:
            rank[a] = seen[assoc[a]]
            seen[assoc[a]] += 1
        ok = assoc >= 0
        m = np.array(seen)[assoc[ok]]
        nb = np.array(bu_size)[assoc[ok]]
        n_bu[ok] = nb // m + (rank[ok] < nb % m)

        served = ok & (self.demand > 0)
        host = np.full(A, -1, dtype=np.int64)
        for a in np.nonzero(served)[0]:
            f = assoc[a]
            sel = self.host_candidates[a][g[self._host_slices[a]] >= THRESHOLD]
            host[a] = sel[np.lexsort((sel, hops[f][sel]))[0]] if len(sel) else f

        cap_vm = np.array([fn.max_vms for fn in topo.fog_nodes])
        cap_sto = np.array([fn.storage_cap for fn in topo.fog_nodes])
        cap_proc = np.array([fn.proc_cap for fn in topo.fog_nodes])
        q_s, eps = params.app_storage_bytes, params.scale_factor
        idx = np.nonzero(served)[0]
        vms = np.bincount(host[idx], minlength=F)
        proc = np.bincount(host[idx], weights=self.demand[idx], minlength=F) * eps
        over = (vms > cap_vm) | (vms * q_s > cap_sto) | (proc > cap_proc + 1e-9)
        for f in np.nonzero(over)[0]:
            apps = idx[host[idx] == f]
            apps = apps[np.lexsort((apps, self.demand[apps]))]
            for a in apps:
                if vms[f] <= cap_vm[f] and vms[f] * q_s <= cap_sto[f] and proc[f] <= cap_proc[f] + 1e-9:
                    break
                src, moved = assoc[a], self.demand[a]
                for h in np.lexsort((np.arange(F), hops[src])):
                    if h == f:
                        continue
                    if (vms[h] + 1 <= cap_vm[h] and (vms[h] + 1) * q_s <= cap_sto[h]
                            and proc[h] + moved * eps <= cap_proc[h] + 1e-9):
                        host[a] = h
                        vms[f] -= 1
                        vms[h] += 1
                        proc[f] -= moved * eps
                        proc[h] += moved * eps
                        break

        load = np.bincount(host[idx], weights=self.demand[idx], minlength=F)
        dispatch = (1.0 - params.pi_f) * load
        D = topo.n_servers
        freq = np.full(D, params.cpu_freq_ghz)
        machines = np.zeros(D, dtype=np.int64)
        y = np.bincount(topo.server_of_fog, weights=dispatch, minlength=D)[:D] if D else np.zeros(0)
        cloud_excess = 0.0
        cloud_lat = np.zeros(max(D, 1))
        for j, srv in enumerate(topo.servers):
            lo, hi = srv.cpu_freq_range
            freq[j] = min(max(lo + g[self._cont][j] * (hi - lo), lo), hi)
            mu = params.cloud_rate(freq[j])
            if y[j] > 0:
                machines[j] = min(min_servers(y[j], mu, params.cloud_target_util),
                                  srv.machine_count_max)
                n = int(machines[j])
                cloud_lat[j] = mmn_response_time(n, y[j], mu) if n >= 1 and y[j] < n * mu else math.inf
            cloud_excess += max(0.0, y[j] - machines[j] * mu * (1.0 - params.stability_margin))

        rs = np.array([fn.service_rate for fn in topo.fog_nodes])
        fog_lat = np.zeros(F)
        for f in np.nonzero(load > 0)[0]:
            fog_lat[f] = mm1_latency(rs[f], load[f]) if load[f] < rs[f] else math.inf

        pen = float(A - ok.sum())
        pen += float(np.maximum(0, vms - cap_vm).sum())
        pen += float(np.maximum(0.0, vms * q_s - cap_sto).sum() / max(q_s, 1.0))
        pen += float(np.maximum(0.0, proc - cap_proc).sum())
        pen += float(np.maximum(0.0, load - rs * (1.0 - params.stability_margin)).sum())
        pen += cloud_excess

        if len(idx):
            h = host[idx]
            volume = self.demand[idx] * params.packet_bytes * params.slot_seconds
            upload = volume / (n_bu[idx] * params.bu_rate)
            interfog = hops[assoc[idx], h] * interfog_latency(params.payload, params.interfog_rate)
            if D:
                srv = topo.server_of_fog[h]
                disp = (2.0 * topo.fog_server_dist[h, srv] / params.wan_propagation_kmps
                        + params.wan_delay_factor * dispatch[h])
                cl = cloud_lat[srv]
            else:
                disp = cl = np.zeros(len(idx))
            raw = LatencyTerms(upload, fog_lat[h], interfog, disp, cl)
            chain = weighted_latency(raw, params.pi_f, params.pi_cs).service
            limit = params.delay_limit * (1.0 - params.stability_margin)
            pen += float(np.maximum(0.0, np.minimum(chain, params.big_m) - limit).sum())

        plan = FlowPlan(assoc[idx], host[idx], np.ones(len(idx)), n_bu[idx], self.demand[idx],
                        None, machines, freq)
        return plan, pen


# ---------------------------------------------------------------------------
# hand-built topologies


def build_topology(coords, consumers_per_city, fog_cities, server_coords=(), *,
                   bus_per_fog=1, service_rate=100.0, max_vms=4, storage_cap=64e9,
                   proc_cap=None, params=None, reach_radius=math.inf, hop_matrix=None,
                   preference=None, machine_cap=64):
    """Small explicit topology: one FCN per listed city, servers at given points."""
    params = params or ScenarioParams()
    cities = [City(i, f"city{i}", 1, tuple(map(float, xy))) for i, xy in enumerate(coords)]
    rates = np.broadcast_to(np.asarray(service_rate, float), (len(fog_cities),))
    fogs = [
        FogNode(id=f, city=int(c),
                bandwidth_units=tuple(range(f * bus_per_fog, (f + 1) * bus_per_fog)),
                per_bu_rate=params.bu_rate, service_rate=float(rates[f]), processing_elements=1,
                physical_servers=1, vm_cap_per_server=max_vms, storage_cap=storage_cap,
                proc_cap=float(rates[f]) if proc_cap is None else proc_cap,
                energy_rate=params.fog_energy_w)
        for f, c in enumerate(fog_cities)
    ]
    servers = [CloudServer(j, tuple(map(float, xy)), params.device_tiers[0],
                           params.tier_power_mw[0], machine_cap, tuple(params.cpu_freq_range))
               for j, xy in enumerate(server_coords)]
    topo = Topology(cities, fogs, servers, np.asarray(consumers_per_city),
                    np.full(len(cities), float(reach_radius)), params.config_hash(), 0,
                    params.hop_length_km, hop_matrix, preference)
    return topo


# ---------------------------------------------------------------------------
# Vehicular example: 4 EVs, 10 RSUs in a hop graph


TOY_UPLINK = (5, 2, 2, 4, 3, 4, 4, 4, 4, 5)
TOY_EDGES = ((0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (2, 8), (3, 8), (8, 9))
TOY_PREFS = ((0,), (0, 1, 2), (0, 9), (0, 4))
TOY_VM_PRICE = 2
TOY_HOP_PRICE = 5
TOY_BUS = 4
TOY_SCENARIOS = {
    1: ((0, 0, 0, 0), (0, 2, 3, 9)),
    2: ((0, 2, 9, 4), (0, 1, 3, 5)),
}


def toy_hops():
    """All-pairs hop counts of the RSU graph by breadth-first search."""
    n = len(TOY_UPLINK)
    adj = [[] for _ in range(n)]
    for u, v in TOY_EDGES:
        adj[u].append(v)
        adj[v].append(u)
    hops = np.zeros((n, n), dtype=np.int64)
    for s in range(n):
        seen = {s: 0}
        frontier = [s]
        while frontier:
            nxt = []
            for u in frontier:
                for v in adj[u]:
                    if v not in seen:
                        seen[v] = seen[u] + 1
                        nxt.append(v)
            frontier = nxt
        hops[s] = [seen[v] for v in range(n)]
    return hops


def toy_params():
    """Unit-rate parameters: 1 request per time unit, one BU moves it in 1 unit."""
    return ScenarioParams(
        n_consumers=4, max_consumers=4, n_fogs=10, n_servers=1, bus_per_fog=TOY_BUS,
        packet_bytes=1.0, arrival_rate=1.0, access_link_bps=8.0 * TOY_BUS,
        interfog_payload=float(TOY_HOP_PRICE), interfog_link_bps=8.0,
        pi_f=1.0, delay_limit=1e6, app_storage_bytes=1.0, vm_price=TOY_VM_PRICE,
    )


def toy_topology(params=None):
    params = params or toy_params()
    n = len(TOY_UPLINK)
    prefs = [[u for u, lst in enumerate(TOY_PREFS) if f in lst] for f in range(n)]
    return build_topology(
        [(0.0, 0.1 * i) for i in range(n)], [len(TOY_PREFS)] + [0] * (n - 1), range(n),
        bus_per_fog=TOY_BUS, service_rate=100.0, max_vms=1, storage_cap=1.0,
        params=params, hop_matrix=toy_hops(), preference=prefs,
    )


@dataclass(frozen=True)
class ToyCost:
    upload: int
    vm: int
    inter_rsu: int

    @property
    def total(self):
        return self.upload + self.vm + self.inter_rsu


def toy_cost(assoc, host, hops=None):
    """Unit costs of the vehicular example: uplink + VM hosting + per-hop traffic.

    The inter-RSU term goes through :func:`traffic_cost`: each consumer gets an
    ingress pseudo-VM at its RSU linked with weight 1 to its processing VM,
    priced at ``hop price x hops``.
    """
    hops = toy_hops() if hops is None else hops
    n = len(assoc)
    P = np.zeros((2 * n, hops.shape[0]), dtype=np.int64)
    P[np.arange(n), assoc] = 1
    P[n + np.arange(n), host] = 1
    theta = np.zeros((2 * n, 2 * n))
    theta[np.arange(n), n + np.arange(n)] = 1
    inter = traffic_cost(P, theta, TOY_HOP_PRICE * hops)
    upload = sum(TOY_UPLINK[f] for f in assoc)
    vm = TOY_VM_PRICE * len(host)
    return ToyCost(int(upload), int(vm), int(round(inter)))


def toy_upload_delay(assoc):
    """Per-driver upload delay: one unit of data over the BUs it holds."""
    sharing = {f: list(assoc).count(f) for f in set(assoc)}
    return [Fraction(1, TOY_BUS // sharing[f]) for f in assoc]


def toy_breakdown(assoc, host):
    c = toy_cost(assoc, host)
    delay = toy_upload_delay(assoc)
    return CostBreakdown(comm=c.upload, comp=c.vm + c.inter_rsu, cons=0, ems=0,
                         extra={"upload": c.upload, "vm": c.vm, "inter_rsu": c.inter_rsu,
                                "upload_delay": str(max(delay))})


def toy_feasible(assoc, host):
    """BU and VM capacity of an explicit toy assignment."""
    if any(f not in TOY_PREFS[u] for u, f in enumerate(assoc)):
        return False
    if any(list(assoc).count(f) > TOY_BUS for f in set(assoc)):
        return False
    return len(set(host)) == len(host)


def toy_brute_force():
    """Exhaustive optimum over every association and VM placement of the fixture.

    Returns ``(cost, assoc, host)``; ties resolve to the lexicographically
    first association, then host tuple.
    """
    hops = toy_hops()
    uplink = np.asarray(TOY_UPLINK)
    n = len(TOY_PREFS)
    hosts = np.array(list(itertools.permutations(range(len(TOY_UPLINK)), n)))
    best = None
    for assoc in itertools.product(*TOY_PREFS):
        a = np.asarray(assoc)
        costs = uplink[a].sum() + TOY_VM_PRICE * n + TOY_HOP_PRICE * hops[a, hosts].sum(axis=1)
        k = int(np.argmin(costs))
        if best is None or costs[k] < best[0]:
            best = (int(costs[k]), tuple(assoc), tuple(int(h) for h in hosts[k]))
    return best


class ToyVanetProblem(PlacementProblem):
    """The vehicular example in unit-cost mode; VMs may sit on any RSU."""

    def __init__(self, penalty_weight=100.0):
        params = toy_params()
        topo = toy_topology(params)
        every = [np.arange(topo.n_fogs)] * topo.n_consumers
        super().__init__(topo, params, [np.array(p) for p in TOY_PREFS], every,
                         penalty_weight=penalty_weight)
        self._hops = topo.interfog_hops

    def plan_cost(self, plan):
        if len(plan.assoc) < self.topo.n_consumers:
            return math.inf
        return float(toy_cost(plan.assoc, plan.host, self._hops).total)

    def scenario_vector(self, scenario):
        assoc, host = TOY_SCENARIOS[scenario]
        return self.decode(self.encode_assignment(assoc, host))


# ---------------------------------------------------------------------------
# 2-consumer / 2-FCN / 2-BU instances for exhaustive checks


def small_instance(seed, n_grid=10):
    """Random tiny network with one cloud server and an explicit CPU-frequency trade-off."""
    rng = np.random.default_rng(seed)
    params = ScenarioParams(
        n_consumers=2, max_consumers=2, n_fogs=2, n_servers=1, bus_per_fog=2,
        arrival_rate=float(rng.uniform(2.0, 6.0)), pi_f=float(rng.uniform(0.2, 0.8)),
        cycles_per_request=2.5e8, horizon=3600, alpha_comm=float(rng.uniform(0.05, 0.5)),
        packet_bytes=512.0, delay_limit=10.0,
    )
    coords = rng.uniform([-10, -10], [10, 10], size=(2, 2))
    rates = rng.uniform(8.0, 20.0, size=2)
    topo = build_topology(coords, [1, 1], [0, 1], [tuple(rng.uniform(-10, 10, 2))],
                          bus_per_fog=2, service_rate=rates, max_vms=2, params=params,
                          machine_cap=8)
    return PlacementProblem(topo, params)


def price_assignment(problem, assoc, host, freq):
    """Cost of an explicit assignment, or ``inf`` when it is infeasible.

    Independent of the genome codec: the assignment is written straight into
    a decision vector, repaired (which only fills derived flows) and priced.
    """
    topo, params = problem.topo, problem.params
    dv = problem._blank()
    for a in range(topo.n_consumers):
        dv.bv2[a, assoc[a]] = 1
        dv.bv5[a, host[a]] = 1
    dv.cpu_freq[:] = freq
    dv = repair(dv, topo, params, demand=problem.demand)
    if not check_all(dv, topo, params).feasible or tuple(dv.association()) != tuple(assoc):
        return math.inf
    return problem.cost(dv)


def grid_oracle(problem, n_grid=10):
    """Enumerate every association/host pair with CPU frequencies on a grid.

    Returns ``(best cost, assoc, host, freq)``.
    """
    grids = [np.linspace(*s.cpu_freq_range, n_grid) for s in problem.topo.servers]
    best = (math.inf, None, None, None)
    for assoc in itertools.product(*problem.assoc_candidates):
        for host in itertools.product(*problem.host_candidates):
            for freq in itertools.product(*grids):
                c = price_assignment(problem, assoc, host, freq)
                if c < best[0]:
                    best = (c, assoc, host, freq)
    return best


# ---------------------------------------------------------------------------
# pilot network


def pilot_problem(params, seed=0, consumer_cities=None):
    if consumer_cities is not None:
        params = params.with_(consumer_cities=consumer_cities)
    topo = generate_topology(params, seed)
    return PlacementProblem(topo, params)


def restrict_seed(problem_from, dv_from, problem_to):
    """Carry an assignment to another pilot problem by consumer identity.

    Consumers are identified by (city, rank within city); FCNs by city.  The
    carried assignment is a genome for ``problem_to``, ready to seed the
    optimizer.  Consumers without a counterpart fall back to the greedy
    default (all genes zero).
    """
    t_from, t_to = problem_from.topo, problem_to.topo
    assoc, host = problem_from.assignment(dv_from)

    def identities(topo):
        ids = []
        for c, k in enumerate(topo.consumers_per_city):
            ids.extend((c, r) for r in range(k))
        return ids

    src = {ident: a for a, ident in enumerate(identities(t_from))}
    fog_city_from = [f.city for f in t_from.fog_nodes]
    fog_of_city_to = {f.city: f.id for f in t_to.fog_nodes}
    new_assoc, new_host = [], []
    for ident in identities(t_to):
        a = src.get(ident)
        f = h = -1
        if a is not None and assoc[a] >= 0:
            f = fog_of_city_to.get(fog_city_from[assoc[a]], -1)
            h = fog_of_city_to.get(fog_city_from[host[a]], -1)
        new_assoc.append(f)
        new_host.append(h)
    freq = [dv_from.cpu_freq[j] for j in range(min(len(dv_from.cpu_freq), t_to.n_servers))]
    if len(freq) < t_to.n_servers:
        freq = None
    return problem_to.encode_assignment(new_assoc, new_host, freq)


def greedy_assignment(problem):
    """Nearest listed FCN, processed in place: the all-zeros genome."""
    return np.zeros(problem.n_genes)

