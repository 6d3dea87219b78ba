"""Latency, power, emission and cost profiles for fog-assisted and cloud-only runs.

The primitive functions map one-to-one onto the cost terms of the model.  The
scenario evaluators (:func:`total_cloud_cost`, :func:`total_fog_cost`) compose
them over a :class:`FlowPlan`, which groups consumers by ingress FCN and
processing FCN so the same code serves a 10^5-consumer city topology and a
per-consumer decision vector.
"""

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .queueing import UnstableQueueError, min_servers, mm1_latency, mmn_response_time

HOURS_PER_YEAR = 8760.0

CSV_COLUMNS = (
    "scenario_id", "n_consumers", "fne", "comm", "comp", "cons", "ems", "total",
    "lat_upload", "lat_fogcomp", "lat_interfog", "lat_dispatch", "lat_cloudcomp",
    "power_tx", "power_fog", "power_cloud",
)


class UnservedConsumerError(ValueError):
    """A consumer has no bandwidth unit allocated."""


class PlacementError(ValueError):
    """A VM placement matrix is not one-hot per VM."""


# ---------------------------------------------------------------------------
# latency terms


def upload_latency(volume, allocated_bus, bu_rate):
    """Time to push ``volume`` bytes over ``allocated_bus`` BUs of rate ``bu_rate``."""
    if allocated_bus <= 0:
        raise UnservedConsumerError("consumer has no bandwidth unit allocated")
    return volume / (allocated_bus * bu_rate)


def interfog_latency(payload, link_rate):
    if link_rate <= 0:
        raise ValueError("inter-fog link rate must be > 0")
    return payload / link_rate


def dispatch_latency(wan_factor, dispatch_rate):
    if wan_factor < 0 or dispatch_rate < 0:
        raise ValueError("WAN factor and dispatch rate must be >= 0")
    return wan_factor * dispatch_rate


class LatencyTerms(NamedTuple):
    upload: float = 0.0
    fog_comp: float = 0.0
    interfog: float = 0.0
    dispatch: float = 0.0
    cloud_comp: float = 0.0

    @property
    def transmission(self):
        return self.upload + self.interfog + self.dispatch

    @property
    def processing(self):
        return self.fog_comp + self.cloud_comp

    @property
    def service(self):
        return self.transmission + self.processing


class PowerTerms(NamedTuple):
    tx: float = 0.0
    fog_comp: float = 0.0
    cloud_comp: float = 0.0

    @property
    def total(self):
        return self.tx + self.fog_comp + self.cloud_comp


def weighted_latency(lat, pi_f, pi_cs):
    """Apply the fog/cloud branch probabilities to raw latency terms."""
    return LatencyTerms(
        lat.upload,
        lat.fog_comp,
        pi_f * lat.interfog,
        (1.0 - pi_f) * lat.dispatch,
        (1.0 - pi_f) * (1.0 - pi_cs) * lat.cloud_comp,
    )


def fog_comm_cost(lat, pi_f, pi_cs, alpha):
    """Latency-to-cost conversion of one fog-path request."""
    for p in (pi_f, pi_cs):
        if not 0.0 <= p <= 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
    return alpha * weighted_latency(LatencyTerms(*lat), pi_f, pi_cs).service


# ---------------------------------------------------------------------------
# computation / traffic cost


def traffic_cost(vm_placement, inter_vm_traffic, unit_price):
    """Aggregate inter-VM traffic cost ``sum P[i,f] P[j,f'] Theta[i,j] U[f,f']``.

    Rows of ``vm_placement`` are VMs, columns FCNs; an all-zero row is an
    unplaced VM and contributes nothing.
    """
    P = np.asarray(vm_placement, dtype=float)
    theta = np.asarray(inter_vm_traffic, dtype=float)
    U = np.asarray(unit_price, dtype=float)
    if P.ndim != 2:
        raise PlacementError("placement must be a VM x FCN matrix")
    if not np.all((P == 0) | (P == 1)) or np.any(P.sum(axis=1) > 1):
        raise PlacementError("each VM must be placed on at most one FCN")
    if np.any(U < 0):
        raise ValueError("unit traffic prices must be >= 0")
    return float(np.sum(theta * (P @ U @ P.T)))


# ---------------------------------------------------------------------------
# power


def fog_comp_power(loads, coeffs, weight, energy, associated):
    """Quadratic, strictly convex FCN computation power over a load window."""
    a, b, c = coeffs
    if a <= 0:
        raise ValueError("coefficient a must be > 0 for strict convexity")
    y = np.atleast_1d(np.asarray(loads, dtype=float))
    if np.any(y < 0):
        raise ValueError("loads must be >= 0")
    return float(associated * energy * weight * np.sum(a * y * y + b * y + c))


def cloud_comp_power(on, machines, freq, coeffs, associated):
    A, B, delta = coeffs
    if not 2.5 <= delta <= 3.0:
        raise ValueError("exponent Delta must lie in [2.5, 3]")
    if A < 0 or B < 0 or freq <= 0:
        raise ValueError("need A, B >= 0 and freq > 0")
    return float((1 - associated) * on * machines * (A * freq ** delta + B))


def transmission_power(upload_bytes, interfog_bytes, dispatch_bytes, pi_f, params, associated=1):
    """Network part of the net power: bytes/s times J/byte for each hop class."""
    return (associated * params.tx_energy_af * upload_bytes
            + pi_f * params.tx_energy_ff * interfog_bytes
            + (1.0 - pi_f) * params.tx_energy_fc * dispatch_bytes)


def emission_cost(pi_f, params, beta_c=None, hours=None):
    """Carbon cost of the cloud share over the horizon.

    ``R`` is in g/kWh and ``beta_c`` in W, so energy is integrated over
    ``hours`` and converted to kWh before pricing.
    """
    if not 0.0 <= pi_f <= 1.0:
        raise ValueError("pi_f must lie in [0, 1]")
    beta = params.cloud_server_power if beta_c is None else beta_c
    h = params.horizon_seconds / 3600.0 if hours is None else hours
    kwh = beta * h / 1000.0
    return (1.0 - pi_f) * params.emission_price * params.emission_rate * params.pue * kwh


# ---------------------------------------------------------------------------
# breakdown


@dataclass
class CostBreakdown:
    comm: float = 0.0
    comp: float = 0.0
    cons: float = 0.0
    ems: float = 0.0
    latency_terms: LatencyTerms = field(default_factory=LatencyTerms)
    power_terms: PowerTerms = field(default_factory=PowerTerms)
    extra: dict = field(default_factory=dict)

    @property
    def total(self):
        return self.comm + self.comp + self.cons + self.ems

    def to_dict(self):
        d = {k: float(getattr(self, k)) for k in ("comm", "comp", "cons", "ems")}
        d["total"] = float(self.total)
        d["latency_terms"] = {k: float(v) for k, v in self.latency_terms._asdict().items()}
        d["power_terms"] = {k: float(v) for k, v in self.power_terms._asdict().items()}
        d["extra"] = {k: np.asarray(v).tolist() for k, v in self.extra.items()}
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(d["comm"], d["comp"], d["cons"], d["ems"],
                   LatencyTerms(**d["latency_terms"]), PowerTerms(**d["power_terms"]),
                   d.get("extra", {}))

    def to_row(self, scenario_id="", n_consumers=0, fne=float("nan")):
        lt, pt = self.latency_terms, self.power_terms
        return [scenario_id, n_consumers, fne, self.comm, self.comp, self.cons, self.ems,
                self.total, lt.upload, lt.fog_comp, lt.interfog, lt.dispatch, lt.cloud_comp,
                pt.tx, pt.fog_comp, pt.cloud_comp]


def fne(packets_to_cloud, packets_into_fog):
    """Fog network efficiency: the share of fog-entering packets never sent to cloud."""
    if packets_into_fog <= 0:
        raise ValueError("no packets entered the fog network")
    if not 0 <= packets_to_cloud <= packets_into_fog:
        raise ValueError("packets_to_cloud must lie in [0, packets_into_fog]")
    return (packets_into_fog - packets_to_cloud) / packets_into_fog


FNE_REGIMES = ((1.0, "Edge"), (0.0, "Pure cloud"))


def fne_regime(value):
    for level, name in FNE_REGIMES:
        if value == level:
            return name
    return "Fog assisted cloud"


def expected_cost(bv1, fog_cost, cloud_cost, pi_c):
    """Offload expectation for one workload.

    A fog-eligible workload (``bv1 = 1``) reaches the fog with probability
    ``1 - pi_c`` and falls back to the cloud otherwise; a cloud-bound one
    (``bv1 = 0``) always pays the cloud cost.
    """
    return bv1 * ((1.0 - pi_c) * fog_cost + pi_c * cloud_cost) + (1.0 - bv1) * cloud_cost


# ---------------------------------------------------------------------------
# flow plans and scenario evaluation


@dataclass
class FlowPlan:
    """Consumers grouped by (ingress FCN, processing FCN).

    ``bus`` is the number of BUs each consumer of the group holds; values
    below one mean the group time-shares its FCN's uplink.
    """
    assoc: np.ndarray
    host: np.ndarray
    count: np.ndarray
    bus: np.ndarray
    rate: np.ndarray
    server: np.ndarray | None = None        # per FCN: target cloud server
    machines: np.ndarray | None = None      # per server: machines switched on
    freq: np.ndarray | None = None          # per server: CPU frequency, GHz

    @classmethod
    def from_topology(cls, topo, params, rate=None):
        """City clusters associated to their nearest FCN, processed in place."""
        home = np.argmin(topo.city_fog_dist, axis=1)
        counts = np.bincount(home, weights=topo.consumers_per_city, minlength=topo.n_fogs)
        fogs = np.nonzero(counts > 0)[0]
        n_bu = np.array([len(topo.fog_nodes[f].bandwidth_units) for f in fogs], float)
        r = params.arrival_rate if rate is None else rate
        return cls(fogs, fogs.copy(), counts[fogs], n_bu / counts[fogs],
                   np.full(len(fogs), float(r)))

    @classmethod
    def from_decision(cls, dv, topo, params):
        """One group per (consumer, processing FCN) pair of a decision vector.

        A consumer whose load is split over several hosts contributes a
        fractional ``count`` to each group, so request rates and per-consumer
        upload volumes are both preserved.
        """
        served = dv.service_load()
        total = served.sum(axis=1)
        assoc = dv.association()
        n_bu = np.zeros(len(assoc))
        np.add.at(n_bu, np.nonzero(dv.bv3)[1], 1.0)
        a_idx, h_idx = np.nonzero(served > 0)
        keep = assoc[a_idx] >= 0
        a_idx, h_idx = a_idx[keep], h_idx[keep]
        return cls(assoc[a_idx], h_idx, served[a_idx, h_idx] / total[a_idx], n_bu[a_idx],
                   total[a_idx], None, np.asarray(dv.machines_on), np.asarray(dv.cpu_freq))

    @property
    def n_consumers(self):
        return float(self.count.sum())


def _group_upload(plan, req_rate, params):
    """Upload latency of one consumer in each group (vectorised upload_latency)."""
    if np.any(plan.bus <= 0):
        raise UnservedConsumerError("consumer has no bandwidth unit allocated")
    volume = np.divide(req_rate * params.packet_bytes * params.slot_seconds, plan.count,
                       out=np.zeros(len(req_rate)), where=plan.count > 0)
    return volume / (plan.bus * params.bu_rate)


def _server_for(plan, topo):
    return topo.server_of_fog if plan.server is None else plan.server


def _cloud_latency(lam, params, topo, plan, strict=True, sized=True):
    """Per-server M/M/n response time, machine counts and frequencies.

    With ``sized=False`` the plan's machine counts are ignored and every
    server switches on the fewest machines meeting the target utilisation.
    """
    n_s = max(topo.n_servers, 1)
    freq = np.full(n_s, params.cpu_freq_ghz) if plan.freq is None else np.asarray(plan.freq, float)
    lat = np.zeros(n_s)
    machines = np.zeros(n_s, dtype=np.int64)
    for c in range(n_s):
        mu = params.cloud_rate(freq[c])
        cap = topo.servers[c].machine_count_max if topo.servers else math.inf
        if sized and plan.machines is not None:
            n = int(plan.machines[c])
        else:
            n = min_servers(lam[c], mu, params.cloud_target_util)
            n = int(min(n, cap)) if lam[c] > 0 else 0
        machines[c] = n
        if lam[c] <= 0:
            continue
        if n < 1 or lam[c] >= n * mu:
            if strict:
                raise UnstableQueueError(
                    f"cloud server {c}: load {lam[c]:.1f} req/s exceeds {n} x {mu:.1f}")
            lat[c] = math.inf
            continue
        lat[c] = mmn_response_time(n, lam[c], mu)
    return lat, machines, freq


def _fog_latency(load, topo, params, strict=True):
    lat = np.zeros(topo.n_fogs)
    for f in np.nonzero(load > 0)[0]:
        rs = topo.fog_nodes[f].service_rate
        if load[f] >= rs * (1.0 - params.stability_margin):
            if strict:
                raise UnstableQueueError(f"fog {f}: load {load[f]:.1f} >= service rate {rs}")
            lat[f] = math.inf
            continue
        lat[f] = mm1_latency(rs, load[f])
    return lat


def _wan(topo, params, fogs, servers, rate_through):
    """Propagation plus load-proportional WAN delay for fog->server paths."""
    if topo.n_servers == 0:
        return np.zeros(len(fogs))
    prop = 2.0 * topo.fog_server_dist[fogs, servers] / params.wan_propagation_kmps
    return prop + params.wan_delay_factor * rate_through


def _fixed_charges(params, vms, ports_1g, ports_10g, machines, hours):
    return (params.vm_price * vms * hours
            + params.storage_price * vms * hours
            + params.router_price * (ports_1g + ports_10g) * hours / HOURS_PER_YEAR
            + params.server_price * machines * hours / HOURS_PER_YEAR)


def total_cloud_cost(workload, topo, params, strict=True, cloud_share=1.0):
    """Cloud-only execution: every request crosses the WAN to a data centre."""
    plan = workload
    hours = params.horizon_seconds / 3600.0
    if plan.n_consumers <= 0:
        return CostBreakdown(extra={"requests": 0.0, "machines": 0})
    req_rate = plan.count * plan.rate                         # req/s per group
    pkt = params.packet_bytes
    server_of = _server_for(plan, topo)

    upload = _group_upload(plan, req_rate, params)
    gw_rate = np.bincount(plan.assoc, weights=req_rate, minlength=topo.n_fogs)
    srv = server_of[plan.assoc]
    lam = np.bincount(srv, weights=req_rate, minlength=max(topo.n_servers, 1)) * cloud_share
    # the cloud-only baseline provisions its own machines
    cl_lat, machines, freq = _cloud_latency(lam, params, topo, plan, strict, sized=False)
    disp = _wan(topo, params, plan.assoc, srv, gw_rate[plan.assoc])
    cloud = cl_lat[srv]

    w = req_rate / req_rate.sum()
    lat = LatencyTerms(float(w @ upload), 0.0, 0.0, float(w @ disp), float(w @ cloud))
    n_req = req_rate.sum() * params.horizon_seconds
    comm = params.alpha_comm * lat.service * n_req

    bytes_s = req_rate.sum() * pkt
    tx = params.tx_energy_af * bytes_s + params.tx_energy_fc * bytes_s
    gateways = len(np.unique(plan.assoc))
    tx += gateways * params.router_power_1g_w
    cloud_w = sum(cloud_comp_power(1, machines[c], freq[c], params.cloud_power_coeffs, 0)
                  for c in range(len(machines)))
    power = PowerTerms(float(tx), 0.0, float(cloud_w))
    cons = params.alpha_cons * power.total * params.horizon_seconds
    comp = (params.upload_tariff_usd_per_byte * bytes_s * params.horizon_seconds
            + _fixed_charges(params, int(machines.sum()), gateways, 0, int(machines.sum()), hours))
    ems = emission_cost(0.0, params, beta_c=cloud_w, hours=hours)
    return CostBreakdown(comm, comp, cons, ems, lat, power,
                         {"requests": float(n_req), "machines": int(machines.sum()),
                          "cloud_power_w": cloud_w})


def evaluate_fog_path(plan, topo, params, pi_f=None, strict=True, theta=None, unit_price=None):
    """Fog-assisted execution of ``plan`` (the C_f branch, no offload mixing)."""
    pi_f = params.pi_f if pi_f is None else pi_f
    pi_cs = params.pi_cs
    hours = params.horizon_seconds / 3600.0
    if plan.n_consumers <= 0:
        return CostBreakdown(extra={"requests": 0.0, "machines": 0})
    pkt = params.packet_bytes
    req_rate = plan.count * plan.rate
    host_load = np.bincount(plan.host, weights=req_rate, minlength=topo.n_fogs)
    fog_lat = _fog_latency(host_load, topo, params, strict)

    server_of = _server_for(plan, topo)
    gamma = (1.0 - pi_f) * host_load                          # dispatch rate per FCN
    n_srv = max(topo.n_servers, 1)
    lam = np.bincount(server_of[np.arange(topo.n_fogs)], weights=gamma, minlength=n_srv)
    cl_lat, machines, freq = _cloud_latency(lam, params, topo, plan, strict)

    upload = _group_upload(plan, req_rate, params)
    hops = topo.interfog_hops[plan.assoc, plan.host]
    interfog = hops * interfog_latency(params.payload, params.interfog_rate)
    srv = server_of[plan.host]
    disp = _wan(topo, params, plan.host, srv, gamma[plan.host])
    raw = [upload, fog_lat[plan.host], interfog, disp, cl_lat[srv]]

    w = req_rate / req_rate.sum()
    means = LatencyTerms(*[float(w @ np.asarray(t, float)) for t in raw])
    lat = weighted_latency(means, pi_f, pi_cs)
    n_req = req_rate.sum() * params.horizon_seconds
    comm = params.alpha_comm * lat.service * n_req

    # power: network transmission, FCN computation, cloud computation
    up_bytes = req_rate.sum() * pkt
    moved = req_rate[hops > 0].sum() * params.payload
    if_bytes = moved * (1.0 - params.omega3_fraction)
    fc_bytes = host_load.sum() * pkt
    active = np.unique(np.concatenate([plan.assoc, plan.host]))
    tx = transmission_power(up_bytes, if_bytes, fc_bytes, pi_f, params)
    tx += len(active) * (params.router_power_1g_w + params.router_power_10g_w)
    busy = np.nonzero(host_load > 0)[0]
    fog_w = 0.0
    if len(busy):
        fog_w = fog_comp_power(host_load[busy] * pkt, params.fog_power_coeffs,
                               params.fog_weight, params.fog_comp_energy, 1)
        fog_w += sum(topo.fog_nodes[f].energy_rate for f in busy)
    cloud_w = sum(cloud_comp_power(1, machines[c], freq[c], params.cloud_power_coeffs, 0)
                  for c in range(len(machines)))
    power = PowerTerms(float(tx), float(fog_w), float(cloud_w))
    cons = params.alpha_cons * power.total * params.horizon_seconds

    vm_hosts = len(np.unique(plan.host))
    comp = (params.upload_tariff_usd_per_byte * up_bytes * params.horizon_seconds
            + _fixed_charges(params, vm_hosts + int(machines.sum()), len(active), len(active),
                             int(machines.sum()), hours))
    if theta is not None and unit_price is not None:
        P = np.zeros((len(plan.host), topo.n_fogs))
        P[np.arange(len(plan.host)), plan.host] = 1
        comp += traffic_cost(P, theta, unit_price)
    # cloud_w already carries the (1 - pi_f) dispatch share through the machine count
    ems = emission_cost(0.0, params, beta_c=cloud_w, hours=hours)
    return CostBreakdown(comm, comp, cons, ems, lat, power,
                         {"requests": float(n_req), "machines": int(machines.sum()),
                          "cloud_power_w": cloud_w, "fog_load": host_load, "cloud_load": lam})


def total_fog_cost(assignment, topo, params, bv1=1.0, strict=True):
    """Expected fog-assisted cost with the offload coin ``pi_c``.

    ``bv1`` is the fog-eligible share of workloads.  Each branch is evaluated
    on the full plan and the two are mixed by :func:`expected_cost`, so
    ``pi_c = 1`` or ``bv1 = 0`` reproduces :func:`total_cloud_cost` exactly.
    """
    plan = assignment
    fog_share = expected_cost(bv1, 1.0, 0.0, params.pi_c)
    if plan.n_consumers <= 0:
        return CostBreakdown(extra={"requests": 0.0})
    if fog_share <= 0:
        return total_cloud_cost(plan, topo, params, strict)
    cf = evaluate_fog_path(plan, topo, params, strict=strict)
    if fog_share >= 1:
        return cf
    cc = total_cloud_cost(plan, topo, params, strict)
    return _mix(cf, cc, fog_share)


def _mix(cf, cc, w):
    def blend(a, b):
        return type(a)(*(w * x + (1.0 - w) * y for x, y in zip(a, b)))

    return CostBreakdown(w * cf.comm + (1 - w) * cc.comm, w * cf.comp + (1 - w) * cc.comp,
                         w * cf.cons + (1 - w) * cc.cons, w * cf.ems + (1 - w) * cc.ems,
                         blend(cf.latency_terms, cc.latency_terms),
                         blend(cf.power_terms, cc.power_terms),
                         {"requests": cf.extra["requests"], "fog_share": w})


def net_power(assignment, topo, params, pi_f=None):
    """Total network + fog + cloud power (W) of a fog-assisted plan."""
    return evaluate_fog_path(assignment, topo, params, pi_f=pi_f).power_terms.total
