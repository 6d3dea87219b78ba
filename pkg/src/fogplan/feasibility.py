"""Decision vector of the placement MINLP, constraint checks and greedy repair.

Every application is owned by exactly one consumer, so application and
consumer indices coincide.  Check functions never raise on well-shaped input;
they return ``{constraint: violation magnitude}`` dictionaries that
:class:`FeasibilityReport` aggregates.
"""

import json
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .costmodel import LatencyTerms, interfog_latency, weighted_latency
from .queueing import min_servers, mm1_latency, mmn_response_time

DV_SCHEMA = 1

_BINARY = ("bv1", "bv2", "bv3", "bv4", "bv5", "bv_l", "bv_c")


@dataclass
class DecisionVector:
    """All binary and continuous decision variables.

    Shapes, with ``A`` applications, ``F`` fog nodes, ``S`` bandwidth units
    and ``D`` cloud servers::

        bv1 (A,)  bv2 (A, F)  bv3 (S, A)  bv4 (F, F, A)  bv5 (A, F)
        bv_l (A, F)  bv_c (D,)  workload (A, F)  interfog_rate (F, F, A)
        cloud_workload (D,)  dispatch_rate (F,)  cpu_freq (D,)  machines_on (D,)
    """
    bv1: np.ndarray
    bv2: np.ndarray
    bv3: np.ndarray
    bv4: np.ndarray
    bv5: np.ndarray
    bv_l: np.ndarray
    bv_c: np.ndarray
    workload: np.ndarray
    interfog_rate: np.ndarray
    cloud_workload: np.ndarray
    dispatch_rate: np.ndarray
    cpu_freq: np.ndarray
    machines_on: np.ndarray

    @classmethod
    def empty(cls, n_apps, n_fogs, n_bus, n_servers, cpu_freq=1.0):
        A, F, S, D = n_apps, n_fogs, n_bus, n_servers
        i8 = np.int8
        return cls(
            bv1=np.ones(A, i8), bv2=np.zeros((A, F), i8), bv3=np.zeros((S, A), i8),
            bv4=np.zeros((F, F, A), i8), bv5=np.zeros((A, F), i8),
            bv_l=np.zeros((A, F), i8), bv_c=np.zeros(D, i8),
            workload=np.zeros((A, F)), interfog_rate=np.zeros((F, F, A)),
            cloud_workload=np.zeros(D), dispatch_rate=np.zeros(F),
            cpu_freq=np.full(D, float(cpu_freq)), machines_on=np.zeros(D, np.int64),
        )

    @classmethod
    def for_topology(cls, topo, params):
        dv = cls.empty(topo.n_consumers, topo.n_fogs, topo.n_bus, topo.n_servers,
                       params.cpu_freq_ghz)
        dv.bv_l[:] = topo.reach_matrix()
        return dv

    @property
    def shape(self):
        return self.bv2.shape[0], self.bv2.shape[1], self.bv3.shape[0], self.bv_c.shape[0]

    def copy(self):
        return DecisionVector(**{f.name: getattr(self, f.name).copy() for f in fields(self)})

    def __eq__(self, other):
        if not isinstance(other, DecisionVector):
            return NotImplemented
        return all(np.array_equal(getattr(self, f.name), getattr(other, f.name))
                   for f in fields(self))

    def validate(self):
        """Raise ``ValueError`` if a binary field holds anything but 0/1 or a rate is negative."""
        for name in _BINARY:
            v = getattr(self, name)
            if not np.all((v == 0) | (v == 1)):
                raise ValueError(f"{name} must be binary")
        for name in ("workload", "interfog_rate", "cloud_workload", "dispatch_rate",
                     "machines_on"):
            if np.any(getattr(self, name) < 0):
                raise ValueError(f"{name} must be >= 0")
        if np.any(self.cpu_freq <= 0):
            raise ValueError("cpu_freq must be > 0")

    # derived views ------------------------------------------------------

    def association(self):
        """Per application, the associated FCN or -1 when not exactly one."""
        one = self.bv2.sum(axis=1) == 1
        return np.where(one, self.bv2.argmax(axis=1), -1)

    def bus_held(self):
        """``(A, S)`` boolean matrix of BU ownership."""
        return self.bv3.T.astype(bool)

    def service_load(self):
        """``(A, F)`` request rate processed at each fog for each application."""
        return self.interfog_rate.sum(axis=0).T

    # serialization ------------------------------------------------------

    def to_dict(self):
        d = {f.name: getattr(self, f.name).tolist() for f in fields(self)}
        d["schema_version"] = DV_SCHEMA
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != DV_SCHEMA:
            raise ValueError(f"unsupported decision-vector schema {d.get('schema_version')}")
        kinds = {name: np.int8 for name in _BINARY}
        kinds["machines_on"] = np.int64
        return cls(**{f.name: np.asarray(d[f.name], dtype=kinds.get(f.name, float))
                      for f in fields(cls)})

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass
class FeasibilityReport:
    violations: dict = field(default_factory=dict)

    def update(self, more):
        self.violations.update(more)
        return self

    @property
    def feasible(self):
        return all(v == 0 for v in self.violations.values())

    def failed(self):
        return sorted(k for k, v in self.violations.items() if v > 0)

    def penalty(self, weights=None):
        return penalty(self, weights)


def penalty(report, weights=None):
    """Weighted sum of violation magnitudes; zero exactly when feasible."""
    weights = weights or {}
    total = 0.0
    for name, v in report.violations.items():
        w = weights.get(name, 1.0)
        if w <= 0:
            raise ValueError("penalty weights must be > 0")
        total += w * v
    return total


# ---------------------------------------------------------------------------
# constraint groups


def _bu_count(dv, topo):
    """``(A, F)`` number of BUs each application holds at each fog."""
    held = dv.bus_held().astype(np.int64)
    out = np.zeros(dv.bv2.shape, dtype=np.int64)
    np.add.at(out.T, topo.bu_owner, held.T)
    return out


def check_association(dv, topo):
    n_bu = _bu_count(dv, topo)
    size = np.array([len(f.bandwidth_units) for f in topo.fog_nodes], float)
    unlisted = n_bu * (dv.bv_l == 0)
    lower = np.maximum(0.0, n_bu / size - dv.bv2)
    upper = np.maximum(0.0, dv.bv2 - n_bu)
    return {
        "16": float(unlisted.sum()),
        "17": float(lower.sum() + upper.sum()),
        "18": float(np.maximum(0, dv.bv3.sum(axis=1) - 1).sum()),
        "19": float(np.abs(dv.bv2.sum(axis=1) - 1).sum()),
    }


def check_workload(dv, topo):
    bv2_fa = dv.bv2.T[:, None, :]                       # (F, 1, A)
    lam = dv.interfog_rate
    outflow = lam.sum(axis=1).T                          # (A, F)
    inflow = dv.workload * dv.bv2
    return {
        "20": float(np.maximum(0, dv.bv4 - bv2_fa).sum()),
        "21": float(((lam > 0) & (dv.bv4 == 0)).sum() + ((lam == 0) & (dv.bv4 == 1)).sum()),
        "22": float(np.abs(inflow - outflow).sum()),
    }


def check_vm(dv, topo, params):
    served = dv.service_load()                           # (A, F)
    storage = dv.bv5.sum(axis=0) * params.app_storage_bytes
    proc = (served * params.scale_factor).sum(axis=0)
    cap_vm = np.array([f.max_vms for f in topo.fog_nodes])
    cap_sto = np.array([f.storage_cap for f in topo.fog_nodes])
    cap_proc = np.array([f.proc_cap for f in topo.fog_nodes])
    bounds = 0.0
    for j, srv in enumerate(topo.servers):
        lo, hi = srv.cpu_freq_range
        bounds += max(0.0, lo - dv.cpu_freq[j]) + max(0.0, dv.cpu_freq[j] - hi)
        bounds += max(0, int(dv.machines_on[j]) - srv.machine_count_max)
    return {
        "23": float(np.maximum(0, dv.bv5.sum(axis=0) - cap_vm).sum()),
        "27": float(((served > 0) & (dv.bv5 == 0)).sum() + ((served == 0) & (dv.bv5 == 1)).sum()),
        "28": float(np.maximum(0, dv.bv4 - dv.bv5.T[None, :, :]).sum()),
        "29": float(np.maximum(0.0, storage - cap_sto).sum() / max(params.app_storage_bytes, 1.0)),
        "30": float(np.maximum(0.0, proc - cap_proc).sum()),
        "bounds": float(bounds),
    }


def app_latencies(dv, topo, params):
    """Raw per-application latency terms (seconds) of the fog path.

    Returns a :class:`LatencyTerms` of ``(A,)`` arrays; unstable queues give
    ``inf``.  Split applications report the load-weighted mean over hosts.
    """
    A = dv.bv2.shape[0]
    load = dv.interfog_rate.sum(axis=(0, 2))             # per processing fog
    served = dv.service_load()
    total = served.sum(axis=1)
    share = np.divide(served, total[:, None], out=np.zeros_like(served),
                      where=total[:, None] > 0)

    fog_lat = np.zeros(topo.n_fogs)
    for f in np.nonzero(load > 0)[0]:
        rs = topo.fog_nodes[f].service_rate
        fog_lat[f] = mm1_latency(rs, load[f]) if load[f] < rs else math.inf

    n_bu = _bu_count(dv, topo).sum(axis=1)
    volume = dv.workload.sum(axis=1) * params.packet_bytes * params.slot_seconds
    with np.errstate(divide="ignore", invalid="ignore"):
        upload = np.where(volume > 0, volume / (n_bu * params.bu_rate), 0.0)

    assoc = dv.association()
    hop_lat = interfog_latency(params.payload, params.interfog_rate)
    hops = np.where(assoc[:, None] >= 0, topo.interfog_hops[np.maximum(assoc, 0)], 0)
    interfog = (share * hops).sum(axis=1) * hop_lat

    cloud_lat = np.zeros(max(topo.n_servers, 1))
    for j in range(topo.n_servers):
        y = dv.cloud_workload[j]
        if y <= 0:
            continue
        mu = params.cloud_rate(dv.cpu_freq[j])
        n = int(dv.machines_on[j])
        cloud_lat[j] = mmn_response_time(n, y, mu) if n >= 1 and y < n * mu else math.inf

    if topo.n_servers:
        srv = topo.server_of_fog
        prop = 2.0 * topo.fog_server_dist[np.arange(topo.n_fogs), srv] / params.wan_propagation_kmps
        disp_f = prop + params.wan_delay_factor * dv.dispatch_rate
        cloud_f = cloud_lat[srv]
    else:
        disp_f = np.zeros(topo.n_fogs)
        cloud_f = np.zeros(topo.n_fogs)

    def over_hosts(per_fog):
        v = np.where(share > 0, per_fog[None, :], 0.0)
        return (share * v).sum(axis=1) if A else np.zeros(0)

    return LatencyTerms(upload, over_hosts(fog_lat), interfog, over_hosts(disp_f),
                        over_hosts(cloud_f))


def check_network(dv, topo, params):
    load = dv.interfog_rate.sum(axis=(0, 2))
    rs = np.array([f.service_rate for f in topo.fog_nodes])
    fog_excess = np.maximum(0.0, load - rs * (1.0 - params.stability_margin))

    cloud_excess = 0.0
    for j in range(topo.n_servers):
        cap = int(dv.machines_on[j]) * params.cloud_rate(dv.cpu_freq[j])
        cloud_excess += max(0.0, dv.cloud_workload[j] - cap * (1.0 - params.stability_margin))

    raw = app_latencies(dv, topo, params)
    chain = weighted_latency(raw, params.pi_f, params.pi_cs).service
    served = dv.workload.sum(axis=1) > 0
    limit = params.delay_limit * (1.0 - params.stability_margin)
    excess = np.where(served, np.maximum(0.0, np.minimum(chain, params.big_m) - limit), 0.0)
    return {
        "31": float(fog_excess.sum()),
        "31c": float(cloud_excess),
        "32": float(excess.sum()),
    }


def check_all(dv, topo, params):
    report = FeasibilityReport()
    report.update(check_association(dv, topo))
    report.update(check_workload(dv, topo))
    report.update(check_vm(dv, topo, params))
    report.update(check_network(dv, topo, params))
    return report


# ---------------------------------------------------------------------------
# repair


def _order(keys, dist):
    """Candidates sorted by (distance, index)."""
    keys = np.asarray(keys, dtype=np.int64)
    return keys[np.lexsort((keys, dist[keys]))]


def repair(dv, topo, params, rng=None, demand=None):
    """Greedy structural repair.

    Association and BU structure are fixed first (one listed FCN per
    consumer, nearest kept, ties to the lowest index), then flows are
    rescaled to conserve each consumer's upload and VMs are moved off
    overloaded fogs, lowest-traffic application first.  Capacity and QoS
    violations that survive are left to the penalty.  ``rng`` is accepted
    for interface symmetry; every rule here is deterministic.

    Consumers that cannot be served anywhere stay unassociated and show up
    as constraint-19 violations.  ``demand`` overrides each consumer's
    request rate; by default the rate already in ``dv.workload`` is kept.
    """
    out = dv.copy()
    A, F, S, D = out.shape
    cdist = topo.consumer_fog_dist()
    bu_size = np.array([len(f.bandwidth_units) for f in topo.fog_nodes])
    used = np.zeros(F, dtype=np.int64)

    # association ------------------------------------------------------
    assoc = np.full(A, -1, dtype=np.int64)
    for a in range(A):
        listed = np.nonzero(out.bv_l[a])[0]
        chosen = np.nonzero(out.bv2[a] & out.bv_l[a])[0]
        for pool in (chosen, listed):
            free = [f for f in _order(pool, cdist[a]) if used[f] < bu_size[f]]
            if free:
                assoc[a] = free[0]
                used[free[0]] += 1
                break
    out.bv2[:] = 0
    ok = assoc >= 0
    out.bv2[np.nonzero(ok)[0], assoc[ok]] = 1

    # bandwidth units: keep valid exclusive holdings, deal the free pool round-robin
    held = out.bv3.astype(bool)                          # (S, A)
    keep = np.zeros_like(held)
    for b in range(S):
        owners = np.nonzero(held[b])[0]
        if len(owners) == 1 and assoc[owners[0]] == topo.bu_owner[b]:
            keep[b, owners[0]] = True
    for f in np.unique(assoc[ok]):
        members = np.nonzero(assoc == f)[0]
        bus = np.asarray(topo.fog_nodes[f].bandwidth_units)
        needy = [a for a in members if not keep[bus, a].any()]
        pool = [b for b in bus if not keep[b].any()]
        while len(pool) < len(needy):
            # reclaim from the member holding most BUs (ties: lowest index), highest BU first
            counts = keep[bus][:, members].sum(axis=0)
            donor = members[int(np.argmax(counts))]
            mine = [b for b in bus if keep[b, donor]]
            keep[mine[-1], donor] = False
            pool.append(mine[-1])
        if needy:
            for k, b in enumerate(pool):
                keep[b, needy[k % len(needy)]] = True
    out.bv3 = keep.astype(np.int8)

    # workload and flows -------------------------------------------------
    lam = out.interfog_rate
    new_lam = np.zeros_like(lam)
    workload = np.zeros_like(out.workload)
    for a in np.nonzero(ok)[0]:
        f = assoc[a]
        r = out.workload[a].sum() if demand is None else float(demand[a])
        if r <= 0:
            continue
        workload[a, f] = r
        flow = lam[f, :, a]
        if flow.sum() > 0:
            new_lam[f, :, a] = flow * (r / flow.sum())
        else:
            hosts = np.nonzero(out.bv5[a])[0]
            host = _order(hosts, topo.interfog_hops[f])[0] if len(hosts) else f
            new_lam[f, host, a] = r
    out.workload = workload

    # VM capacity: evict lowest-traffic applications to the nearest fog with room
    cap_vm = np.array([fn.max_vms for fn in topo.fog_nodes])
    cap_sto = np.array([fn.storage_cap for fn in topo.fog_nodes])
    cap_proc = np.array([fn.proc_cap for fn in topo.fog_nodes])
    q_s, eps = params.app_storage_bytes, params.scale_factor

    def fits(f, vms, proc, extra_vm, extra_proc):
        return (vms[f] + extra_vm <= cap_vm[f] and (vms[f] + extra_vm) * q_s <= cap_sto[f]
                and proc[f] + extra_proc * eps <= cap_proc[f] + 1e-9)

    served = new_lam.sum(axis=0).T                       # (A, F)
    vms = (served > 0).sum(axis=0)
    proc = served.sum(axis=0) * eps
    over = (vms > cap_vm) | (vms * q_s > cap_sto) | (proc > cap_proc + 1e-9)
    for f in np.nonzero(over)[0]:
        apps = np.nonzero(served[:, f] > 0)[0]
        apps = apps[np.lexsort((apps, served[apps, f]))]
        for a in apps:
            if vms[f] <= cap_vm[f] and vms[f] * q_s <= cap_sto[f] and proc[f] <= cap_proc[f] + 1e-9:
                break
            src = assoc[a]
            moved = served[a, f]
            for g in _order(np.arange(F), topo.interfog_hops[src]):
                if g == f:
                    continue
                has_vm = served[a, g] > 0
                if fits(g, vms, proc, 0 if has_vm else 1, moved):
                    new_lam[src, g, a] += new_lam[src, f, a]
                    new_lam[src, f, a] = 0.0
                    served[a, g] += moved
                    served[a, f] = 0.0
                    vms[f] -= 1
                    vms[g] += 0 if has_vm else 1
                    proc[f] -= moved * eps
                    proc[g] += moved * eps
                    break
    out.interfog_rate = new_lam
    out.bv4 = (new_lam > 0).astype(np.int8)
    out.bv5 = (served > 0).astype(np.int8)

    # cloud side: dispatch shares, server loads, machine counts -----------
    load = new_lam.sum(axis=(0, 2))
    out.dispatch_rate = (1.0 - params.pi_f) * load
    if D:
        out.cloud_workload = np.bincount(topo.server_of_fog, weights=out.dispatch_rate,
                                         minlength=D).astype(float)
        for j, srv in enumerate(topo.servers):
            lo, hi = srv.cpu_freq_range
            out.cpu_freq[j] = min(max(out.cpu_freq[j], lo), hi)
            y = out.cloud_workload[j]
            if y > 0 and out.machines_on[j] < 1:
                need = min_servers(y, params.cloud_rate(out.cpu_freq[j]), params.cloud_target_util)
                out.machines_on[j] = min(need, srv.machine_count_max)
            out.machines_on[j] = min(out.machines_on[j], srv.machine_count_max)
        out.bv_c = (out.machines_on > 0).astype(np.int8)
    return out
