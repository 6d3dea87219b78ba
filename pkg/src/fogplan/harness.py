"""Experiment runner: fog-versus-cloud sweeps, optimized-cost curves and reports.

Every runner returns a :class:`ResultTable` whose rows carry the config hash
and seed, so a CSV file is traceable to the exact scenario that produced it.
Re-running with the same config and seed reproduces byte-identical output.
"""

import csv
import io
import json
import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .costmodel import (FlowPlan, UnservedConsumerError, evaluate_fog_path, fne_regime,
                        total_cloud_cost, total_fog_cost)
from .mde import MdeConfig, ModifiedDE
from .montecarlo import McConfig, estimate_pi_c
from .params import ScenarioParams, pilot_params
from .problem import (TOY_SCENARIOS, ToyVanetProblem, pilot_problem, restrict_seed,
                      toy_breakdown, toy_brute_force, toy_upload_delay)
from .queueing import UnstableQueueError
from .topology import generate_topology

log = logging.getLogger(__name__)

KINDS = ("latency_compare", "fne_sweep", "energy_compare", "cost_sweep", "toy_vanet",
         "pic_estimate")
CONSUMER_SWEEP = tuple(range(10_000, 100_001, 10_000))
FNE_LEVELS = (1.0, 0.8, 0.5, 0.01, 0.0)
PILOT_CONSUMERS = tuple(range(50, 96, 5))
PILOT_ARRIVALS = (0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)
PILOT_FOGS = (20, 25, 30, 35, 40, 45, 50)
COST_VARIABLES = ("n_consumers", "arrival_rate", "n_fogs")


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    variable: str = "n_consumers"
    values: tuple = CONSUMER_SWEEP
    replications: int = 1
    seed: int = 0
    fne: float = 0.5
    mde: MdeConfig = field(default_factory=lambda: MdeConfig(pop_size=60, max_generations=200))

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if len(self.values) == 0:
            raise ValueError("sweep range is empty")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 0.0 <= self.fne <= 1.0:
            raise ValueError("fne must lie in [0, 1]")


# ---------------------------------------------------------------------------
# tables


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _parse(text):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def _json_value(v):
    """JSON text for ``v`` with floats written to 17 significant digits."""
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(x)}"
                               for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return format(x, ".17g")
    return json.dumps(v)


@dataclass
class ResultTable:
    """Rows of one experiment plus provenance.

    The first two columns of every table are ``config_hash`` and ``seed``.
    """
    columns: tuple
    rows: list
    metadata: dict = field(default_factory=dict)

    def column(self, name):
        k = self.columns.index(name)
        return [r[k] for r in self.rows]

    def __len__(self):
        return len(self.rows)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        reader = csv.reader(io.StringIO(text, newline=""))
        header = next(reader)
        rows = [tuple(_parse(v) for v in r) for r in reader]
        return cls(tuple(header), rows)

    def to_json(self):
        return _json_value({"columns": list(self.columns), "rows": [list(r) for r in self.rows],
                            "metadata": self.metadata}) + "\n"

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(tuple(d["columns"]), [tuple(r) for r in d["rows"]], d.get("metadata", {}))

    def to_svg(self, x=None, series=None, width=640, height=400):
        """Line chart, one polyline per series.

        ``x`` defaults to the sweep column and ``series`` to the columns
        listed in ``metadata["series"]``.
        """
        if not self.rows:
            raise ValueError("cannot plot an empty table")
        x = x or self.metadata.get("x", self.columns[2])
        series = list(series or self.metadata.get("series", []))
        xs = np.asarray(self.column(x), dtype=float)
        ys = {s: np.asarray(self.column(s), dtype=float) for s in series}
        finite = np.concatenate([v[np.isfinite(v)] for v in ys.values()] or [np.zeros(1)])
        y_lo, y_hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
        x_lo, x_hi = float(xs.min()), float(xs.max())
        pad = 50

        def sx(v):
            return pad + (v - x_lo) / ((x_hi - x_lo) or 1.0) * (width - 2 * pad)

        def sy(v):
            return height - pad - (v - y_lo) / ((y_hi - y_lo) or 1.0) * (height - 2 * pad)

        svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg",
                         width=str(width), height=str(height))
        svg.append(ET.Comment(f" config_hash={self.metadata.get('config_hash', '')} "))
        ET.SubElement(svg, "line", x1=str(pad), y1=str(height - pad), x2=str(width - pad),
                      y2=str(height - pad), stroke="black")
        ET.SubElement(svg, "line", x1=str(pad), y1=str(pad), x2=str(pad),
                      y2=str(height - pad), stroke="black")
        ET.SubElement(svg, "text", x=str(width / 2), y=str(height - 10),
                      attrib={"text-anchor": "middle"}).text = x
        ET.SubElement(svg, "text", x="12", y=str(height / 2),
                      transform=f"rotate(-90 12 {height / 2})",
                      attrib={"text-anchor": "middle"}).text = self.metadata.get("y_label", "value")
        colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
        for k, (name, v) in enumerate(ys.items()):
            ok = np.isfinite(v)
            pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xs[ok], v[ok]))
            ET.SubElement(svg, "polyline", points=pts, fill="none",
                          stroke=colors[k % len(colors)], attrib={"data-series": name})
            ET.SubElement(svg, "text", x=str(width - pad), y=str(pad + 15 * k),
                          fill=colors[k % len(colors)],
                          attrib={"text-anchor": "end"}).text = name
        return ET.tostring(svg, encoding="unicode") + "\n"


def emit(table, fmt, path=None):
    """Render ``table`` as csv, json or svg; write it to ``path`` when given."""
    render = {"csv": table.to_csv, "json": table.to_json, "svg": table.to_svg}
    if fmt not in render:
        raise ValueError(f"unknown format {fmt!r}")
    text = render[fmt]()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def _meta(params, spec, **extra):
    return {"config_hash": params.config_hash(), "seed": spec.seed, "version": __version__,
            "kind": spec.kind, **extra}


# ---------------------------------------------------------------------------
# large-scenario comparisons


def _paths(params, n, seed):
    p = params.with_(n_consumers=int(n), max_consumers=max(params.max_consumers, int(n)))
    topo = generate_topology(p, seed)
    plan = FlowPlan.from_topology(topo, p)
    return p, topo, plan


def _sweep_points(spec, params, fne_of_point):
    """Yield ``(value, rep, fog, cloud, status)`` for a consumer-count sweep."""
    for value in spec.values:
        for rep in range(spec.replications):
            p, topo, plan = _paths(params, value, spec.seed + rep)
            p = p.with_(pi_f=fne_of_point(value))
            try:
                cloud = total_cloud_cost(plan, topo, p)
                fog = cloud if p.pi_f == 0 else evaluate_fog_path(plan, topo, p)
                yield value, rep, fog, cloud, "ok"
            except (UnstableQueueError, UnservedConsumerError) as exc:
                log.warning("point %s skipped: %s", value, exc)
                yield value, rep, None, None, "unstable"


LATENCY_COLUMNS = ("config_hash", "seed", "n_consumers", "replication", "fne", "status",
                   "fog_transmission", "fog_processing", "fog_service",
                   "cloud_transmission", "cloud_processing", "cloud_service", "ratio")


def run_latency_compare(spec, params=None):
    """Mean transmission, processing and service latency per consumer count."""
    params = params or ScenarioParams()
    fne = spec.fne
    rows = []
    for value, rep, fog, cloud, status in _sweep_points(spec, params, lambda _: fne):
        h, s = params.config_hash(), spec.seed + rep
        if status != "ok":
            rows.append((h, s, value, rep, fne, status) + (math.nan,) * 7)
            continue
        lf, lc = fog.latency_terms, cloud.latency_terms
        rows.append((h, s, value, rep, fne, status,
                     lf.transmission, lf.processing, lf.transmission + lf.processing,
                     lc.transmission, lc.processing, lc.transmission + lc.processing,
                     lf.service / lc.service))
    return ResultTable(LATENCY_COLUMNS, rows,
                       _meta(params, spec, x="n_consumers", y_label="latency (s)",
                             series=["fog_service", "cloud_service"]))


FNE_COLUMNS = ("config_hash", "seed", "fne", "regime", "replication", "n_consumers",
               "fog_transmission", "fog_processing", "fog_service", "fog_dispatch",
               "fog_cloud_comp", "cloud_service", "ratio")


def run_fne_sweep(spec, params=None):
    """Fog latency at each efficiency level; the zero level is the cloud baseline.

    ``spec.values`` holds the efficiency levels and every row uses the first
    consumer count of the default sweep unless ``params.n_consumers`` says
    otherwise.  The metadata records the measured crossover: the smallest
    efficiency on a 0.01 grid at which the fog path beats the cloud.
    """
    params = params or ScenarioParams()
    levels = spec.values
    if any(not 0.0 <= v <= 1.0 for v in levels):
        raise ValueError("efficiency levels must lie in [0, 1]")
    rows = []
    crossover = None
    for rep in range(spec.replications):
        p, topo, plan = _paths(params, params.n_consumers, spec.seed + rep)
        cloud = total_cloud_cost(plan, topo, p)
        lc = cloud.latency_terms
        for level in levels:
            fog = cloud if level == 0 else evaluate_fog_path(plan, topo, p.with_(pi_f=level))
            lf = fog.latency_terms
            rows.append((params.config_hash(), spec.seed + rep, level, fne_regime(level), rep,
                         params.n_consumers, lf.transmission, lf.processing, lf.service,
                         lf.dispatch, lf.cloud_comp, lc.service, lf.service / lc.service))
        if rep == 0:
            for k in range(1, 101):
                level = k / 100
                lf = evaluate_fog_path(plan, topo, p.with_(pi_f=level)).latency_terms
                if lf.service < lc.service:
                    crossover = level
                    break
    return ResultTable(FNE_COLUMNS, rows,
                       _meta(params, spec, x="fne", y_label="latency (s)",
                             series=["fog_service", "cloud_service"],
                             crossover_fne=crossover))


ENERGY_COLUMNS = ("config_hash", "seed", "n_consumers", "replication", "fne", "status",
                  "fog_tx_w", "fog_fog_w", "fog_cloud_w", "fog_power_w",
                  "cloud_tx_w", "cloud_cloud_w", "cloud_power_w", "savings_pct")


def run_energy_compare(spec, params=None):
    """Total power of both paradigms per consumer count, with the saving in percent."""
    params = params or ScenarioParams()
    fne = spec.fne
    rows = []
    for value, rep, fog, cloud, status in _sweep_points(spec, params, lambda _: fne):
        h, s = params.config_hash(), spec.seed + rep
        if status != "ok":
            rows.append((h, s, value, rep, fne, status) + (math.nan,) * 8)
            continue
        pf, pc = fog.power_terms, cloud.power_terms
        saving = 100.0 * (1.0 - pf.total / pc.total) if pc.total > 0 else 0.0
        rows.append((h, s, value, rep, fne, status, pf.tx, pf.fog_comp, pf.cloud_comp, pf.total,
                     pc.tx, pc.cloud_comp, pc.total, saving))
    return ResultTable(ENERGY_COLUMNS, rows,
                       _meta(params, spec, x="n_consumers", y_label="power (W)",
                             series=["fog_power_w", "cloud_power_w"]))


# ---------------------------------------------------------------------------
# optimized pilot cost


COST_COLUMNS = ("config_hash", "seed", "variable", "value", "replication", "cost", "penalty",
                "feasible", "generations")


def _pilot_point(params, variable, value, seed, consumer_cities):
    p = params.with_(**{variable: type(getattr(params, variable))(value)})
    return pilot_problem(p, seed, consumer_cities=consumer_cities)


def _optimize(problem, config, seeds):
    opt = ModifiedDE.from_config(config).fit(problem, seeds=seeds)
    best = opt.best_feasible_ or opt.best_
    return best, opt.n_generations_


def run_cost_sweep(spec, params=None):
    """Optimized total cost against consumers, arrival rate or FCN count.

    Consumers live in the first ``min(n_fogs)`` cities so every point shares
    them.  Points are optimized in two passes: the first in sweep order, the
    second in reverse, each seeded with the neighbour's best assignment
    carried over by consumer identity (besides the greedy genome and the
    point's own best so far).
    """
    params = params or pilot_params()
    if spec.variable not in COST_VARIABLES:
        raise ValueError(f"cost sweep variable must be one of {COST_VARIABLES}")
    fogs = spec.values if spec.variable == "n_fogs" else (params.n_fogs,)
    cities = int(min(min(fogs), params.consumer_cities or params.n_fogs))
    n_pts = len(spec.values)
    rows = []
    for rep in range(spec.replications):
        seed = spec.seed + rep
        problems = [_pilot_point(params, spec.variable, v, seed, cities) for v in spec.values]
        best = [None] * n_pts
        gens = [0] * n_pts
        for order in (range(n_pts), range(n_pts - 1, -1, -1)):
            prev = None
            for k in order:
                prob = problems[k]
                seeds = [np.zeros(prob.n_genes)]
                if best[k] is not None:
                    seeds.append(best[k].genome)
                if prev is not None:
                    dv = problems[prev].decode(best[prev].genome)
                    seeds.append(restrict_seed(problems[prev], dv, prob))
                cfg = MdeConfig(**{**spec.mde.__dict__, "seed": seed * 1000 + k})
                ind, g = _optimize(prob, cfg, seeds)
                if best[k] is None or (ind.penalty, ind.raw_fitness) < (best[k].penalty,
                                                                        best[k].raw_fitness):
                    best[k] = ind
                gens[k] += g
                prev = k
        for k, v in enumerate(spec.values):
            b = best[k]
            rows.append((params.config_hash(), seed, spec.variable, v, rep,
                         b.raw_fitness - b.penalty, b.penalty, b.penalty == 0, gens[k]))
    return ResultTable(COST_COLUMNS, rows,
                       _meta(params, spec, x="value", y_label="total cost (USD)",
                             series=["cost"]))


# ---------------------------------------------------------------------------
# worked vehicular example


def improvement_pct(before, after):
    """Relative improvement truncated (not rounded) to two decimals, as a string."""
    hundredths = (before - after) * 10_000 // before
    return f"{hundredths // 100}.{hundredths % 100:02d}"


def run_toy_vanet(optimize=True, seed=0, config=None):
    """Both hand-built scenarios of the vehicular example, plus the exact optimum.

    Returns a dict holding the two cost breakdowns, the integer totals, the
    improvement string, the worst upload delays as fractions and, when
    ``optimize`` is set, the optimizer's best total.
    """
    b = {k: toy_breakdown(*TOY_SCENARIOS[k]) for k in (1, 2)}
    totals = {k: int(b[k].total) for k in (1, 2)}
    delays = {k: max(toy_upload_delay(TOY_SCENARIOS[k][0])) for k in (1, 2)}
    oracle, o_assoc, o_host = toy_brute_force()
    out = {
        "breakdowns": b,
        "totals": totals,
        "improvement_pct": improvement_pct(totals[1], totals[2]),
        "upload_delay": delays,
        "delay_reduction_pct": str(100 * (1 - Fraction(delays[2]) / Fraction(delays[1]))),
        "brute_force": {"total": oracle, "assoc": o_assoc, "host": o_host},
    }
    if optimize:
        cfg = config or MdeConfig(pop_size=30, stall_generations=20, seed=seed)
        opt = ModifiedDE.from_config(cfg).fit(ToyVanetProblem())
        best = opt.best_feasible_ or opt.best_
        out["optimizer_total"] = best.raw_fitness - best.penalty
        out["optimizer_feasible"] = best.penalty == 0
    return out


TOY_COLUMNS = ("config_hash", "seed", "scenario", "upload", "vm", "inter_rsu", "total",
               "upload_delay")


def toy_table(result, seed=0):
    """Flatten :func:`run_toy_vanet` output into a :class:`ResultTable`."""
    h = ToyVanetProblem().params.config_hash()
    rows = []
    for k, b in result["breakdowns"].items():
        e = b.extra
        rows.append((h, seed, f"scenario-{k}", e["upload"], e["vm"], e["inter_rsu"],
                     int(b.total), str(result["upload_delay"][k])))
    bf = result["brute_force"]
    rows.append((h, seed, "brute-force", "", "", "", bf["total"], ""))
    if "optimizer_total" in result:
        rows.append((h, seed, "optimizer", "", "", "", int(round(result["optimizer_total"])), ""))
    meta = {"config_hash": h, "seed": seed, "version": __version__, "kind": "toy_vanet",
            "improvement_pct": result["improvement_pct"],
            "delay_reduction_pct": result["delay_reduction_pct"]}
    return ResultTable(TOY_COLUMNS, rows, meta)


# ---------------------------------------------------------------------------
# offload-probability calibration


PIC_COLUMNS = ("config_hash", "seed", "trial", "pi_c", "savings", "running_mean", "halfwidth")


def run_pic_estimate(spec, params=None, mc=None):
    """Monte Carlo search for the offload probability with the largest saving.

    Savings are cloud-only cost minus expected fog-assisted cost of the
    nearest-FCN plan at ``params.n_consumers``.
    """
    params = params or ScenarioParams()
    mc = mc or McConfig(seed=spec.seed)
    p, topo, plan = _paths(params, params.n_consumers, spec.seed)
    cloud = total_cloud_cost(plan, topo, p).total

    def savings(point):
        return cloud - total_fog_cost(plan, topo, p.with_(pi_c=float(point[0]))).total

    res = estimate_pi_c(savings, mc)
    rows = [(p.config_hash(), spec.seed, k, *r) for k, r in enumerate(res.samples)]
    meta = _meta(p, spec, x="trial", y_label="savings (USD)", series=["running_mean"],
                 estimate=res.estimate, estimate_halfwidth=res.estimate_halfwidth,
                 trials_used=res.trials_used, stopped_by=res.stopped_by)
    return ResultTable(PIC_COLUMNS, rows, meta)


def is_monotone(values, increasing=True, slack=0.01):
    """Adjacent-pair monotonicity with relative ``slack``."""
    v = [float(x) for x in values]
    for a, b in zip(v, v[1:]):
        tol = slack * max(abs(a), abs(b))
        if increasing and b < a - tol:
            return False
        if not increasing and b > a + tol:
            return False
    return True
