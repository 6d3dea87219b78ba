"""Modified differential evolution with fitness sharing and an elite set.

Each generation builds a trial population ``H`` by DE/rand/1/bin, ranks it
by shared fitness (raw fitness scaled by the niche count), keeps the better
half, merges it with the elite set ``E`` and refreshes ``E`` from the merged
population.  The individual with the best raw fitness is always kept, so the
best-ever fitness never gets worse.
"""

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform
from sklearn.base import BaseEstimator

from ._rng import make_rng

log = logging.getLogger(__name__)

HISTORY_COLUMNS = ("generation", "best_raw", "mean_raw", "best_shared", "feasible_count")


@dataclass(frozen=True)
class MdeConfig:
    pop_size: int = 40
    niche_radius: float | None = None       # None: 0.1 * sqrt(genome length)
    share_exponent: float = 1.0
    diff_weight: float = 0.5
    crossover_rate: float = 0.9
    elite_fraction: float = 0.5
    max_generations: int = 500
    stall_generations: int = 50
    target_tolerance: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if self.pop_size < 4:
            raise ValueError("pop_size must be >= 4 for DE/rand/1")
        if self.niche_radius is not None and self.niche_radius <= 0:
            raise ValueError("niche_radius must be > 0")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must lie in [0, 1]")
        if not 0.0 < self.elite_fraction < 1.0:
            raise ValueError("elite_fraction must lie in (0, 1)")


@dataclass
class Individual:
    genome: np.ndarray
    raw_fitness: float
    penalty: float = 0.0
    niche_count: float = 1.0

    @property
    def shared_fitness(self):
        return shared_fitness_min(self.raw_fitness, self.niche_count)

    @property
    def feasible(self):
        return self.penalty == 0


# ---------------------------------------------------------------------------
# sharing


def genome_distance(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("genomes must have equal length")
    return float(np.linalg.norm(a - b))


def sharing_value(d, rho, phi=1.0):
    """Triangular sharing kernel: ``1 - (d / rho)^phi`` inside the niche, else 0."""
    if rho <= 0:
        raise ValueError("rho must be > 0")
    d = np.asarray(d, dtype=float)
    inside = d < rho
    out = np.where(inside, 1.0 - np.power(np.where(inside, d, 0.0) / rho, phi), 0.0)
    return float(out) if out.ndim == 0 else out


def niche_counts(genomes, rho, phi=1.0):
    """Niche count of every individual, self-term included."""
    G = np.asarray(genomes, dtype=float)
    if len(G) == 1:
        return np.ones(1)
    D = squareform(pdist(G))
    return sharing_value(D, rho, phi).sum(axis=1)


def niche_count(i, pop, rho, phi=1.0):
    G = np.asarray(pop, dtype=float)
    d = cdist(G[i:i + 1], G)[0]
    return float(np.sum(sharing_value(d, rho, phi)))


def shared_fitness_min(raw, count):
    """Crowding makes a minimisation fitness worse: ``raw * count``.

    Negative fitness values are divided instead, which keeps the same
    direction of the penalty.
    """
    if count < 1:
        raise ValueError("niche count must be >= 1")
    return raw * count if raw >= 0 else raw / count


def shared_fitness_max(raw, count):
    if count < 1:
        raise ValueError("niche count must be >= 1")
    return raw / count


def rank(values):
    """Ascending order with ties broken by position."""
    values = np.asarray(values, dtype=float)
    return np.lexsort((np.arange(len(values)), values))


# ---------------------------------------------------------------------------
# variation


def de_variation(pop, i, config, rng):
    """DE/rand/1/bin trial vector for target ``i``, clamped to ``[0, 1]``."""
    P = np.asarray(pop, dtype=float)
    n, dim = P.shape
    if n < 4:
        raise ValueError("population must hold at least 4 individuals")
    others = np.delete(np.arange(n), i)
    r1, r2, r3 = rng.choice(others, size=3, replace=False)
    mutant = P[r1] + config.diff_weight * (P[r2] - P[r3])
    cross = rng.random(dim) < config.crossover_rate
    cross[rng.integers(dim)] = True
    trial = np.where(cross, mutant, P[i])
    return np.clip(trial, 0.0, 1.0)


# ---------------------------------------------------------------------------
# optimizer


def _threads():
    try:
        return max(1, int(os.environ.get("FOGPLAN_THREADS", "1")))
    except ValueError:
        return 1


class ModifiedDE(BaseEstimator):
    """Fitness-sharing differential evolution on the unit box.

    ``fit`` takes an objective mapping a genome to either a float or a
    ``(value, penalty)`` pair.  Raw fitness is ``value + penalty``; an
    individual is feasible when its penalty is zero.

    Attributes
    ----------
    best_ : Individual
        Best raw fitness ever evaluated.
    best_feasible_ : Individual or None
    history_ : list of dict
        One row per generation, keys :data:`HISTORY_COLUMNS`.
    population_ : ndarray of shape (pop_size, n_genes)
    n_generations_ : int
    """

    def __init__(self, pop_size=40, niche_radius=None, share_exponent=1.0, diff_weight=0.5,
                 crossover_rate=0.9, elite_fraction=0.5, max_generations=500,
                 stall_generations=50, target_tolerance=1e-9, seed=0, n_jobs=None):
        self.pop_size = pop_size
        self.niche_radius = niche_radius
        self.share_exponent = share_exponent
        self.diff_weight = diff_weight
        self.crossover_rate = crossover_rate
        self.elite_fraction = elite_fraction
        self.max_generations = max_generations
        self.stall_generations = stall_generations
        self.target_tolerance = target_tolerance
        self.seed = seed
        self.n_jobs = n_jobs

    @classmethod
    def from_config(cls, config, **kw):
        return cls(**asdict(config), **kw)

    @property
    def config(self):
        return MdeConfig(self.pop_size, self.niche_radius, self.share_exponent,
                         self.diff_weight, self.crossover_rate, self.elite_fraction,
                         self.max_generations, self.stall_generations,
                         self.target_tolerance, self.seed)

    def _evaluate(self, objective, genomes):
        def one(g):
            out = objective(g)
            value, pen = out if isinstance(out, tuple) else (out, 0.0)
            return float(value), float(pen)

        jobs = self.n_jobs or _threads()
        if jobs > 1 and len(genomes) > 1:
            with ThreadPoolExecutor(jobs) as ex:
                results = list(ex.map(one, genomes))
        else:
            results = [one(g) for g in genomes]
        values = np.array([v for v, _ in results])
        pens = np.array([p for _, p in results])
        return values + pens, pens

    def _shared(self, genomes, raw, rho):
        counts = niche_counts(genomes, rho, self.share_exponent)
        shared = np.array([shared_fitness_min(r, c) for r, c in zip(raw, counts)])
        return shared, counts

    def fit(self, objective, n_genes=None, seeds=None):
        """Minimise ``objective`` over ``[0, 1]^n_genes``.

        ``n_genes`` defaults to ``objective.n_genes``.  ``seeds`` are genomes
        placed in the initial population ahead of the random ones.
        """
        cfg = self.config
        dim = int(n_genes if n_genes is not None else objective.n_genes)
        rho = cfg.niche_radius or 0.1 * math.sqrt(dim)
        n_pop = cfg.pop_size
        n_elite = max(1, int(round(cfg.elite_fraction * n_pop)))

        pop = make_rng(cfg.seed, 0).random((n_pop, dim))
        for k, s in enumerate(list(seeds or [])[:n_pop]):
            pop[k] = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
        raw, pens = self._evaluate(objective, pop)
        shared, counts = self._shared(pop, raw, rho)
        elite = rank(shared)[:n_elite]
        E, E_raw, E_pen = pop[elite], raw[elite], pens[elite]

        b = int(rank(raw)[0])
        best = Individual(pop[b].copy(), raw[b], pens[b], counts[b])
        best_feasible = None
        if np.any(pens == 0):
            f = int(rank(np.where(pens == 0, raw, np.inf))[0])
            best_feasible = Individual(pop[f].copy(), raw[f], 0.0, counts[f])

        history = [self._row(0, best, raw, shared, pens)]
        stall = 0
        gen = 0
        for gen in range(1, cfg.max_generations + 1):
            trials = np.array([de_variation(pop, i, cfg, make_rng(cfg.seed, gen, i))
                               for i in range(n_pop)])
            t_raw, t_pen = self._evaluate(objective, trials)
            t_shared, _ = self._shared(trials, t_raw, rho)
            keep = rank(t_shared)[:n_pop - n_elite]

            pop = np.vstack([trials[keep], E])
            raw = np.concatenate([t_raw[keep], E_raw])
            pens = np.concatenate([t_pen[keep], E_pen])
            shared, counts = self._shared(pop, raw, rho)
            order = rank(shared)
            elite = order[:n_elite]
            top = int(rank(raw)[0])
            if top not in elite:
                elite = np.concatenate([elite[:-1], [top]])
            E, E_raw, E_pen = pop[elite], raw[elite], pens[elite]

            improved = raw[top] < best.raw_fitness
            gain = best.raw_fitness - raw[top]
            if improved:
                best = Individual(pop[top].copy(), raw[top], pens[top], counts[top])
            feas = np.nonzero(pens == 0)[0]
            if len(feas):
                f = int(feas[rank(raw[feas])[0]])
                if best_feasible is None or raw[f] < best_feasible.raw_fitness:
                    best_feasible = Individual(pop[f].copy(), raw[f], 0.0, counts[f])
            history.append(self._row(gen, best, raw, shared, pens))

            scale = max(abs(best.raw_fitness), 1.0)
            stall = 0 if improved and gain > cfg.target_tolerance * scale else stall + 1
            if stall >= cfg.stall_generations:
                log.debug("stopping after %d stagnant generations", stall)
                break

        self.best_ = best
        self.best_feasible_ = best_feasible
        self.history_ = history
        self.population_ = pop
        self.n_generations_ = gen
        return self

    @staticmethod
    def _row(gen, best, raw, shared, pens):
        return {
            "generation": gen,
            "best_raw": float(best.raw_fitness),
            "mean_raw": float(np.mean(raw)),
            "best_shared": float(np.min(shared)),
            "feasible_count": int(np.sum(pens == 0)),
        }

    def write_history(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=HISTORY_COLUMNS)
            w.writeheader()
            for row in self.history_:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def evolve(problem, config, seeds=None, n_genes=None):
    """Run :class:`ModifiedDE` and return ``(best individual, history)``.

    The best feasible individual is preferred; when none was ever found the
    best-penalty one is returned (its ``penalty`` is positive).
    """
    opt = ModifiedDE.from_config(config).fit(problem, n_genes=n_genes, seeds=seeds)
    best = opt.best_feasible_ if opt.best_feasible_ is not None else opt.best_
    if opt.best_feasible_ is None:
        log.warning("no feasible individual found; best penalty %.3g", opt.best_.penalty)
    return best, opt.history_
