"""Monte Carlo calibration of the offload probability with Latin hypercube batches."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ._rng import make_rng


def lhs_sample(n, dims, rng):
    """``n`` points in ``[0, 1)^dims`` with exactly one point per stratum per dimension."""
    if n < 1 or dims < 1:
        raise ValueError("need n >= 1 and dims >= 1")
    u = rng.random((n, dims))
    strata = np.column_stack([rng.permutation(n) for _ in range(dims)])
    x = (strata + u) / n
    # guard against rounding up to the upper stratum edge
    return np.minimum(x, np.nextafter((strata + 1) / n, 0.0))


def ci_halfwidth(samples, level=0.95, student_t=False):
    """Two-sided confidence half-width of the sample mean."""
    x = np.asarray(samples, dtype=float)
    n = len(x)
    if n < 2:
        raise ValueError("need at least 2 samples")
    q = (1.0 + level) / 2.0
    z = stats.t.ppf(q, n - 1) if student_t else stats.norm.ppf(q)
    return float(z * x.std(ddof=1) / math.sqrt(n))


@dataclass(frozen=True)
class McConfig:
    max_trials: int = 1000
    ci_level: float = 0.95
    target_rel_error: float = 0.01
    dims: int = 1
    seed: int = 0
    batch_size: int = 30
    min_trials: int = 30
    relative: bool = True
    student_t: bool = False

    def __post_init__(self):
        if self.max_trials < 2:
            raise ValueError("max_trials must be >= 2")
        if not 0.0 < self.ci_level < 1.0:
            raise ValueError("ci_level must lie in (0, 1)")
        if self.target_rel_error <= 0:
            raise ValueError("target_rel_error must be > 0")
        if self.dims < 1 or self.batch_size < 2 or self.min_trials < 2:
            raise ValueError("dims >= 1, batch_size >= 2 and min_trials >= 2 required")


@dataclass
class McResult:
    estimate: float
    estimate_halfwidth: float
    mean_savings: float
    ci_halfwidth: float
    trials_used: int
    stopped_by: str
    samples: list = field(default_factory=list)   # (pi_c, savings, running_mean, halfwidth)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["trial", "pi_c", "savings", "running_mean", "halfwidth"])
            for k, row in enumerate(self.samples):
                w.writerow([k] + [repr(float(v)) for v in row])


class TrialError(RuntimeError):
    """The objective failed on one Monte Carlo trial."""


def estimate_pi_c(objective, config=McConfig()):
    """Search the offload probability that maximises fog-minus-cloud savings.

    ``objective`` maps a sampled point (``pi_c`` first, then any further
    sampled uncertainties, all in ``[0, 1)``) to a savings value.  Trials come
    in Latin hypercube batches, each batch stratified on its own, and the loop
    stops at a batch boundary once the relative CI half-width of the mean
    savings drops below the target, or the half-width is zero, or
    ``max_trials`` is reached.
    """
    xs, ys, rows = [], [], []
    stopped_by = "max_trials"
    batch = 0
    hw = math.inf
    while len(ys) < config.max_trials:
        size = min(config.batch_size, config.max_trials - len(ys))
        points = lhs_sample(size, config.dims, make_rng(config.seed, batch))
        for p in points:
            k = len(ys)
            try:
                value = float(objective(p))
            except Exception as exc:
                raise TrialError(f"objective failed on trial {k}") from exc
            xs.append(float(p[0]))
            ys.append(value)
            mean = float(np.mean(ys))
            hw = ci_halfwidth(ys, config.ci_level, config.student_t) if len(ys) > 1 else math.inf
            rows.append((xs[-1], value, mean, hw))
        batch += 1
        if len(ys) < config.min_trials:
            continue
        mean = float(np.mean(ys))
        if hw == 0.0:
            stopped_by = "zero_variance"
            break
        err = hw / abs(mean) if config.relative and mean != 0 else hw
        if err < config.target_rel_error:
            stopped_by = "precision"
            break

    y = np.asarray(ys)
    x = np.asarray(xs)
    best = int(np.lexsort((np.arange(len(y)), -y))[0])
    near = np.abs(y[best] - y) <= hw
    return McResult(
        estimate=float(x[best]),
        estimate_halfwidth=float(np.max(np.abs(x[near] - x[best]))),
        mean_savings=float(y.mean()),
        ci_halfwidth=float(hw),
        trials_used=len(ys),
        stopped_by=stopped_by,
        samples=rows,
    )
