"""Analytic queue latencies, an M/M/n simulator and the slotted FCN buffer recurrences."""

import heapq
from dataclasses import dataclass

import numpy as np


class UnstableQueueError(ValueError):
    """Arrival rate meets or exceeds service capacity."""


class AdmissionError(ValueError):
    """A slot event is inconsistent with the current buffer state."""


def mm1_latency(service_rate, arrival_rate):
    """Mean sojourn time of an M/M/1 queue, ``1 / (r_s - r_a)``."""
    if arrival_rate < 0:
        raise ValueError("arrival_rate must be >= 0")
    if arrival_rate >= service_rate:
        raise UnstableQueueError(
            f"arrival rate {arrival_rate} >= service rate {service_rate}")
    return 1.0 / (service_rate - arrival_rate)


def erlang_c(n, arrival_rate, service_rate):
    """Probability that an arrival waits in an M/M/n queue.

    Uses the Erlang-B recursion ``B_k = a B_{k-1} / (k + a B_{k-1})`` and
    ``C = B / (1 - rho (1 - B))``, which never forms a factorial.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if service_rate <= 0 or arrival_rate < 0:
        raise ValueError("need service_rate > 0 and arrival_rate >= 0")
    if arrival_rate >= n * service_rate:
        raise UnstableQueueError(
            f"arrival rate {arrival_rate} >= capacity {n * service_rate}")
    a = arrival_rate / service_rate
    if a == 0:
        return 0.0
    b = 1.0
    for k in range(1, n + 1):
        b = a * b / (k + a * b)
    rho = a / n
    c = b / (1.0 - rho * (1.0 - b))
    return min(max(c, 0.0), 1.0)


def mmn_response_time(n, arrival_rate, service_rate):
    """Mean response time of M/M/n: ``C(n, a) / (n mu - lambda) + 1 / mu``."""
    c = erlang_c(n, arrival_rate, service_rate)
    return c / (n * service_rate - arrival_rate) + 1.0 / service_rate


def min_servers(arrival_rate, service_rate, target_util=1.0):
    """Smallest machine count keeping utilisation strictly below ``target_util``."""
    if arrival_rate <= 0:
        return 0
    n = int(np.floor(arrival_rate / (service_rate * target_util))) + 1
    return max(n, 1)


@dataclass(frozen=True)
class QueueState:
    input_backlog: int
    output_backlog: int
    input_cap: int
    output_cap: int

    def __post_init__(self):
        if not 0 <= self.input_backlog <= self.input_cap:
            raise AdmissionError("input backlog outside [0, N_I]")
        if not 0 <= self.output_backlog <= self.output_cap:
            raise AdmissionError("output backlog outside [0, N_o]")


@dataclass(frozen=True)
class SlotEvent:
    arrivals: int
    admitted: int
    input_drain: int
    output_drain: int

    def __post_init__(self):
        if not 0 <= self.admitted <= self.arrivals:
            raise AdmissionError("admitted requests must satisfy 0 <= admitted <= arrivals")
        if self.input_drain < 0 or self.output_drain < 0:
            raise AdmissionError("drains must be non-negative")


def buffer_step(state, event):
    """Advance the input/output backlogs by one slot.

    ``q_I' = q_I - drain_I + admitted`` and ``q_O' = q_O - drain_O + drain_I``.
    """
    if event.input_drain > state.input_backlog:
        raise AdmissionError("input drain exceeds input backlog")
    if event.output_drain > state.output_backlog:
        raise AdmissionError("output drain exceeds output backlog")
    q_in = state.input_backlog - event.input_drain + event.admitted
    q_out = state.output_backlog - event.output_drain + event.input_drain
    if q_in > state.input_cap:
        raise AdmissionError("admission exceeds free input capacity")
    if q_out > state.output_cap:
        raise AdmissionError("input drain overflows the output buffer")
    return QueueState(q_in, q_out, state.input_cap, state.output_cap)


def tail_drop(state, arrivals, input_drain):
    """Admission-control policy: admit up to the free input capacity."""
    free = state.input_cap - (state.input_backlog - input_drain)
    return max(0, min(arrivals, free))


def poisson_arrivals(rate, slot, rng):
    """Number of requests arriving in one slot of length ``slot`` seconds."""
    if rate < 0:
        raise ValueError("rate must be >= 0")
    if rate == 0:
        return 0
    return int(rng.poisson(rate * slot))


def simulate_mmn(n, arrival_rate, service_rate, n_arrivals, rng, control_variates=True,
                 batches=100):
    """Mean response time of a FCFS M/M/n queue by discrete-event simulation.

    Each arrival takes the server that frees up first and the queue starts
    empty.  With ``control_variates`` the raw mean is corrected by a
    batch-means regression on the sampled service and interarrival means,
    whose true values are known; near saturation this cuts the estimator's
    variance several-fold without adding bias.
    """
    if n < 1 or n_arrivals < batches:
        raise ValueError("need n >= 1 and n_arrivals >= batches")
    gaps = rng.exponential(1.0 / arrival_rate, n_arrivals)
    services = rng.exponential(1.0 / service_rate, n_arrivals)
    free = [0.0] * int(n)
    response = np.empty(n_arrivals)
    for k, (t, s) in enumerate(zip(np.cumsum(gaps).tolist(), services.tolist())):
        start = max(t, free[0])
        heapq.heapreplace(free, start + s)
        response[k] = start + s - t
    if not control_variates:
        return float(response.mean())
    m = n_arrivals // batches * batches
    y = response[:m].reshape(batches, -1).mean(axis=1)
    x = np.column_stack([services[:m].reshape(batches, -1).mean(axis=1) - 1.0 / service_rate,
                         gaps[:m].reshape(batches, -1).mean(axis=1) - 1.0 / arrival_rate])
    xc = x - x.mean(axis=0)
    beta, *_ = np.linalg.lstsq(xc, y - y.mean(), rcond=None)
    return float(y.mean() - x.mean(axis=0) @ beta)
