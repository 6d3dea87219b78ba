import math

import numpy as np
import pytest

from fogplan._rng import make_rng
from fogplan.queueing import (AdmissionError, QueueState, SlotEvent, UnstableQueueError,
                              buffer_step, erlang_c, min_servers, mm1_latency,
                              mmn_response_time, poisson_arrivals, simulate_mmn, tail_drop)


def test_mm1_latency():
    assert mm1_latency(10.0, 4.0) == pytest.approx(1 / 6)
    with pytest.raises(UnstableQueueError):
        mm1_latency(5.0, 5.0)


@pytest.mark.parametrize("rho", [0.1, 0.5, 0.99])
def test_erlang_c_single_server_equals_utilisation(rho):
    assert erlang_c(1, rho, 1.0) == pytest.approx(rho, abs=1e-15)


def test_erlang_c_two_servers():
    assert abs(erlang_c(2, 1.0, 1.0) - 1 / 3) < 1e-12


def test_erlang_c_matches_factorial_formula():
    n, lam, mu = 6, 4.2, 1.0
    a = lam / mu
    top = a ** n / math.factorial(n) * n / (n - a)
    bottom = sum(a ** k / math.factorial(k) for k in range(n)) + top
    assert erlang_c(n, lam, mu) == pytest.approx(top / bottom, rel=1e-12)


def test_erlang_c_large_n_stays_finite():
    c = erlang_c(2000, 1900.0, 1.0)
    assert 0.0 <= c <= 1.0


def test_erlang_c_rejects_overload():
    with pytest.raises(UnstableQueueError):
        erlang_c(2, 2.0, 1.0)
    with pytest.raises(ValueError):
        erlang_c(0, 1.0, 1.0)


def test_mmn_reduces_to_mm1():
    assert mmn_response_time(1, 3.0, 5.0) == pytest.approx(mm1_latency(5.0, 3.0))


def test_min_servers_keeps_utilisation_below_target():
    for lam in (0.5, 7.0, 10.0, 99.9):
        n = min_servers(lam, 10.0, 0.7)
        assert lam / (n * 10.0) < 0.7
        assert n == 1 or (lam / ((n - 1) * 10.0)) >= 0.7
    assert min_servers(0.0, 10.0) == 0


def test_buffer_recurrence():
    s = QueueState(3, 1, 10, 5)
    out = buffer_step(s, SlotEvent(arrivals=4, admitted=4, input_drain=2, output_drain=1))
    assert (out.input_backlog, out.output_backlog) == (5, 2)


def test_buffer_rejects_inconsistent_events():
    s = QueueState(1, 0, 2, 2)
    with pytest.raises(AdmissionError):
        buffer_step(s, SlotEvent(3, 3, 0, 0))
    with pytest.raises(AdmissionError):
        buffer_step(s, SlotEvent(0, 0, 2, 0))
    with pytest.raises(AdmissionError):
        SlotEvent(1, 2, 0, 0)


def test_tail_drop_admits_up_to_free_space():
    s = QueueState(8, 0, 10, 10)
    assert tail_drop(s, 5, 1) == 3
    assert tail_drop(s, 1, 0) == 1


def test_poisson_arrivals_mean():
    rng = make_rng(3)
    draws = [poisson_arrivals(4.0, 0.5, rng) for _ in range(20000)]
    assert np.mean(draws) == pytest.approx(2.0, rel=0.03)
    assert poisson_arrivals(0.0, 1.0, rng) == 0


def test_simulator_light_load_quick():
    est = simulate_mmn(2, 0.6, 1.0, 50_000, make_rng(1))
    assert est == pytest.approx(mmn_response_time(2, 0.6, 1.0), rel=0.02)
