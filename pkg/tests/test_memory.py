import random

import pytest
from hypothesis import given, settings, strategies as st

from photonoc.kernel import SimulationError, Simulator
from photonoc.memory import (ECM, OCM, CreditPool, MemoryController, aggregate_bandwidth,
                             serialize_cycles)
from photonoc.message import READ_REQ, READ_RESP, WRITE_REQ, Message

from oracles import byte_link_finish


def make_ctrl(spec, depth=64):
    sim = Simulator()
    done = []
    ctrl = MemoryController(sim, 5, spec, depth, lambda m: done.append((m, sim.now // 8)))
    return sim, ctrl, done


def request(kind=READ_REQ, src=0, address=0):
    return Message(kind, src, 5, address)


@pytest.mark.parametrize("spec, kind, cycles", [
    (OCM, READ_REQ, 1 + 100 + 4),
    (ECM, READ_REQ, 3 + 100 + 22),
    (OCM, WRITE_REQ, 5 + 100),
    (ECM, WRITE_REQ, 24 + 100),
])
def test_zero_load(spec, kind, cycles):
    sim, ctrl, done = make_ctrl(spec)
    sim.schedule(40, ctrl.access, request(kind))
    sim.run()
    assert done[0][1] == 5 + cycles
    assert ctrl.zero_load_cycles(kind) == cycles


def test_aggregate_bandwidths():
    assert aggregate_bandwidth(OCM) == pytest.approx(10.24e12)
    assert aggregate_bandwidth(ECM) == pytest.approx(0.96e12)
    assert OCM.read_ceiling_bytes_per_s == pytest.approx(80e9)
    assert serialize_cycles(72, 16) == 5


@pytest.mark.parametrize("spec, per_line", [(OCM, 4), (ECM, 64 / 3)])
def test_saturated_return_link(spec, per_line):
    sim, ctrl, done = make_ctrl(spec)
    n = 300
    for k in range(n):
        sim.schedule(0, ctrl.access, request(address=64 * k))
    sim.run()
    times = [t for _, t in done]
    rate = (times[-1] - times[0]) / (n - 1)
    assert rate == pytest.approx(per_line, abs=0.01)
    # a full window never moves more than the link width
    for a in range(len(times)):
        for b in range(a + 1, min(a + 40, len(times))):
            assert (b - a) * 64 <= (times[b] - times[a] + 1) * spec.ret_width + 64


@settings(max_examples=50, deadline=None)
@given(arrivals=st.lists(st.integers(0, 400), min_size=1, max_size=40),
       ecm=st.booleans())
def test_reads_match_byte_link_oracle(arrivals, ecm):
    spec = ECM if ecm else OCM
    sim, ctrl, done = make_ctrl(spec)
    arrivals.sort()
    for k, a in enumerate(arrivals):
        sim.schedule(a * 8, ctrl.access, request(address=64 * k))
    sim.run()
    out = byte_link_finish(arrivals, 8, spec.out_width)
    ret = byte_link_finish([t + 100 for t in out], 64, spec.ret_width)
    assert [t for _, t in done] == ret


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 300), st.booleans()), min_size=1, max_size=40))
def test_fifo_and_latency_floor(items):
    sim, ctrl, done = make_ctrl(ECM)
    items.sort()
    arrive = {}
    for k, (a, w) in enumerate(items):
        m = request(WRITE_REQ if w else READ_REQ, address=64 * k)
        arrive[id(m)] = (k, a, m.kind)
        sim.schedule(a * 8, ctrl.access, m)
    sim.run()
    order = [arrive[id(m)][0] for m, _ in done]
    assert order == sorted(order)
    for m, t in done:
        _, a, kind = arrive[id(m)]
        assert t - a >= ctrl.zero_load_cycles(kind)


def test_rejects_misrouted_message():
    sim, ctrl, _ = make_ctrl(OCM)
    with pytest.raises(SimulationError):
        ctrl.access(Message(READ_REQ, 0, 6))
    with pytest.raises(SimulationError):
        ctrl.access(Message(READ_RESP, 0, 5))


def test_credit_pool_fifo_handoff():
    pool = CreditPool(2)
    woke = []
    assert pool.acquire(lambda: woke.append("a"))
    assert pool.acquire(lambda: woke.append("b"))
    assert not pool.acquire(lambda: woke.append("c"))
    assert not pool.acquire(lambda: woke.append("d"))
    pool.release()
    assert woke == ["c"] and pool.in_use == 2
    pool.release()
    pool.release()
    assert woke == ["c", "d"] and pool.in_use == 1
    pool.release()
    with pytest.raises(SimulationError):
        pool.release()


def test_payload_counter():
    sim, ctrl, _ = make_ctrl(OCM)
    rng = random.Random(1)
    for k in range(50):
        sim.schedule(k * 8, ctrl.access, request(rng.choice([READ_REQ, WRITE_REQ]), address=64 * k))
    sim.run()
    assert ctrl.payload_bytes == 50 * 64
    assert ctrl.reads + ctrl.writes == 50
