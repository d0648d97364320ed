import random
from collections import defaultdict

import pytest
from hypothesis import given, settings, strategies as st

from photonoc.emesh import (ENERGY_PER_HOP_J, HMESH_WIDTH, LMESH_WIDTH, LOCAL, MINUS_X,
                            PLUS_X, PLUS_Y, Mesh, hop_count, route, route_step)
from photonoc.kernel import Simulator
from photonoc.message import READ_REQ, READ_RESP
from photonoc.network import msg_class

from helpers import msg, push
from oracles import brute_hops, mesh_zero_load_tail


def cid(i, j):
    return i * 8 + j


def make_mesh(width=HMESH_WIDTH, depth=16, queue=16):
    sim = Simulator()
    got = []
    mesh = Mesh(sim, width, buffer_depth=depth, queue_depth=queue,
                deliver=lambda m: got.append((m, sim.now)))
    return sim, mesh, got


def test_link_widths_from_bisection():
    assert HMESH_WIDTH == 16
    assert LMESH_WIDTH == 8
    for w, bis in ((HMESH_WIDTH, 1.28e12), (LMESH_WIDTH, 0.64e12)):
        assert 8 * 2 * w * 5e9 == pytest.approx(bis)


def test_dimension_order_route():
    hops = route(cid(0, 0), cid(3, 5))
    ports = [p for _, p in hops]
    assert ports == [PLUS_X] * 3 + [PLUS_Y] * 5
    assert hops[3][0] == cid(3, 0)
    assert len(hops) == 8


def test_route_step_examples():
    assert route_step((2, 2), (2, 2)) == LOCAL
    assert route_step((7, 0), (0, 0)) == MINUS_X


@given(st.integers(0, 63), st.integers(0, 63))
def test_route_length_is_manhattan(a, b):
    assert len(route(a, b)) == hop_count(a, b)


def test_mean_hops_oracle():
    assert brute_hops() == 5.25
    exact = sum(hop_count(a, b) for a in range(64) for b in range(64)) / 64 ** 2
    assert exact == 5.25


@pytest.mark.parametrize("width, kind, src, dst, tail_cycles", [
    (HMESH_WIDTH, READ_RESP, cid(0, 0), cid(3, 5), 44),
    (LMESH_WIDTH, READ_RESP, cid(0, 0), cid(3, 5), 48),
    (HMESH_WIDTH, READ_REQ, cid(4, 4), cid(4, 5), 5),
    (LMESH_WIDTH, READ_REQ, cid(4, 4), cid(5, 4), 5),
])
def test_zero_load_examples(width, kind, src, dst, tail_cycles):
    sim, mesh, got = make_mesh(width)
    push(mesh, msg(kind, src, dst))
    sim.run()
    assert got[0][1] == tail_cycles * 8


@settings(max_examples=60, deadline=None)
@given(src=st.integers(0, 63), dst=st.integers(0, 63), lmesh=st.booleans(),
       kind=st.sampled_from([READ_REQ, READ_RESP]), start=st.integers(0, 50),
       depth=st.sampled_from([4, 8, 16]))
def test_zero_load_matches_formula(src, dst, lmesh, kind, start, depth):
    width = LMESH_WIDTH if lmesh else HMESH_WIDTH
    sim, mesh, got = make_mesh(width, depth)
    m = msg(kind, src, dst)
    sim.schedule(start * 8, push, mesh, m)
    sim.run()
    flits = mesh.flits(m)
    assert flits == -(-m.size_bytes // width)
    assert got[0][1] - start * 8 == mesh_zero_load_tail(hop_count(src, dst), flits) * 8
    assert m.hops == hop_count(src, dst)


def test_energy_counts_message_hops():
    sim, mesh, _ = make_mesh()
    for s, d in ((0, 1), (0, 63), (9, 9)):
        push(mesh, msg(READ_REQ, s, d))
    sim.run()
    assert mesh.message_hops == 1 + 14 + 0
    assert mesh.energy_joules(1.0) == pytest.approx(15 * ENERGY_PER_HOP_J)


def random_load(mesh, sim, rng, flit_hops_target, kinds=(READ_REQ, READ_RESP)):
    """Keep every source's send queue full with uniform random traffic."""
    def fill(src):
        while mesh.flit_hops < flit_hops_target:
            m = msg(rng.choice(kinds), src, rng.randrange(64))
            if not mesh.has_space(src, msg_class(m)):
                return
            push(mesh, m)
    mesh.on_space = lambda src: sim.after(8, fill, src)
    for s in range(64):
        sim.schedule(0, fill, s)


def record_holds(mesh):
    holds = defaultdict(list)
    orig = mesh._release

    def rec(worm, h):
        end = mesh._depart(worm, h, worm.flits - 1) + 8
        holds[worm.path[h].name].append((worm.acq[h], end, id(worm)))
        orig(worm, h)
    mesh._release = rec
    return holds


@pytest.mark.parametrize("width, depth", [(HMESH_WIDTH, 16), (LMESH_WIDTH, 16), (LMESH_WIDTH, 4)])
def test_random_traffic_no_deadlock_no_interleaving(width, depth):
    sim, mesh, got = make_mesh(width, depth, queue=4)
    holds = record_holds(mesh)
    random_load(mesh, sim, random.Random(width * 100 + depth), 200_000)
    sim.run(outstanding=lambda: f"{mesh.in_flight} worms stuck" if mesh.in_flight else None)
    assert mesh.in_flight == 0
    assert len(got) == mesh.messages
    for name, spans in holds.items():
        spans.sort()
        for (a0, a1, _), (b0, b1, _) in zip(spans, spans[1:]):
            assert a1 <= b0, f"worms interleave on {name}"
    # flit conservation: every injected flit is ejected
    assert sum(mesh.flits(m) * m.hops for m, _ in got) == mesh.flit_hops


def test_uniform_hop_mean_within_two_percent():
    sim, mesh, got = make_mesh(LMESH_WIDTH)
    rng = random.Random(5)
    mesh.queue_depth = 10**9
    for k in range(100_000):
        push(mesh, msg(READ_REQ, rng.randrange(64), rng.randrange(64)))
    assert mesh.message_hops / mesh.messages == pytest.approx(5.25, rel=0.02)
