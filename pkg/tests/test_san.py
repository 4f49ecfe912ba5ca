import math

import pytest
from hypothesis import given, settings, strategies as st

from cognets.exchange import ContributedNet
from cognets.san import (LOCATION, MOBILE, SemanticNet, activate_edge, decay, derive_thresholds,
                         memory_weight, merge_contributed, parse_snapshot, prune_forgotten, to_ms)


def net_with(edges, beta=0.1, now=0):
    net = SemanticNet(owner="u", kind=MOBILE, beta=beta)
    for a, b, last, pop in edges:
        net.add_vertex(a)
        net.add_vertex(b)
        net.add_edge(a, b, last, pop)
    return net


# -- memory weight ------------------------------------------------------------

def test_fresh_edge_has_unit_weight():
    net = net_with([("a", "b", 5000, 1)])
    assert memory_weight(net, net.edge("a", "b"), 5000) == 1.0


def test_zero_beta_never_decays():
    net = net_with([("a", "b", 0, 3)], beta=0.0)
    assert memory_weight(net, net.edge("a", "b"), to_ms(1e6)) == 1.0


def test_weight_closed_form():
    net = net_with([("a", "b", 0, 2)])
    assert memory_weight(net, net.edge("a", "b"), 10_000) == pytest.approx(math.exp(-0.5), abs=1e-12)


def test_future_activation_rejected():
    net = net_with([("a", "b", 10_000, 1)])
    with pytest.raises(ValueError):
        memory_weight(net, net.edge("a", "b"), 0)


@given(st.integers(1, 50), st.floats(0, 1e4), st.floats(0.001, 1e3))
def test_weight_monotone(pop, dt, extra):
    assert decay(0.1, pop, dt + extra) < decay(0.1, pop, dt) or decay(0.1, pop, dt) == 0.0
    if dt > 0:
        assert decay(0.1, pop + 1, dt) >= decay(0.1, pop, dt)
    assert 0.0 <= decay(0.1, pop, dt) <= 1.0


# -- thresholds -----------------------------------------------------------------

@pytest.mark.parametrize("forget, expected", [(50, 0.00673795), (75, 0.000553084)])
def test_m_min(forget, expected):
    th = derive_thresholds(forget, 25, 0.1, 0.1, 2)
    assert th.m_min == pytest.approx(math.exp(-0.1 * forget), abs=1e-12)
    assert th.m_min == pytest.approx(expected, rel=1e-6)


def test_w_min():
    th = derive_thresholds(50, 25, 0.1, 0.1, 2)
    assert th.w_min == pytest.approx(math.exp(-2.5) * (1 - math.exp(-0.2)), abs=1e-12)
    assert th.w_min == pytest.approx(0.0148796, rel=1e-5)


# -- pruning --------------------------------------------------------------------

def test_prune_boundary():
    m_min = derive_thresholds(50, 25, 0.1, 0.1, 2).m_min
    net = net_with([("a", "b", 0, 1)])
    assert prune_forgotten(net, 49_000, m_min) == ([], [])
    assert net.edge("a", "b") is not None
    removed, dropped = prune_forgotten(net, 51_000, m_min)
    assert removed == [("a", "b")]
    assert dropped == ["a", "b"]
    assert len(net) == 0


def test_prune_keeps_never_connected_vertex():
    net = net_with([("a", "b", 0, 1)])
    net.add_vertex("c")
    prune_forgotten(net, 100_000, 0.01)
    assert "c" in net and "a" not in net


def test_prune_keeps_vertex_with_surviving_edge():
    net = net_with([("a", "b", 0, 1), ("b", "c", 0, 50)])
    prune_forgotten(net, 60_000, math.exp(-5))
    assert "b" in net and "c" in net and "a" not in net


def test_prune_idempotent_and_location_exempt():
    net = net_with([("a", "b", 0, 1), ("b", "c", 40_000, 1)])
    first = prune_forgotten(net, 60_000, math.exp(-5))
    assert first[0] == [("a", "b")]
    assert prune_forgotten(net, 60_000, math.exp(-5)) == ([], [])
    loc = SemanticNet(owner="L", kind=LOCATION, beta=0.1)
    loc.add_vertex("x")
    loc.add_vertex("y")
    loc.add_edge("x", "y", 0, 1)
    assert prune_forgotten(loc, 10 ** 9, 0.5) == ([], [])


# -- activation and merge ---------------------------------------------------------

def test_activate_existing_and_new():
    net = net_with([("a", "b", 0, 3)])
    e = activate_edge(net, "a", "b", 7000)
    assert e.popularity == 4 and memory_weight(net, e, 7000) == 1.0
    net.add_vertex("c")
    e2 = activate_edge(net, "a", "c", 7000)
    assert e2.popularity == 1
    assert memory_weight(net, e2, 9000) == pytest.approx(math.exp(-0.2), abs=1e-12)
    with pytest.raises(ValueError):
        activate_edge(net, "a", "a", 0)


def test_merge_adds_missing():
    net = SemanticNet(owner="r")
    net.add_vertex("A")
    merge_contributed(net, ContributedNet({"A": (), "B": ()}, [("A", "B")]), 3000)
    e = net.edge("A", "B")
    assert set(net.tags()) == {"A", "B"}
    assert (e.last_activation, e.popularity) == (3000, 1)


def test_merge_annotation_popularity():
    net = SemanticNet(owner="r")
    net.add_vertex("A")
    net.annotate("A", "L1", 2)
    merge_contributed(net, ContributedNet({"A": ("L1", "L2")}, []), 0)
    assert net.annotations_of("A") == {"L1": 3, "L2": 1}


def test_merge_existing_edge_bumped():
    net = net_with([("A", "B", 0, 2)])
    merge_contributed(net, ContributedNet({"A": (), "B": ()}, [("A", "B")]), 5000)
    e = net.edge("A", "B")
    assert (e.last_activation, e.popularity) == (5000, 3)


def test_merge_empty_is_identity():
    net = net_with([("A", "B", 0, 2)])
    before = net.snapshot()
    merge_contributed(net, ContributedNet(), 10_000)
    assert net.snapshot() == before


def test_location_never_receives():
    loc = SemanticNet(owner="L", kind=LOCATION)
    with pytest.raises(ValueError):
        merge_contributed(loc, ContributedNet(), 0)


# -- structure ------------------------------------------------------------------

def test_invalid_edges_rejected():
    net = net_with([("a", "b", 0, 1)])
    with pytest.raises(ValueError):
        net.add_edge("a", "a", 0, 1)
    with pytest.raises(ValueError):
        net.add_edge("a", "b", 0, 1)
    with pytest.raises(KeyError):
        net.add_edge("a", "zz", 0, 1)
    net.add_vertex("c")
    with pytest.raises(ValueError):
        net.add_edge("a", "c", 0, 0)


def test_snapshot_roundtrip():
    net = net_with([("b", "a", 1000, 2), ("c", "a", 0, 1)])
    net.annotate("a", "L2", 1)
    net.annotate("a", "L1", 4)
    text = net.snapshot()
    assert text.splitlines()[0] == "V a L1:4 L2:1"
    assert "E a b 1000 2" in text.splitlines()
    assert parse_snapshot(text).snapshot() == text


ops = st.lists(st.tuples(st.sampled_from(["add_v", "add_e", "rm_e", "rm_v", "act", "prune", "merge"]),
                         st.integers(0, 7), st.integers(0, 7), st.integers(0, 60)), max_size=60)


@settings(max_examples=200, deadline=None)
@given(ops)
def test_random_operation_sequences_keep_invariants(seq):
    net = SemanticNet(owner="u", beta=0.1)
    now = 0
    for op, i, j, dt in seq:
        now += dt * 1000
        a, b = f"t{i}", f"t{j}"
        if op == "add_v":
            net.add_vertex(a)
        elif op == "add_e" and a != b and a in net and b in net and net.edge(a, b) is None:
            net.add_edge(a, b, now, 1 + dt % 4)
        elif op == "rm_e" and net.edge(a, b) is not None:
            net.remove_edge(a, b)
        elif op == "rm_v" and a in net:
            net.remove_vertex(a)
        elif op == "act" and a != b and a in net and b in net:
            activate_edge(net, a, b, now)
        elif op == "prune":
            prune_forgotten(net, now, math.exp(-5))
        elif op == "merge" and a != b:
            c = ContributedNet({a: ("L1",), b: ()}, [tuple(sorted((a, b)))])
            merge_contributed(net, c, now)
            assert memory_weight(net, net.edge(a, b), now) == 1.0
        net.check()
        for e in net.edges():
            assert e.u != e.v and e.u in net and e.v in net and e.popularity >= 1
            assert e.last_activation <= now
