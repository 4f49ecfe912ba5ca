import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cognets.exchange import ExchangeLimits, build_contributed, key_vertices, relevance, retrieval_weight
from cognets.san import LOCATION, MOBILE, SemanticNet, derive_thresholds

from oracles import RefNet, random_san, ref_contributed

W_MIN = derive_thresholds(50, 25, 0.1, 0.1, 2).w_min


def chain(tags, pop=5, last=0, kind=MOBILE, owner="d", beta=0.1):
    net = SemanticNet(owner=owner, kind=kind, beta=beta)
    for t in tags:
        net.add_vertex(t)
    for a, b in zip(tags, tags[1:]):
        net.add_edge(a, b, last, pop)
    return net


def recipient(*tags):
    net = SemanticNet(owner="r")
    for t in tags:
        net.add_vertex(t)
    return net


# -- Eq. 2 ------------------------------------------------------------------------

def test_retrieval_weight_closed_form():
    assert retrieval_weight(1.0, 1, 0.1, 2.0) == pytest.approx(1 - math.exp(-0.2), abs=1e-12)
    assert retrieval_weight(0.8, 2, 0.1, 2.0) == pytest.approx(0.4 * (1 - math.exp(-0.2)), abs=1e-12)
    assert retrieval_weight(0.8, 2, 0.1, 2.0) == pytest.approx(0.0725077, rel=1e-6)
    assert retrieval_weight(0.7, 3, 0.1, 0.0) == 0.0


# -- key vertices -----------------------------------------------------------------

def test_disjoint_gives_no_keys_and_empty_contribution():
    d = chain(["a", "b", "c"])
    assert key_vertices(d, recipient("x", "y"), 0) == []
    c = build_contributed(d, recipient("x"), 0, 2.0, ExchangeLimits(10, 2, W_MIN, 5))
    assert not c.vertices and not c.edges


def test_single_key_relevance():
    d = chain(["b", "a", "c"], last=1000)
    assert relevance(d, "a", 1000) == 2.0
    assert key_vertices(d, recipient("a"), 1000) == ["a"]


def test_keys_ordered_by_relevance():
    # rel(A) = 1 + e^-0.1 (fresh edge, p=5 edge idle 5s)
    # rel(B) = e^-0.5 + e^-4 (p=1 edges idle 5s and 40s)
    d = SemanticNet(owner="d")
    for t in "ABCD":
        d.add_vertex(t)
    d.add_edge("A", "C", 40_000, 1)
    d.add_edge("A", "D", 35_000, 5)
    d.add_edge("B", "C", 35_000, 1)
    d.add_edge("B", "D", 0, 1)
    now = 40_000
    assert relevance(d, "A", now) == pytest.approx(1 + math.exp(-0.1), abs=1e-12)
    assert relevance(d, "B", now) == pytest.approx(math.exp(-0.5) + math.exp(-4), abs=1e-12)
    assert key_vertices(d, recipient("B", "A"), now) == ["A", "B"]


# -- the worked example -------------------------------------------------------------

def test_chain_walk_stops_at_tag_cap():
    d = chain(list("ABCDE"))
    c = build_contributed(d, recipient("A"), 0, 2.0, ExchangeLimits(4, 1, W_MIN, 5))
    assert set(c.vertices) == {"A", "B", "C", "D"}
    assert c.edge_set() == {("A", "B"), ("B", "C"), ("C", "D")}


def test_most_popular_annotation_only():
    d = chain(["A", "B"])
    d.annotate("A", "L1", 3)
    d.annotate("A", "L2", 1)
    c = build_contributed(d, recipient("A"), 0, 2.0, ExchangeLimits(4, 1, W_MIN, 5))
    assert c.vertices["A"] == ("L1",)


def test_location_donor_names_itself():
    d = chain(["A", "B"], kind=LOCATION, owner="L7", beta=0.0)
    d.frozen = True
    d.annotate("A", "L7", 1)
    c = build_contributed(d, recipient("A"), 0, 2.0, ExchangeLimits(4, 2, W_MIN, 5))
    assert c.vertices == {"A": ("L7",), "B": ("L7",)}
    assert d.edge("A", "B").popularity == 5


# -- filters ------------------------------------------------------------------------

def test_unrecognised_edges_not_donated():
    d = chain(list("ABC"), pop=4)
    c = build_contributed(d, recipient("A"), 0, 2.0, ExchangeLimits(10, 1, W_MIN, 5))
    # the sweep lifts A-B to 5 before the walk, B-C stays at 4
    assert c.edge_set() == {("A", "B")}


def test_short_contact_donates_nothing():
    d = chain(list("ABC"))
    c = build_contributed(d, recipient("A"), 0, 0.0, ExchangeLimits(10, 1, W_MIN, 5))
    assert set(c.vertices) == {"A"} and not c.edges


def test_t_max_zero():
    d = chain(list("ABC"))
    c = build_contributed(d, recipient("A"), 0, 2.0, ExchangeLimits(0, 1, W_MIN, 5))
    assert not c.vertices and not c.edges


def test_donor_mutation():
    d = chain(list("ABC"), last=0)
    build_contributed(d, recipient("A"), 3000, 2.0, ExchangeLimits(10, 1, 0.0, 5))
    ab, bc = d.edge("A", "B"), d.edge("B", "C")
    # A-B: sweep +1 and inclusion +1; B-C: inclusion only
    assert (ab.popularity, ab.last_activation) == (7, 3000)
    assert (bc.popularity, bc.last_activation) == (6, 3000)


# -- oracle ---------------------------------------------------------------------------

def _case(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 16))
    kind = LOCATION if rng.random() < 0.2 else MOBILE
    donor = random_san(rng, n, float(rng.uniform(0.1, 0.7)), owner="Ld" if kind == LOCATION else "d",
                       kind=kind, max_pop=int(rng.integers(1, 10)))
    tags = sorted(donor.tags())
    r_tags = {t for t in tags if rng.random() < 0.3} | {f"x{i}" for i in range(int(rng.integers(0, 3)))}
    limits = ExchangeLimits(int(rng.integers(0, n + 2)), int(rng.integers(0, 4)),
                            float(rng.choice([0.0, W_MIN, rng.uniform(0, 0.2)])), int(rng.integers(0, 8)))
    elapsed = float(rng.choice([0.0, 1.0, 2.0, 5.0, rng.uniform(0, 30)]))
    return donor, r_tags, limits, elapsed


def test_matches_reference_on_random_cases():
    now = 100_000
    for seed in range(1000):
        donor, r_tags, lim, elapsed = _case(seed)
        ref = RefNet.from_san(donor)
        V, E = ref_contributed(ref, r_tags, now, elapsed, lim.t_max, lim.l_max, lim.w_min, lim.theta_rec)
        c = build_contributed(donor, r_tags, now, elapsed, lim)
        assert list(c.vertices) == list(V), seed
        assert list(c.vertices.values()) == list(V.values()), seed
        assert c.edges == E, seed
        got = {e.key: (e.last_activation, e.popularity) for e in donor.edges()}
        assert got == ref.edge_state(), seed


# -- properties ---------------------------------------------------------------------------

@given(st.floats(0.0, 1.0), st.integers(1, 6), st.floats(0.0, 60.0), st.floats(0.0, 60.0))
def test_filter_monotone_in_elapsed(m, n, e1, e2):
    lo, hi = sorted((e1, e2))
    assert retrieval_weight(m, n, 0.1, lo) <= retrieval_weight(m, n, 0.1, hi)


def random_tree(rng, n):
    net = SemanticNet(owner="d")
    tags = [f"t{i:02d}" for i in range(n)]
    for t in tags:
        net.add_vertex(t)
    for i in range(1, n):
        net.add_edge(tags[int(rng.integers(0, i))], tags[i], int(100_000 - 1000 * rng.integers(0, 40)),
                     int(rng.integers(1, 9)))
    return net


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.0, 40.0), st.floats(0.0, 40.0))
def test_contribution_grows_with_contact_time_on_trees(seed, e1, e2):
    # on a tree with one key vertex each vertex has a single depth, so only the filter changes
    lo, hi = sorted((e1, e2))
    rng = np.random.default_rng(seed)
    donor = random_tree(rng, 12)
    r_tags = {f"t{int(rng.integers(0, 12)):02d}"}
    lim = ExchangeLimits(1000, 2, W_MIN, 3)
    a = build_contributed(donor.copy(), r_tags, 100_000, lo, lim)
    b = build_contributed(donor.copy(), r_tags, 100_000, hi, lim)
    assert a.edge_set() <= b.edge_set()


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.0, 40.0))
def test_contribution_invariants(seed, elapsed):
    rng = np.random.default_rng(seed)
    donor = random_san(rng, 12, 0.3)
    r_tags = {t for t in donor.tags() if rng.random() < 0.3}
    lim = ExchangeLimits(int(rng.integers(0, 13)), 2, W_MIN, 3)
    now = 100_000
    before = {e.key: e.popularity for e in donor.edges()}
    c = build_contributed(donor.copy(), r_tags, now, elapsed, lim)
    again = build_contributed(donor.copy(), r_tags, now, elapsed, lim)
    assert (c.vertices, c.edges) == (again.vertices, again.edges)
    assert len(c.vertices) <= lim.t_max
    keys = set(r_tags) & set(donor.tags())
    # C is a union of trees rooted at key vertices
    reach = {k for k in keys if k in c.vertices}
    for u, v in c.edges:
        assert u in c.vertices and v in c.vertices
        assert u in reach or v in reach
        reach |= {u, v}
    for u, v in c.edges:
        swept = (u in keys) + (v in keys) > 0
        assert before[(u, v)] + swept >= lim.theta_rec
    for ann in c.vertices.values():
        assert len(ann) <= 2
