"""Physical locations and the SANs they hold about themselves.

A location's tags come ranked by TF-IDF relevance. They are wired either as
a chain (rank 1 - rank 2 - ... - rank k) or grown with the Holme-Kim
preferential-attachment-plus-triad-formation model, tags entering the
graph in rank order.
"""
from __future__ import annotations

import csv
import functools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .exchange import ContributedNet
from .san import LOCATION, SemanticNet

STATIC = "static"
DYNAMIC = "dynamic"


@dataclass(frozen=True)
class SanTopologyConfig:
    kind: str = "chain"  # chain | clustered
    m: int = 2
    triad_prob: float | None = None  # None: calibrate against target_cc
    target_cc: float | None = None

    def __post_init__(self):
        if self.kind not in ("chain", "clustered"):
            raise ValueError(f"unknown topology kind {self.kind!r}")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.triad_prob is not None and not 0.0 <= self.triad_prob <= 1.0:
            raise ValueError("triad_prob must lie in [0, 1]")


TOPOLOGIES = {
    "chain": SanTopologyConfig("chain"),
    "cc02": SanTopologyConfig("clustered", m=2, target_cc=0.2),
    "cc05": SanTopologyConfig("clustered", m=2, target_cc=0.5),
}


@dataclass
class LocationProfile:
    id: str
    position: tuple[float, float]
    ranked_tags: list[tuple[str, float]]
    san: SemanticNet
    mode: str = STATIC
    initial: SemanticNet | None = field(default=None, repr=False)

    @property
    def tags(self) -> list[str]:
        return [t for t, _ in self.ranked_tags]


def _tag_list(ranked_tags) -> list[str]:
    return [t if isinstance(t, str) else t[0] for t in ranked_tags]


def _new_location_net(tags, owner, beta, frozen):
    net = SemanticNet(owner=owner, kind=LOCATION, beta=beta, frozen=frozen)
    for t in tags:
        net.add_vertex(t)
        if owner:
            net.annotate(t, owner, 1)
    return net


def build_chain(ranked_tags, owner: str = "", popularity: int = 1,
                beta: float = 0.0, frozen: bool = True) -> SemanticNet:
    tags = _tag_list(ranked_tags)
    if not tags:
        raise ValueError("a location needs at least one tag")
    net = _new_location_net(tags, owner, beta, frozen)
    for a, b in zip(tags, tags[1:]):
        net.add_edge(a, b, 0, popularity)
    return net


def holme_kim_edges(n: int, m: int, triad_prob: float, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Holme-Kim growth over vertices 0..n-1 (vertex i arrives i-th).

    Starts from a clique on the first m+1 vertices. Every later vertex makes
    m links: the first by preferential attachment; each further one, with
    probability ``triad_prob``, closes a triangle through a neighbour of the
    last preferential target, otherwise it is another preferential link.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if n < m + 1:
        raise ValueError(f"need at least m+1={m + 1} vertices, got {n}")
    adj = [set() for _ in range(n)]
    edges = []
    pool = []  # vertex i appears deg(i) times

    def link(a, b):
        adj[a].add(b)
        adj[b].add(a)
        edges.append((a, b))

    for a in range(m + 1):
        for b in range(a + 1, m + 1):
            link(a, b)
    for a in range(m + 1):
        pool.extend([a] * len(adj[a]))

    for new in range(m + 1, n):
        chosen = []

        def pa_pick():
            while True:
                t = pool[int(rng.integers(len(pool)))]
                if t not in chosen:
                    return t

        target = pa_pick()
        chosen.append(target)
        for _ in range(m - 1):
            if rng.random() < triad_prob:
                cand = sorted(adj[target].difference(chosen))
                if cand:
                    chosen.append(cand[int(rng.integers(len(cand)))])
                    continue
            target = pa_pick()
            chosen.append(target)
        for t in chosen:
            link(new, t)
        pool.extend(chosen)
        pool.extend([new] * len(chosen))
    return edges


def build_clustered(ranked_tags, m: int, triad_prob: float, seed, owner: str = "",
                    popularity: int = 1, beta: float = 0.0, frozen: bool = True) -> SemanticNet:
    tags = _tag_list(ranked_tags)
    if len(tags) < m + 1:
        raise ValueError(f"clustered topology needs at least {m + 1} tags, got {len(tags)}")
    rng = np.random.default_rng(seed)
    net = _new_location_net(tags, owner, beta, frozen)
    for a, b in holme_kim_edges(len(tags), m, triad_prob, rng):
        net.add_edge(tags[a], tags[b], 0, popularity)
    return net


def clustering_coefficient(net) -> float:
    """Mean local clustering; vertices of degree < 2 count as 0."""
    adj = net.adj if hasattr(net, "adj") else net
    if not adj:
        return 0.0
    nbr_sets = {v: set(nbrs) for v, nbrs in adj.items()}
    total = 0.0
    for v, nbrs in nbr_sets.items():
        k = len(nbrs)
        if k < 2:
            continue
        links = sum(len(nbr_sets[u] & nbrs) for u in nbrs) / 2
        total += links / (k * (k - 1) / 2)
    return total / len(nbr_sets)


def _cc_of_edges(n, edges):
    adj = {i: set() for i in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    return clustering_coefficient(adj)


def mean_cc(n: int, m: int, triad_prob: float, seed: int, n_graphs: int = 20) -> float:
    seeds = np.random.SeedSequence(seed).spawn(n_graphs)
    return float(np.mean([_cc_of_edges(n, holme_kim_edges(n, m, triad_prob, np.random.default_rng(s)))
                          for s in seeds]))


@functools.lru_cache(maxsize=None)
def calibrate_triad_prob(n: int, m: int, target_cc: float, seed: int = 0,
                         n_graphs: int = 20, tol: float = 0.05) -> float:
    """Bisect the triad probability until the mean clustering hits ``target_cc``."""
    if target_cc <= 0.0:
        return 0.0
    hi_cc = mean_cc(n, m, 1.0, seed, n_graphs)
    if hi_cc < target_cc - tol:
        raise ValueError(f"target clustering {target_cc} unreachable with n={n}, m={m}: "
                         f"max achievable is {hi_cc:.4f}")
    lo_cc = mean_cc(n, m, 0.0, seed, n_graphs)
    if lo_cc >= target_cc - tol / 5:
        return 0.0
    lo, hi = 0.0, 1.0
    best, best_err = 1.0, abs(hi_cc - target_cc)
    for _ in range(30):
        mid = (lo + hi) / 2
        cc = mean_cc(n, m, mid, seed, n_graphs)
        if abs(cc - target_cc) < best_err:
            best, best_err = mid, abs(cc - target_cc)
        if best_err < tol / 10:
            break
        if cc < target_cc:
            lo = mid
        else:
            hi = mid
    return best


def build_location_san(ranked_tags, topology: SanTopologyConfig, owner: str, seed=0,
                       popularity: int = 5, dynamic: bool = False, beta_loc: float = 0.1) -> SemanticNet:
    beta = beta_loc if dynamic else 0.0
    frozen = not dynamic
    if topology.kind == "chain":
        return build_chain(ranked_tags, owner, popularity, beta, frozen)
    p_t = topology.triad_prob
    if p_t is None:
        p_t = calibrate_triad_prob(len(ranked_tags), topology.m, topology.target_cc or 0.0)
    return build_clustered(ranked_tags, topology.m, p_t, seed, owner, popularity, beta, frozen)


def refresh_dynamic(profile: LocationProfile, contributed: ContributedNet, now: int,
                    key_sweeps: Sequence[tuple[str, str]] | None = None) -> None:
    """Reinforce the edges a dynamic location just used in an exchange.

    Swept and donated edges each count as one observation, so an edge that
    was both gains two.
    """
    if profile.mode != DYNAMIC:
        raise ValueError(f"location {profile.id} is static; refresh rejected")
    net = profile.san
    if key_sweeps is None and contributed.donor is net:
        slots = np.concatenate([contributed.swept_slots,
                                np.asarray(contributed.included_slots, dtype=np.int64)])
        net._last[slots] = now
        np.add.at(net._pop, slots, 1)
        return
    sweeps = contributed.swept if key_sweeps is None else key_sweeps
    for a, b in list(sweeps) + list(contributed.edges):
        e = net.edge(a, b)
        if e is not None:
            e.last_activation = now
            e.popularity += 1


# -- files ------------------------------------------------------------------

def write_profile(path, ranked_tags) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tag", "weight"])
        for tag, weight in ranked_tags:
            w.writerow([tag, repr(float(weight))])


def read_profile(path) -> list[tuple[str, float]]:
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["tag", "weight"]:
        raise ValueError(f"{path}: expected header 'tag,weight'")
    out = []
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != 2:
            raise ValueError(f"{path}:{lineno}: expected 2 fields")
        out.append((row[0], float(row[1])))
    for lineno, (prev, cur) in enumerate(zip(out, out[1:]), 3):
        if (-prev[1], prev[0]) >= (-cur[1], cur[0]):
            raise ValueError(f"{path}:{lineno}: tags not in descending weight order")
    return out


def write_locations(path, profiles: Sequence[LocationProfile]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "x", "y", "mode"])
        for p in profiles:
            w.writerow([p.id, repr(float(p.position[0])), repr(float(p.position[1])), p.mode])


def read_locations(path) -> list[tuple[str, float, float, str]]:
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["id", "x", "y", "mode"]:
        raise ValueError(f"{path}: expected header 'id,x,y,mode'")
    out = []
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != 4 or row[3] not in (STATIC, DYNAMIC):
            raise ValueError(f"{path}:{lineno}: malformed location row {row!r}")
        out.append((row[0], float(row[1]), float(row[2]), row[3]))
    return out
