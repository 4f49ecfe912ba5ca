"""Evaluation quantities: Hit Ratio, Coverage, degree CCDFs, tau-b, KS gap."""
from __future__ import annotations

import bisect
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .san import SemanticNet, decay, edge_key, seconds


@dataclass
class MetricsSample:
    time: float
    hit_ratio: float
    coverage: float
    breakdown: dict[str, float] = field(default_factory=dict)


def hit_ratio(tag_sets: Iterable, universe) -> float:
    """Mean fraction of ``universe`` held per node."""
    universe = set(universe)
    if not universe:
        raise ValueError("empty tag universe")
    fractions = [len(universe.intersection(tags)) / len(universe) for tags in tag_sets]
    return sum(fractions) / len(fractions) if fractions else 0.0


def node_coverage(node, profiles: Mapping[str, set], locations=None) -> float:
    """Average, over locations the node has annotated, of how many of that
    location's stored tags carry the annotation.

    ``node`` needs ``tags()`` and ``annotations_of(tag)``; ``profiles`` maps
    location id to its tag set. ``locations`` restricts which locations count.
    """
    held = node.tags()
    annotated = Counter()
    seen = set()
    for tag in held:
        for loc in node.annotations_of(tag):
            if loc not in profiles or (locations is not None and loc not in locations):
                continue
            seen.add(loc)
            if tag in profiles[loc]:
                annotated[loc] += 1
    if not seen:
        return 0.0
    total = 0.0
    for loc in seen:
        stored = len(profiles[loc].intersection(held))
        if stored:
            total += annotated[loc] / stored
    return total / len(seen)


def coverage(nodes: Sequence, profiles: Mapping[str, set], locations=None) -> float:
    if not nodes:
        return 0.0
    return sum(node_coverage(n, profiles, locations) for n in nodes) / len(nodes)


# -- graphs and degree distributions -----------------------------------------

@dataclass
class WeightedGraph:
    """Plain undirected graph with a float weight per edge."""

    vertices: set[str] = field(default_factory=set)
    weights: dict[tuple[str, str], float] = field(default_factory=dict)

    def degrees(self, weighted: bool = False) -> dict[str, float]:
        deg = {v: 0.0 if weighted else 0 for v in self.vertices}
        for (a, b), w in self.weights.items():
            inc = w if weighted else 1
            deg[a] += inc
            deg[b] += inc
        return deg


def degrees(net, weighted: bool = False, now: int = 0) -> dict[str, float]:
    if isinstance(net, WeightedGraph):
        return net.degrees(weighted)
    if not weighted:
        return {t: len(nbrs) for t, nbrs in net.adj.items()}
    return net.weighted_degrees(now)


def ccdf(values: Iterable[float]) -> list[tuple[float, float]]:
    """Empirical P(D >= d) at every distinct observed value d."""
    vals = sorted(values)
    n = len(vals)
    out = []
    i = 0
    while i < n:
        d = vals[i]
        out.append((d, (n - i) / n))
        while i < n and vals[i] == d:
            i += 1
    return out


def degree_ccdf(net, weighted: bool = False, now: int = 0) -> list[tuple[float, float]]:
    return ccdf(degrees(net, weighted, now).values())


def ccdf_at(curve: Sequence[tuple[float, float]], x: float) -> float:
    """Step evaluation of a CCDF curve at x (0 beyond the largest degree)."""
    if not curve:
        return 0.0
    xs = [d for d, _ in curve]
    i = bisect.bisect_left(xs, x)
    return 0.0 if i == len(xs) else curve[i][1]


def mean_ccdf(curves: Sequence[Sequence[tuple[float, float]]]) -> list[tuple[float, float]]:
    """Average several CCDFs degree by degree."""
    curves = [c for c in curves if c]
    if not curves:
        return []
    grid = np.array(sorted({d for c in curves for d, _ in c}), dtype=float)
    total = np.zeros(len(grid))
    for c in curves:
        xs = np.array([d for d, _ in c], dtype=float)
        ps = np.append(np.array([p for _, p in c], dtype=float), 0.0)
        total += ps[np.searchsorted(xs, grid, side="left")]
    return [(float(d), float(p)) for d, p in zip(grid, total / len(curves))]


def ks_distance(a: Sequence[tuple[float, float]], b: Sequence[tuple[float, float]]) -> float:
    grid = sorted({d for d, _ in a} | {d for d, _ in b})
    return max((abs(ccdf_at(a, d) - ccdf_at(b, d)) for d in grid), default=0.0)


def union_locations_san(nets: Sequence[SemanticNet], weighted: bool = False, now: int = 0) -> WeightedGraph:
    """Union of location SANs; shared edges average their memory weights."""
    if not nets:
        raise ValueError("need at least one location SAN")
    g = WeightedGraph()
    sums: dict[tuple[str, str], list[float]] = {}
    for net in nets:
        g.vertices.update(net.adj)
        for e in net.edges():
            w = decay(net.beta, e.popularity, seconds(now - e.last_activation)) if weighted else 1.0
            sums.setdefault(edge_key(e.u, e.v), []).append(w)
    g.weights = {k: sum(ws) / len(ws) for k, ws in sums.items()}
    return g


# -- rank correlation --------------------------------------------------------

def kendall_tau_b(rank_a, rank_b) -> float:
    """Kendall tau-b between two score assignments over the same keys.

    Accepts two mappings with identical keys or two equal-length sequences.
    Returns NaN when either side is entirely tied.
    """
    if isinstance(rank_a, Mapping):
        if set(rank_a) != set(rank_b):
            raise ValueError("rankings cover different keys")
        keys = sorted(rank_a)
        x = np.array([rank_a[k] for k in keys], dtype=float)
        y = np.array([rank_b[k] for k in keys], dtype=float)
    else:
        x = np.asarray(rank_a, dtype=float)
        y = np.asarray(rank_b, dtype=float)
        if x.shape != y.shape:
            raise ValueError("rankings differ in length")
    n = len(x)
    if n < 2:
        raise ValueError("tau-b needs at least two items")
    iu = np.triu_indices(n, 1)
    sx = np.sign(x[:, None] - x[None, :])[iu]
    sy = np.sign(y[:, None] - y[None, :])[iu]
    n0 = n * (n - 1) / 2
    tied_x = np.count_nonzero(sx == 0)
    tied_y = np.count_nonzero(sy == 0)
    denom = math.sqrt((n0 - tied_x) * (n0 - tied_y))
    if denom == 0:
        return float("nan")
    return float(np.dot(sx, sy) / denom)
