"""Semantic associative networks (SANs) with exponential forgetting.

A SAN is an undirected graph of tags. Every edge remembers when it was last
activated and how many times it has been observed (its popularity); its
memory weight is computed lazily from those two numbers. Vertices carry
location annotations with their own observation counts.

Edge state lives in flat numpy arrays indexed by an edge slot, so sweeps
over a whole SAN (forgetting, relevance, degree sums) are vectorised.
``adj`` maps each tag to ``{neighbour: slot}``; freed slots are reused.

Time is an integer number of milliseconds everywhere in this package; rates
(``beta``, ``tau``) are per second.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

MOBILE = "mobile"
LOCATION = "location"

# process-wide tag numbering; ids never influence any ordering
_TAG_IDS: dict[str, int] = {}
_TAG_NAMES: list[str] = []


def tag_id(tag: str) -> int:
    i = _TAG_IDS.get(tag)
    if i is None:
        i = _TAG_IDS[tag] = len(_TAG_NAMES)
        _TAG_NAMES.append(tag)
    return i


def tag_ids(tags) -> np.ndarray:
    try:
        return np.fromiter(map(_TAG_IDS.__getitem__, tags), dtype=np.int64, count=len(tags))
    except KeyError:
        for t in tags:
            tag_id(t)
        return np.fromiter(map(_TAG_IDS.__getitem__, tags), dtype=np.int64, count=len(tags))


def n_tag_ids() -> int:
    return len(_TAG_NAMES)


def tag_names() -> list[str]:
    return _TAG_NAMES


_rank_cache: list = [np.zeros(0, dtype=np.int64)]


def tag_ranks() -> np.ndarray:
    """Position of every registered tag id in string order."""
    ranks = _rank_cache[0]
    if len(ranks) != len(_TAG_NAMES):
        order = sorted(range(len(_TAG_NAMES)), key=_TAG_NAMES.__getitem__)
        ranks = np.empty(len(order), dtype=np.int64)
        ranks[order] = np.arange(len(order))
        _rank_cache[0] = ranks
    return ranks


def intern_tag(tag: str) -> str:
    """Canonical tag identifier: lowercase, interned. Tags order as strings."""
    return sys.intern(tag.lower())


def seconds(ms: int) -> float:
    return ms / 1000.0


def to_ms(s: float) -> int:
    return int(round(s * 1000.0))


def edge_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a < b else (b, a)


class EdgeState:
    """Live view of one edge of a SemanticNet (valid while the edge exists)."""

    __slots__ = ("net", "slot")

    def __init__(self, net: "SemanticNet", slot: int):
        self.net = net
        self.slot = slot

    @property
    def key(self) -> tuple[str, str]:
        return self.net._keys[self.slot]

    @property
    def u(self) -> str:
        return self.net._keys[self.slot][0]

    @property
    def v(self) -> str:
        return self.net._keys[self.slot][1]

    @property
    def last_activation(self) -> int:
        return int(self.net._last[self.slot])

    @last_activation.setter
    def last_activation(self, value: int) -> None:
        self.net._last[self.slot] = value

    @property
    def popularity(self) -> int:
        return int(self.net._pop[self.slot])

    @popularity.setter
    def popularity(self, value: int) -> None:
        self.net._pop[self.slot] = value

    def __eq__(self, other):
        return isinstance(other, EdgeState) and self.net is other.net and self.slot == other.slot

    def __hash__(self):
        return hash((id(self.net), self.slot))

    def __repr__(self):
        return f"EdgeState({self.u!r}, {self.v!r}, last={self.last_activation}, pop={self.popularity})"


@dataclass(frozen=True)
class Thresholds:
    m_min: float
    w_min: float

    def __post_init__(self):
        for name in ("m_min", "w_min"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


def decay(beta: float, popularity: int, elapsed_s: float) -> float:
    """exp(-(beta / popularity) * elapsed); exactly 1 when beta or elapsed is 0."""
    if beta == 0.0 or elapsed_s == 0.0:
        return 1.0
    return math.exp(-(beta / popularity) * elapsed_s)


def decay_array(beta: float, popularity: np.ndarray, elapsed_ms: np.ndarray) -> np.ndarray:
    if beta == 0.0:
        return np.ones(len(popularity))
    return np.exp(-(beta / popularity) * (elapsed_ms / 1000.0))


def derive_thresholds(forget_s: float, warm_s: float, beta: float, tau: float,
                      ref_duration: float = 2.0) -> Thresholds:
    """Turn the ``forget`` / ``warm`` conventions into M_min and W_min.

    ``forget_s`` is how long a popularity-1 edge survives without use.
    ``warm_s`` is how stale a distance-1 edge may be and still be donated
    during a contact of ``ref_duration`` seconds.
    """
    if min(forget_s, warm_s, beta, tau, ref_duration) < 0:
        raise ValueError("threshold inputs must be non-negative")
    m_min = math.exp(-beta * forget_s)
    w_min = math.exp(-beta * warm_s) * (1.0 - math.exp(-tau * ref_duration))
    return Thresholds(m_min=m_min, w_min=w_min)


@dataclass(eq=False)
class SemanticNet:
    """Weighted tag graph owned by a mobile node or a physical location.

    ``frozen`` marks a static location SAN: exchanges read it but never
    mutate it.
    """

    owner: str = ""
    kind: str = MOBILE
    beta: float = 0.1
    frozen: bool = False
    annotations: dict[str, dict[str, int]] = field(default_factory=dict)
    adj: dict[str, dict[str, int]] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in (MOBILE, LOCATION):
            raise ValueError(f"unknown owner kind {self.kind!r}")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        self._u = np.zeros(16, dtype=np.int64)      # global tag ids
        self._v = np.zeros(16, dtype=np.int64)
        self._last = np.zeros(16, dtype=np.int64)
        self._pop = np.zeros(16, dtype=np.int64)
        self._alive = np.zeros(16, dtype=bool)
        self._keys: list[tuple[str, str] | None] = []
        self._free: list[int] = []

    # -- structure -----------------------------------------------------

    def __contains__(self, tag: str) -> bool:
        return tag in self.adj

    def __len__(self) -> int:
        return len(self.adj)

    def tags(self) -> Iterable[str]:
        return self.adj.keys()

    def add_vertex(self, tag: str) -> bool:
        """Add ``tag`` if missing; returns True when it was new."""
        if tag in self.adj:
            return False
        self.adj[tag] = {}
        self.annotations[tag] = {}
        return True

    def remove_vertex(self, tag: str) -> None:
        for other in list(self.adj[tag]):
            self.remove_edge(tag, other)
        del self.adj[tag]
        del self.annotations[tag]

    def edge(self, a: str, b: str) -> EdgeState | None:
        nbrs = self.adj.get(a)
        if nbrs is None:
            return None
        slot = nbrs.get(b)
        return None if slot is None else EdgeState(self, slot)

    def neighbors(self, tag: str) -> dict[str, EdgeState]:
        return {b: EdgeState(self, s) for b, s in self.adj[tag].items()}

    def degree(self, tag: str) -> int:
        return len(self.adj[tag])

    @property
    def n_slots(self) -> int:
        return len(self._keys)

    def slots(self) -> np.ndarray:
        """Slots of live edges, ascending."""
        return np.flatnonzero(self._alive[:self.n_slots])

    def edges(self) -> Iterator[EdgeState]:
        for s in self.slots().tolist():
            yield EdgeState(self, s)

    def n_edges(self) -> int:
        return self.n_slots - len(self._free)

    def _grow(self) -> None:
        size = 2 * len(self._u)
        for name in ("_u", "_v", "_last", "_pop", "_alive"):
            old = getattr(self, name)
            new = np.zeros(size, dtype=old.dtype)
            new[:len(old)] = old
            setattr(self, name, new)

    def add_edge(self, a: str, b: str, last_activation: int, popularity: int = 1) -> EdgeState:
        if a == b:
            raise ValueError(f"self-loop on {a!r} rejected")
        if a not in self.adj or b not in self.adj:
            raise KeyError(f"both endpoints must exist: {a!r}, {b!r}")
        if b in self.adj[a]:
            raise ValueError(f"duplicate edge {a!r}-{b!r}")
        if popularity < 1:
            raise ValueError("popularity must be >= 1")
        u, v = edge_key(a, b)
        if self._free:
            s = self._free.pop()
            self._keys[s] = (u, v)
        else:
            s = len(self._keys)
            if s == len(self._u):
                self._grow()
            self._keys.append((u, v))
        self._u[s] = tag_id(u)
        self._v[s] = tag_id(v)
        self._last[s] = last_activation
        self._pop[s] = popularity
        self._alive[s] = True
        self.adj[a][b] = s
        self.adj[b][a] = s
        return EdgeState(self, s)

    def remove_edge(self, a: str, b: str) -> None:
        s = self.adj[a].pop(b)
        del self.adj[b][a]
        self._alive[s] = False
        self._keys[s] = None
        self._free.append(s)

    def annotate(self, tag: str, location: str, popularity: int = 1) -> None:
        self.annotations[tag][location] = popularity

    def annotations_of(self, tag: str) -> dict[str, int]:
        return self.annotations.get(tag, {})

    def copy(self) -> "SemanticNet":
        out = SemanticNet(owner=self.owner, kind=self.kind, beta=self.beta, frozen=self.frozen)
        out.annotations = {t: dict(a) for t, a in self.annotations.items()}
        out.adj = {t: dict(n) for t, n in self.adj.items()}
        for name in ("_u", "_v", "_last", "_pop", "_alive"):
            setattr(out, name, getattr(self, name).copy())
        out._keys = list(self._keys)
        out._free = list(self._free)
        return out

    # -- weights -------------------------------------------------------

    def weight(self, e: EdgeState, now: int) -> float:
        return memory_weight(self, e, now)

    def weighted_degree(self, tag: str, now: int) -> float:
        return sum(memory_weight(self, EdgeState(self, s), now) for s in self.adj[tag].values())

    def slot_weights(self, now: int) -> np.ndarray:
        """Memory weight of every slot (dead slots included, ignore them)."""
        n = self.n_slots
        return decay_array(self.beta, np.maximum(self._pop[:n], 1), now - self._last[:n])

    def weighted_degrees(self, now: int) -> dict[str, float]:
        s = self.slots()
        w = self.slot_weights(now)[s]
        size = n_tag_ids()
        deg = np.bincount(self._u[s], w, size) + np.bincount(self._v[s], w, size)
        return {t: float(deg[tag_id(t)]) for t in self.adj}

    # -- export --------------------------------------------------------

    def snapshot(self) -> str:
        """Canonical line-oriented dump (vertices then edges, sorted)."""
        lines = []
        for tag in sorted(self.adj):
            ann = self.annotations[tag]
            parts = ["V", tag] + [f"{loc}:{ann[loc]}" for loc in sorted(ann)]
            lines.append(" ".join(parts))
        rows = sorted((self._keys[s], int(self._last[s]), int(self._pop[s])) for s in self.slots().tolist())
        lines.extend(f"E {u} {v} {last} {pop}" for (u, v), last, pop in rows)
        return "\n".join(lines) + ("\n" if lines else "")

    def check(self) -> None:
        """Raise AssertionError if any structural invariant is broken."""
        assert self.adj.keys() == self.annotations.keys()
        seen = set()
        for a, nbrs in self.adj.items():
            assert a not in nbrs, f"self-loop at {a}"
            for b, s in nbrs.items():
                assert b in self.adj, f"dangling endpoint {b}"
                assert self.adj[b][a] == s, f"asymmetric edge {a}-{b}"
                assert self._alive[s] and self._keys[s] == edge_key(a, b)
                assert self._pop[s] >= 1
                seen.add(s)
        assert seen == set(self.slots().tolist())
        for ann in self.annotations.values():
            assert all(p >= 1 for p in ann.values())


def parse_snapshot(text: str, owner: str = "", kind: str = MOBILE, beta: float = 0.1) -> SemanticNet:
    net = SemanticNet(owner=owner, kind=kind, beta=beta)
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "V":
            net.add_vertex(parts[1])
            for item in parts[2:]:
                loc, _, pop = item.rpartition(":")
                net.annotate(parts[1], loc, int(pop))
        elif parts[0] == "E" and len(parts) == 5:
            net.add_edge(parts[1], parts[2], int(parts[3]), int(parts[4]))
        else:
            raise ValueError(f"line {lineno}: cannot parse {line!r}")
    return net


def memory_weight(net: SemanticNet, edge: EdgeState, now: int) -> float:
    if now < edge.last_activation:
        raise ValueError("edge activated in the future")
    return decay(net.beta, edge.popularity, seconds(now - edge.last_activation))


def prune_forgotten(net: SemanticNet, now: int, m_min: float) -> tuple[list[tuple[str, str]], list[str]]:
    """Drop edges whose memory weight fell below ``m_min``.

    Vertices left without edges by the removal go too; vertices that had
    no edges to begin with are kept.
    """
    # location SANs never lose tags, whatever their decay
    if net.frozen or net.kind == LOCATION or net.beta == 0.0:
        return [], []
    n = net.n_slots
    dead = np.flatnonzero(net._alive[:n] & (net.slot_weights(now) < m_min))
    if not len(dead):
        return [], []
    removed = []
    touched = set()
    keys = net._keys
    for s in dead.tolist():
        u, v = keys[s]
        net.remove_edge(u, v)
        removed.append((u, v))
        touched.add(u)
        touched.add(v)
    dropped = sorted(t for t in touched if not net.adj[t])
    for t in dropped:
        net.remove_vertex(t)
    return sorted(removed), dropped


def activate_edge(net: SemanticNet, a: str, b: str, now: int, bump_popularity: bool = True) -> EdgeState:
    """Refresh edge a-b to weight 1, creating it (popularity 1) when absent."""
    if a == b:
        raise ValueError(f"self-loop on {a!r} rejected")
    s = net.adj[a].get(b) if a in net.adj else None
    if s is None:
        return net.add_edge(a, b, now, 1)
    net._last[s] = now
    if bump_popularity:
        net._pop[s] += 1
    return EdgeState(net, s)


def merge_contributed(net: SemanticNet, c, now: int) -> None:
    """Fold a received contributed network into a mobile recipient's SAN."""
    if net.kind != MOBILE:
        raise ValueError("locations never receive contributions")
    adj, anns = net.adj, net.annotations
    for tag, locs in c.vertices.items():
        ann = anns.get(tag)
        if ann is None:
            adj[tag] = {}
            anns[tag] = ann = {}
        for loc in locs:
            ann[loc] = ann.get(loc, 0) + 1
    seen = []
    for a, b in c.edges:
        s = adj[a].get(b)
        if s is None:
            net.add_edge(a, b, now, 1)
        else:
            seen.append(s)
    if seen:
        # a contribution never repeats an edge, so fancy indexing is safe
        net._last[seen] = now
        net._pop[seen] += 1
