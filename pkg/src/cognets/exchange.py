"""Fluency-heuristic selection of the subgraph a donor passes on contact.

Starting from the tags both parties already know (the key vertices), the
donor walks its own SAN depth-first, always following the most readily
retrieved edge first, until the tag budget is spent or nothing left passes
the retrieval threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from numba import njit

from .san import LOCATION, SemanticNet, n_tag_ids, tag_ids, tag_names, tag_ranks

# relevance values closer than this count as tied (then tags decide)
REL_DIGITS = 9


@dataclass(frozen=True)
class ExchangeLimits:
    t_max: int
    l_max: int
    w_min: float
    theta_rec: int

    def __post_init__(self):
        if self.t_max < 0 or self.l_max < 0 or self.theta_rec < 0:
            raise ValueError("t_max, l_max and theta_rec must be >= 0")
        if not 0.0 <= self.w_min <= 1.0:
            raise ValueError("w_min must lie in [0, 1]")


@dataclass
class ContributedNet:
    """What a donor hands over: tags with trimmed location lists, plus edges.

    ``swept`` lists the donor edges touched by the key-vertex popularity
    sweep; dynamic locations use it to refresh themselves afterwards.
    """

    vertices: dict[str, tuple[str, ...]] = field(default_factory=dict)
    edges: list[tuple[str, str]] = field(default_factory=list)
    swept_slots: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64), repr=False)
    included_slots: list[int] = field(default_factory=list, repr=False)
    donor: SemanticNet | None = field(default=None, repr=False, compare=False)

    def __len__(self):
        return len(self.vertices)

    @property
    def swept(self) -> list[tuple[str, str]]:
        if self.donor is None:
            return []
        keys = self.donor._keys
        return sorted(keys[s] for s in self.swept_slots.tolist())

    def edge_set(self) -> set[tuple[str, str]]:
        return set(self.edges)


def retrieval_weight(m: float, n: int, tau: float, contact_elapsed: float) -> float:
    """Memory weight scaled by contact warm-up and divided by hop distance."""
    if n < 1:
        raise ValueError("hop count must be >= 1")
    if contact_elapsed < 0:
        raise ValueError("contact_elapsed must be >= 0")
    return m * (1.0 - math.exp(-tau * contact_elapsed)) / n


def _shared(donor: SemanticNet, recipient) -> list[str]:
    other = recipient.adj.keys() if isinstance(recipient, SemanticNet) else set(recipient)
    return sorted(donor.adj.keys() & other)


def _relevance(donor: SemanticNet, keys: list[str], now: int, bump: bool, ids=None):
    """Key-vertex popularity sweep, then per-key sum of incident memory weights.

    Sweeping keys in order and skipping edges to already-swept keys touches
    every edge incident to some key exactly once, so one vectorised bump
    does the same job; relevance is read afterwards.
    """
    n = donor.n_slots
    if ids is None:
        ids = tag_ids(keys)  # registers isolated keys before sizing the mask
    key_mask = np.zeros(n_tag_ids(), dtype=bool)
    key_mask[ids] = True
    alive = donor._alive[:n]
    ku = alive & key_mask[donor._u[:n]]
    kv = alive & key_mask[donor._v[:n]]
    swept = np.flatnonzero(ku | kv)
    if bump:
        donor._pop[swept] += 1
    w = donor.slot_weights(now)
    size = len(key_mask)
    rel = (np.bincount(donor._u[:n][ku], w[ku], size) + np.bincount(donor._v[:n][kv], w[kv], size))[ids]
    return swept, rel


def _by_relevance(keys: list[str], rel: np.ndarray) -> list[str]:
    # keys arrive sorted, so a stable sort leaves ties in tag order
    order = np.argsort(-np.round(rel, REL_DIGITS), kind="stable")
    return [keys[i] for i in order.tolist()]


def relevance(donor: SemanticNet, tag: str, now: int) -> float:
    return donor.weighted_degree(tag, now)


def key_vertices(donor: SemanticNet, recipient, now: int) -> list[str]:
    """Shared tags, most relevant (sum of incident memory weights) first."""
    keys = _shared(donor, recipient)
    if not keys:
        return []
    _, rel = _relevance(donor, keys, now, bump=False)
    return _by_relevance(keys, rel)


def _annotations(donor: SemanticNet, tag: str, l_max: int) -> tuple[str, ...]:
    if l_max == 0:
        return ()
    if donor.kind == LOCATION:
        return (donor.owner,)
    ann = donor.annotations[tag]
    if len(ann) <= 1:
        return tuple(ann) if l_max else ()
    ranked = sorted(ann, key=lambda loc: (-ann[loc], loc))
    return tuple(ranked[:l_max])


@njit(cache=True)
def _push(x, hop, indptr, nbr, slot, pops, lasts, rank, beta, now, warm, w_min, theta,
          cand_j, cand_s, cand_w, top):
    """Append x's eligible edges to the candidate buffer, best first; returns new top."""
    start = top
    for p in range(indptr[x], indptr[x + 1]):
        s = slot[p]
        if pops[s] < theta:
            continue
        m = math.exp(-(beta / pops[s]) * ((now - lasts[s]) / 1000.0))
        w = m * warm / hop
        if w < w_min:
            continue
        # insertion sort: weight descending, then tag order
        j = nbr[p]
        i = top
        while i > start and (cand_w[i - 1] < w or (cand_w[i - 1] == w and rank[cand_j[i - 1]] > rank[j])):
            cand_j[i] = cand_j[i - 1]
            cand_s[i] = cand_s[i - 1]
            cand_w[i] = cand_w[i - 1]
            i -= 1
        cand_j[i] = j
        cand_s[i] = s
        cand_w[i] = w
        top += 1
    return top


@njit(cache=True)
def _walk(u, v, alive, pops, lasts, n_ids, key_order, rank, beta, now, warm, w_min, theta, t_max):
    """Depth-first selection over tag ids; returns (vertex ids in order, edge slots in order)."""
    n = len(u)
    indptr = np.zeros(n_ids + 1, np.int64)
    for s in range(n):
        if alive[s]:
            indptr[u[s] + 1] += 1
            indptr[v[s] + 1] += 1
    for i in range(n_ids):
        indptr[i + 1] += indptr[i]
    fill = indptr[:-1].copy()
    nbr = np.empty(indptr[n_ids], np.int64)
    slot = np.empty(indptr[n_ids], np.int64)
    for s in range(n):
        if alive[s]:
            nbr[fill[u[s]]] = v[s]
            slot[fill[u[s]]] = s
            fill[u[s]] += 1
            nbr[fill[v[s]]] = u[s]
            slot[fill[v[s]]] = s
            fill[v[s]] += 1

    in_v = np.zeros(n_ids, np.bool_)
    entered = np.zeros(n_ids, np.bool_)
    used = np.zeros(n, np.bool_)
    verts = np.empty(max(t_max, 1), np.int64)
    nv = 0
    inc = np.empty(n, np.int64)
    ni = 0
    size = len(nbr) + 1
    cand_j = np.empty(size, np.int64)
    cand_s = np.empty(size, np.int64)
    cand_w = np.empty(size, np.float64)
    f_start = np.empty(n_ids + 1, np.int64)
    f_pos = np.empty(n_ids + 1, np.int64)
    f_end = np.empty(n_ids + 1, np.int64)
    f_hop = np.empty(n_ids + 1, np.int64)

    for k in key_order:
        if nv >= t_max:
            break
        if entered[k]:
            continue
        entered[k] = True
        if not in_v[k]:
            in_v[k] = True
            verts[nv] = k
            nv += 1
        if nv >= t_max:
            break
        top = _push(k, 1, indptr, nbr, slot, pops, lasts, rank, beta, now, warm, w_min, theta,
                    cand_j, cand_s, cand_w, 0)
        f_start[0] = 0
        f_pos[0] = 0
        f_end[0] = top
        f_hop[0] = 1
        depth = 1
        while depth > 0:
            f = depth - 1
            if f_pos[f] == f_end[f]:
                top = f_start[f]
                depth -= 1
                continue
            idx = f_pos[f]
            f_pos[f] += 1
            j = cand_j[idx]
            s = cand_s[idx]
            if used[s]:
                continue
            if not in_v[j]:
                in_v[j] = True
                verts[nv] = j
                nv += 1
            used[s] = True
            inc[ni] = s
            ni += 1
            if nv >= t_max:
                break
            if not entered[j]:
                entered[j] = True
                hop = f_hop[f] + 1
                new_top = _push(j, hop, indptr, nbr, slot, pops, lasts, rank, beta, now, warm, w_min,
                                theta, cand_j, cand_s, cand_w, top)
                f_start[depth] = top
                f_pos[depth] = top
                f_end[depth] = new_top
                f_hop[depth] = hop
                top = new_top
                depth += 1
    return verts[:nv], inc[:ni]


def build_contributed(donor: SemanticNet, recipient, now: int, contact_elapsed: float,
                      limits: ExchangeLimits, tau: float = 0.1,
                      mutate: bool | None = None) -> ContributedNet:
    """Select the contributed network ``donor`` passes to ``recipient``.

    ``recipient`` only needs to expose its tags (a SemanticNet or a set of
    tags). The donor's SAN is updated in place (popularity sweep and edge
    activation) unless ``mutate`` is False or the donor is frozen.
    """
    if mutate is None:
        mutate = not donor.frozen
    c = ContributedNet(donor=donor)
    keys = _shared(donor, recipient)
    if not keys:
        return c
    ids = tag_ids(keys)
    c.swept_slots, rel = _relevance(donor, keys, now, bump=mutate, ids=ids)
    if limits.t_max == 0:
        return c

    n = donor.n_slots
    key_order = ids[np.argsort(-np.round(rel, REL_DIGITS), kind="stable")]
    warm = 1.0 - math.exp(-tau * contact_elapsed)
    verts, slots = _walk(donor._u[:n], donor._v[:n], donor._alive[:n], donor._pop[:n], donor._last[:n],
                         n_tag_ids(), key_order, tag_ranks(), float(donor.beta), int(now), warm,
                         float(limits.w_min), int(limits.theta_rec), int(limits.t_max))
    names = tag_names()
    l_max = limits.l_max
    if l_max == 0 or donor.kind == LOCATION:
        own = _annotations(donor, "", l_max)
        c.vertices = {names[i]: own for i in verts.tolist()}
    else:
        anns = donor.annotations
        c.vertices = {}
        for i in verts.tolist():
            t = names[i]
            ann = anns[t]
            c.vertices[t] = tuple(ann) if len(ann) <= 1 else _annotations(donor, t, l_max)
    c.included_slots = slots.tolist()
    keys_of = donor._keys
    c.edges = [keys_of[s] for s in c.included_slots]
    if mutate and len(slots):
        donor._last[slots] = now
        donor._pop[slots] += 1
    return c
