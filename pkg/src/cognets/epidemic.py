"""Unstructured baseline: flat tag stores, uniformly random selection.

Stores age exactly like SAN edges do, except the forgetting curve is applied
to the tags themselves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .san import LOCATION, MOBILE


@dataclass(slots=True)
class TagState:
    popularity: int
    last_seen: int
    annotations: dict[str, int]


@dataclass
class EpidemicStore:
    owner: str = ""
    kind: str = MOBILE
    beta: float = 0.1
    items: dict[str, TagState] = field(default_factory=dict)

    @classmethod
    def for_location(cls, owner: str, tags) -> "EpidemicStore":
        store = cls(owner=owner, kind=LOCATION, beta=0.0)
        for t in tags:
            store.items[t] = TagState(1, 0, {owner: 1})
        return store

    def __contains__(self, tag):
        return tag in self.items

    def __len__(self):
        return len(self.items)

    def tags(self):
        return self.items.keys()

    def annotations_of(self, tag: str) -> dict[str, int]:
        s = self.items.get(tag)
        return {} if s is None else s.annotations

    def add(self, tag: str, now: int = 0) -> None:
        if tag not in self.items:
            self.items[tag] = TagState(1, now, {})

    def snapshot(self) -> str:
        lines = []
        for tag in sorted(self.items):
            s = self.items[tag]
            parts = ["V", tag] + [f"{loc}:{s.annotations[loc]}" for loc in sorted(s.annotations)]
            lines.append(" ".join(parts))
        return "\n".join(lines) + ("\n" if lines else "")


def epidemic_exchange(donor: EpidemicStore, recipient: EpidemicStore, t_max: int, l_max: int,
                      rng: np.random.Generator, now: int = 0) -> list[str]:
    """Push up to ``t_max`` random tags (each with up to ``l_max`` random locations)."""
    if recipient.kind == LOCATION:
        raise ValueError("locations never receive")
    pool = sorted(donor.items)
    k = min(t_max, len(pool))
    if k == 0:
        return []
    picked = [pool[i] for i in sorted(rng.choice(len(pool), size=k, replace=False).tolist())]
    if donor.kind == LOCATION:
        chosen = [[donor.owner] if l_max > 0 else [] for _ in picked]
    else:
        chosen = _sample_locations([sorted(donor.items[t].annotations) for t in picked], l_max, rng)
    items = recipient.items
    for tag, locs in zip(picked, chosen):
        s = items.get(tag)
        if s is None:
            items[tag] = TagState(1, now, {loc: 1 for loc in locs})
            continue
        s.popularity += 1
        s.last_seen = now
        for loc in locs:
            s.annotations[loc] = s.annotations.get(loc, 0) + 1
    return picked


def _sample_locations(known: list[list[str]], l_max: int, rng: np.random.Generator) -> list[list[str]]:
    """Uniform subsets of size min(l_max, len) via one batch of random keys."""
    over = [len(k) for k in known if len(k) > l_max]
    keys = rng.random(sum(over)).tolist() if over else []
    out = []
    pos = 0
    for k in known:
        if len(k) <= l_max:
            out.append(list(k))
            continue
        r = keys[pos:pos + len(k)]
        pos += len(k)
        idx = sorted(sorted(range(len(k)), key=r.__getitem__)[:l_max])
        out.append([k[i] for i in idx])
    return out


def epidemic_prune(store: EpidemicStore, now: int, m_min: float) -> list[str]:
    if store.kind == LOCATION or store.beta == 0.0:
        return []
    beta = store.beta
    gone = [t for t, s in store.items.items()
            if math.exp(-(beta / s.popularity) * ((now - s.last_seen) / 1000.0)) < m_min]
    for t in gone:
        del store.items[t]
    return gone
