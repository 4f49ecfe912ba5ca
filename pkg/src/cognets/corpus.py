"""Venue documents, TF-IDF tag extraction and a synthetic corpus generator."""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

STOPWORDS = frozenset("""
a about above after again against all also am an and any are as at be because been
before being below between both but by can could did do does doing down during each
few for from further had has have having he her here hers herself him himself his how
i if in into is it its itself just me more most my myself no nor not now of off on
once only or other our ours ourselves out over own really same she should so some
such than that the their theirs them themselves then there these they this those
through to too under until up very was we were what when where which while who whom
why will with would you your yours yourself yourselves get got one very well
""".split())

_SPLIT = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop short tokens and stopwords."""
    return [t for t in _SPLIT.split(text.lower())
            if len(t) >= 3 and t not in STOPWORDS]


@dataclass
class Document:
    venue: str
    tokens: list[str]


@dataclass
class Corpus:
    documents: dict[str, Document] = field(default_factory=dict)
    counts: dict[str, Counter] = field(default_factory=dict)
    df: Counter = field(default_factory=Counter)

    @classmethod
    def from_documents(cls, docs) -> "Corpus":
        corpus = cls()
        for doc in docs:
            corpus.add(doc)
        return corpus

    @classmethod
    def from_texts(cls, texts: dict[str, str]) -> "Corpus":
        return cls.from_documents(Document(v, tokenize(texts[v])) for v in sorted(texts))

    def add(self, doc: Document) -> None:
        if doc.venue in self.documents:
            raise ValueError(f"duplicate document for venue {doc.venue!r}")
        self.documents[doc.venue] = doc
        counts = Counter(doc.tokens)
        self.counts[doc.venue] = counts
        self.df.update(counts.keys())

    @property
    def n_documents(self) -> int:
        return len(self.documents)

    @property
    def vocabulary(self) -> list[str]:
        return sorted(self.df)

    def venues(self) -> list[str]:
        return sorted(self.documents)


def tf_idf(term: str, venue: str, corpus: Corpus) -> float:
    """Raw term count times ln(N / df); 0 for unknown terms."""
    df = corpus.df.get(term, 0)
    if df == 0:
        return 0.0
    tf = corpus.counts[venue].get(term, 0)
    if tf == 0:
        return 0.0
    return tf * math.log(corpus.n_documents / df)


def extract_profile(corpus: Corpus, venue: str, max_tags: int | None = None) -> list[tuple[str, float]]:
    if venue not in corpus.documents:
        raise KeyError(f"no document for venue {venue!r}")
    scored = [(t, tf_idf(t, venue, corpus)) for t in corpus.counts[venue]]
    scored = [(t, w) for t, w in scored if w > 0.0]
    scored.sort(key=lambda tw: (-tw[1], tw[0]))
    return scored if max_tags is None else scored[:max_tags]


# -- files -------------------------------------------------------------------

def load_corpus_dir(path) -> Corpus:
    """One UTF-8 text file per venue; the file stem is the venue id."""
    path = Path(path)
    if not path.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {path}")
    files = sorted(p for p in path.iterdir() if p.is_file() and not p.name.startswith("."))
    if not files:
        raise FileNotFoundError(f"no venue documents in {path}")
    return Corpus.from_texts({p.stem: p.read_text(encoding="utf-8") for p in files})


def write_corpus_dir(corpus: Corpus, path) -> list[Path]:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    out = []
    for venue in corpus.venues():
        doc = corpus.documents[venue]
        lines = [" ".join(doc.tokens[i:i + 16]) for i in range(0, len(doc.tokens), 16)]
        p = path / f"{venue}.txt"
        p.write_text("\n".join(lines) + "\n", encoding="utf-8")
        out.append(p)
    return out


# -- synthesis ---------------------------------------------------------------

_ONSETS = ["b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "cr", "gl", "pl", "st", "tr"]
_VOWELS = ["a", "e", "i", "o", "u"]


def synth_word(i: int) -> str:
    """Deterministic pronounceable word for index i (distinct for distinct i)."""
    syl = []
    k = i
    for _ in range(3):
        k, r = divmod(k, len(_ONSETS) * len(_VOWELS))
        syl.append(_ONSETS[r // len(_VOWELS)] + _VOWELS[r % len(_VOWELS)])
    word = "".join(syl)
    if k:
        word += str(k)
    return word + "x"


def venue_id(i: int) -> str:
    return f"L{i:02d}"


def synth_corpus(n_venues: int, tags_per_venue: int, shared_fraction: float = 0.1,
                 zipf_s: float = 1.0, seed: int = 0, max_count: int = 40) -> Corpus:
    """Synthetic review corpus with exactly ``tags_per_venue`` extractable terms per venue.

    ``shared_fraction`` of each venue's terms come from a common pool (no
    pool term is used by every venue, so every term keeps a positive
    weight); the rest are private. Term counts follow a Zipf law over a
    random ranking of the venue's terms.
    """
    if n_venues < 2 or tags_per_venue < 1:
        raise ValueError("need at least 2 venues and 1 tag per venue")
    if not 0.0 <= shared_fraction <= 1.0:
        raise ValueError("shared_fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    n_shared = int(round(shared_fraction * tags_per_venue))
    n_private = tags_per_venue - n_shared
    pool_size = (3 if n_venues == 2 else 2) * n_shared
    pool = [synth_word(i) for i in range(pool_size)]
    next_word = pool_size
    picks = [sorted(rng.choice(pool_size, size=n_shared, replace=False).tolist()) if n_shared else []
             for _ in range(n_venues)]
    if n_shared:
        # a pool term held by every venue would get zero weight: move one holder
        while True:
            users = Counter(i for p in picks for i in p)
            full = sorted(t for t, c in users.items() if c == n_venues)
            if not full:
                break
            holder = picks[int(rng.integers(n_venues))]
            spare = sorted(set(range(pool_size)) - set(holder))
            holder.remove(full[0])
            holder.append(spare[int(rng.integers(len(spare)))])
            holder.sort()
    docs = []
    for v in range(n_venues):
        terms = [pool[i] for i in picks[v]]
        terms += [synth_word(next_word + j) for j in range(n_private)]
        next_word += n_private
        order = rng.permutation(len(terms))
        tokens = []
        for rank, idx in enumerate(order, 1):
            count = max(1, int(math.ceil(max_count / rank ** zipf_s)))
            tokens.extend([terms[idx]] * count)
        rng.shuffle(tokens)
        docs.append(Document(venue_id(v), tokens))
    return Corpus.from_documents(docs)
