"""Deterministic time-stepped simulation of cognitive and epidemic dissemination."""
from __future__ import annotations

import dataclasses
import json
import math
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from .epidemic import EpidemicStore, epidemic_exchange, epidemic_prune
from .exchange import ExchangeLimits, build_contributed
from .locations import (DYNAMIC, STATIC, TOPOLOGIES, LocationProfile, SanTopologyConfig,
                        build_location_san, read_profile, refresh_dynamic, write_locations)
from .metrics import (coverage, degree_ccdf, degrees, hit_ratio, kendall_tau_b, mean_ccdf,
                      union_locations_san)
from .mobility import CommunityLayout, Trace, gen_community_trace, gen_rwp_trace, load_trace, save_trace
from .san import MOBILE, SemanticNet, derive_thresholds, merge_contributed, prune_forgotten, to_ms

log = logging.getLogger(__name__)

COGNITIVE = "cognitive"
EPIDEMIC = "epidemic"

# independent random streams derived from (seed, run_index, stream)
_TRACE, _PLACEMENT, _INIT, _TOPOLOGY, _EPIDEMIC = range(1, 6)


@dataclass
class SimConfig:
    scheme: str = COGNITIVE
    n_nodes: int = 100
    area: tuple[float, float] = (1000.0, 1000.0)
    speed_range: tuple[float, float] = (1.0, 1.86)
    range_m: float = 20.0
    sim_time_s: float = 75000.0
    tick_s: float = 1.0
    beta: float = 0.1
    tau: float = 0.1
    theta_rec: int = 5
    forget_s: float = 75.0
    warm_s: float = 25.0
    warm_ref_s: float = 2.0
    t_max: int = 75
    l_max: int = 2
    exchange_delay_s: float = 2.0
    exchange_repeat_s: float = 0.0
    metric_cadence_s: float = 250.0
    init_tag_prob: float = 0.01
    pruning: bool = True
    seed: int = 0
    run_index: int = 0
    # locations and their descriptions
    n_locations: int = 10
    tags_per_location: int = 221
    shared_fraction: float = 0.1
    zipf_s: float = 1.0
    corpus_seed: int | None = None
    profiles_dir: str | None = None
    topology: str = "chain"
    hk_m: int = 2
    triad_prob: float | None = None
    location_popularity: int | None = None
    dynamic_locations: bool = False
    beta_loc: float | None = None
    # mobility
    trace_path: str | None = None
    communities: dict | None = None
    label: str = ""

    def __post_init__(self):
        self.area = tuple(float(a) for a in self.area)
        self.speed_range = tuple(float(s) for s in self.speed_range)
        self.validate()

    def validate(self) -> None:
        if self.scheme not in (COGNITIVE, EPIDEMIC):
            raise ValueError(f"scheme must be cognitive or epidemic, got {self.scheme!r}")
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {sorted(TOPOLOGIES)}, got {self.topology!r}")
        for name in ("range_m", "sim_time_s", "tick_s", "exchange_delay_s", "metric_cadence_s",
                     "forget_s", "warm_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.exchange_repeat_s < 0:
            raise ValueError("exchange_repeat_s must be >= 0")
        if min(self.speed_range) <= 0 or self.speed_range[0] > self.speed_range[1]:
            raise ValueError("speed_range must be positive and ordered")
        if self.t_max < 0 or self.l_max < 0 or self.theta_rec < 0:
            raise ValueError("t_max, l_max and theta_rec must be >= 0")
        if not 0.0 <= self.init_tag_prob <= 1.0:
            raise ValueError("init_tag_prob must lie in [0, 1]")
        if self.communities is None and self.n_nodes < 1:
            raise ValueError("need at least one node")
        ms = to_ms(self.tick_s)
        for name in ("sim_time_s", "exchange_delay_s", "metric_cadence_s"):
            if to_ms(getattr(self, name)) % ms:
                raise ValueError(f"{name} must be a multiple of tick_s")

    # -- (de)serialisation ----------------------------------------------

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["area"] = list(self.area)
        d["speed_range"] = list(self.speed_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(k for k in d if k not in names and not k.startswith("_"))
        if unknown:
            raise ValueError(f"unknown config fields: {', '.join(unknown)}")
        return cls(**{k: v for k, v in d.items() if k in names})

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def dump(self, path, decided=()) -> None:
        d = self.to_dict()
        if decided:
            d["_decided"] = sorted(decided)
        Path(path).write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "SimConfig":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        return cls.from_dict(json.loads(path.read_text()))

    # -- derived ----------------------------------------------------------

    def stream(self, which: int) -> np.random.SeedSequence:
        return np.random.SeedSequence([self.seed, self.run_index, which])

    def layout(self) -> CommunityLayout | None:
        if not self.communities:
            return None
        c = self.communities
        return CommunityLayout(
            n_communities=c.get("n_communities", 3),
            nodes_per_comm=c.get("nodes_per_comm", 33),
            cell_size=tuple(c.get("cell_size", (200.0, 200.0))),
            grid=tuple(c["grid"]) if c.get("grid") else None,
            travellers_per_comm=c.get("travellers_per_comm", 2),
            home_dwell=c.get("home_dwell_s", 600.0),
            away_dwell=c.get("away_dwell_s", 200.0),
            gap=c.get("gap_m", 2 * self.range_m),
        )

    @property
    def locations_per_comm(self) -> int:
        return self.communities.get("locations_per_comm", 3) if self.communities else 0


def forget_horizon_ms(beta: float, m_min: float) -> float:
    """Idle time after which a popularity-1 weight drops below m_min."""
    if beta == 0.0 or m_min == 0.0:
        return math.inf
    return -math.log(m_min) / beta * 1000.0


def _safe_floor(t: float) -> float:
    # stay a millisecond (plus rounding slack) on the early side
    if math.isinf(t):
        return t
    return math.floor(t - 1.0 - 1e-9 * abs(t))


def detect_contacts(positions: np.ndarray, range_m: float, n_nodes: int | None = None) -> set[tuple[int, int]]:
    """Unordered pairs within ``range_m`` (closed ball).

    ``positions`` stacks node positions then location positions; pairs of
    two locations (indices >= ``n_nodes``) are never reported.
    """
    n = len(positions)
    n_nodes = n if n_nodes is None else n_nodes
    diff = positions[:, None, :] - positions[None, :, :]
    close = (diff ** 2).sum(-1) <= range_m * range_m
    close[n_nodes:, n_nodes:] = False
    i, j = np.nonzero(np.triu(close, 1))
    return set(zip(i.tolist(), j.tolist()))


# -- world construction -------------------------------------------------------

def load_or_synth_profiles(cfg: SimConfig) -> list[tuple[str, list[tuple[str, float]]]]:
    """(location id, ranked tags) for every location, sorted by id."""
    if cfg.profiles_dir:
        d = Path(cfg.profiles_dir)
        if not d.is_dir():
            raise FileNotFoundError(f"profiles directory not found: {d}")
        files = sorted(d.glob("*.csv"))
        if not files:
            raise FileNotFoundError(f"no profile CSVs in {d}")
        return [(p.stem, read_profile(p)) for p in files]
    n_loc = cfg.n_locations
    if cfg.communities:
        n_loc = cfg.layout().n_communities * cfg.locations_per_comm
    seed = cfg.seed if cfg.corpus_seed is None else cfg.corpus_seed
    corp = corpus_mod.synth_corpus(n_loc, cfg.tags_per_location, cfg.shared_fraction, cfg.zipf_s, seed)
    return [(v, corpus_mod.extract_profile(corp, v, cfg.tags_per_location)) for v in corp.venues()]


@dataclass
class RunResult:
    config: SimConfig
    samples: list[tuple[float, str, str, float]] = field(default_factory=list)
    exchanges: list[tuple[float, str, str, int, int]] = field(default_factory=list)
    ccdf: list[tuple[float, float, str]] = field(default_factory=list)
    taub: list[tuple[str, float]] = field(default_factory=list)
    snapshots: dict[str, str] = field(default_factory=dict)
    locations: list[LocationProfile] = field(default_factory=list)
    trace: Trace | None = None

    def series(self, metric: str, scope: str = "all") -> tuple[np.ndarray, np.ndarray]:
        rows = [(t, v) for t, m, s, v in self.samples if m == metric and s == scope]
        return np.array([r[0] for r in rows]), np.array([r[1] for r in rows])


class Simulation:
    def __init__(self, cfg: SimConfig, trace: Trace | None = None):
        self.cfg = cfg
        self.layout = cfg.layout()
        self.thresholds = derive_thresholds(cfg.forget_s, cfg.warm_s, cfg.beta, cfg.tau, cfg.warm_ref_s)
        self.limits = ExchangeLimits(cfg.t_max, cfg.l_max, self.thresholds.w_min, cfg.theta_rec)
        self.trace = trace if trace is not None else self._make_trace()
        self.n_nodes = self.trace.n_nodes
        self.horizon_ms = forget_horizon_ms(cfg.beta, self.thresholds.m_min)
        self.next_prune = [0.0] * self.n_nodes
        if self.layout is not None and self.n_nodes != self.layout.n_nodes:
            raise ValueError("trace node count does not match the community layout")
        self._build_locations()
        self._build_nodes()
        self.result = RunResult(cfg, locations=self.locations, trace=self.trace)

    # -- setup ------------------------------------------------------------

    def _make_trace(self) -> Trace:
        cfg = self.cfg
        if cfg.trace_path:
            area = self.layout.area if self.layout else cfg.area
            return load_trace(cfg.trace_path, area)
        seed = cfg.stream(_TRACE)
        if self.layout is not None:
            return gen_community_trace(self.layout, cfg.speed_range, cfg.sim_time_s, cfg.tick_s, seed)
        return gen_rwp_trace(cfg.n_nodes, cfg.area, cfg.speed_range, cfg.sim_time_s, cfg.tick_s, seed)

    def _build_locations(self) -> None:
        cfg = self.cfg
        profiles = load_or_synth_profiles(cfg)
        rng = np.random.default_rng(cfg.stream(_PLACEMENT))
        topo_seeds = cfg.stream(_TOPOLOGY).spawn(len(profiles))
        base = TOPOLOGIES[cfg.topology]
        topo = SanTopologyConfig(base.kind, cfg.hk_m, cfg.triad_prob, base.target_cc)
        pop = cfg.theta_rec if cfg.location_popularity is None else cfg.location_popularity
        beta_loc = cfg.beta if cfg.beta_loc is None else cfg.beta_loc
        mode = DYNAMIC if cfg.dynamic_locations else STATIC
        self.location_community: dict[str, int] = {}
        self.locations: list[LocationProfile] = []
        w, h = self.trace.area
        for i, (loc_id, ranked) in enumerate(profiles):
            if self.layout is not None:
                comm = min(i // max(cfg.locations_per_comm, 1), self.layout.n_communities - 1)
                self.location_community[loc_id] = comm
                x0, y0, x1, y1 = self.layout.cell(comm)
                pos = (x0 + (x1 - x0) * rng.random(), y0 + (y1 - y0) * rng.random())
            else:
                pos = (w * rng.random(), h * rng.random())
            san = build_location_san(ranked, topo, loc_id, topo_seeds[i], pop,
                                     dynamic=cfg.dynamic_locations, beta_loc=beta_loc)
            self.locations.append(LocationProfile(loc_id, pos, list(ranked), san, mode, initial=san.copy()))
        self.profile_tags = {p.id: set(p.tags) for p in self.locations}
        self.universe = set().union(*self.profile_tags.values())
        self.loc_positions = np.array([p.position for p in self.locations], dtype=float).reshape(-1, 2)
        if cfg.scheme == EPIDEMIC:
            self.loc_stores = [EpidemicStore.for_location(p.id, p.tags) for p in self.locations]
            self.loc_rngs = [np.random.default_rng(s)
                             for s in np.random.SeedSequence([cfg.seed, cfg.run_index, _EPIDEMIC, 1]).spawn(len(self.locations))]

    def community_universe(self, comm: int) -> set[str]:
        return set().union(*(self.profile_tags[l] for l, c in self.location_community.items() if c == comm))

    def reachable_universe(self, node: int) -> list[str]:
        """Tags of the communities ``node`` can walk into (home, plus destination for travellers)."""
        lay = self.layout
        comms = {lay.home[node]}
        if lay.is_traveller(node):
            comms.add(lay.destination[node])
        return sorted(set().union(*(self.community_universe(c) for c in comms)))

    def _build_nodes(self) -> None:
        cfg = self.cfg
        rng = np.random.default_rng(cfg.stream(_INIT))
        universe = sorted(self.universe)
        self.node_ids = [f"n{i:03d}" for i in range(self.n_nodes)]
        self.nodes = []
        for i, nid in enumerate(self.node_ids):
            pool = universe if self.layout is None else self.reachable_universe(i)
            chosen = [t for t, u in zip(pool, rng.random(len(pool))) if u < cfg.init_tag_prob]
            if cfg.scheme == COGNITIVE:
                node = SemanticNet(owner=nid, kind=MOBILE, beta=cfg.beta)
                for t in chosen:
                    node.add_vertex(t)
            else:
                node = EpidemicStore(owner=nid, beta=cfg.beta)
                for t in chosen:
                    node.add(t, 0)
            self.nodes.append(node)
        if cfg.scheme == EPIDEMIC:
            self.node_rngs = [np.random.default_rng(s)
                              for s in np.random.SeedSequence([cfg.seed, cfg.run_index, _EPIDEMIC, 0]).spawn(self.n_nodes)]

    # -- mechanics ----------------------------------------------------------

    def _prune(self, i: int, now: int) -> None:
        # nothing can have expired before next_prune[i]; skip the full scan
        if not self.cfg.pruning or now < self.next_prune[i]:
            return
        node = self.nodes[i]
        h = self.horizon_ms
        if self.cfg.scheme == COGNITIVE:
            prune_forgotten(node, now, self.thresholds.m_min)
            live = node.slots()
            soonest = float((node._last[live] + node._pop[live] * h).min()) if len(live) else math.inf
        else:
            epidemic_prune(node, now, self.thresholds.m_min)
            soonest = min((s.last_seen + s.popularity * h for s in node.items.values()), default=math.inf)
        self.next_prune[i] = _safe_floor(soonest)

    def _received(self, i: int, now: int) -> None:
        # anything just received is popularity >= 1 and fresh
        self.next_prune[i] = min(self.next_prune[i], _safe_floor(now + self.horizon_ms))

    def _log(self, now, donor, recipient, c_or_tags):
        if self.cfg.scheme == COGNITIVE:
            nv, ne = len(c_or_tags.vertices), len(c_or_tags.edges)
        else:
            nv, ne = len(c_or_tags), 0
        self.result.exchanges.append((now / 1000.0, donor, recipient, nv, ne))

    def exchange(self, a: int, b: int, now: int, elapsed_s: float) -> None:
        """One contact-triggered exchange between entities a < b."""
        cfg = self.cfg
        n = self.n_nodes
        if b >= n:  # node a meets location b
            loc = self.locations[b - n]
            self._prune(a, now)
            node = self.nodes[a]
            if cfg.scheme == COGNITIVE:
                c = build_contributed(loc.san, node, now, elapsed_s, self.limits, cfg.tau, mutate=False)
                merge_contributed(node, c, now)
                self._received(a, now)
                if loc.mode == DYNAMIC:
                    refresh_dynamic(loc, c, now)
                self._log(now, loc.id, node.owner, c)
            else:
                picked = epidemic_exchange(self.loc_stores[b - n], node, cfg.t_max, cfg.l_max,
                                           self.loc_rngs[b - n], now)
                self._received(a, now)
                self._log(now, loc.id, node.owner, picked)
            return
        self._prune(a, now)
        self._prune(b, now)
        na, nb = self.nodes[a], self.nodes[b]
        if cfg.scheme == COGNITIVE:
            for donor, recipient in ((na, nb), (nb, na)):
                c = build_contributed(donor, recipient, now, elapsed_s, self.limits, cfg.tau)
                merge_contributed(recipient, c, now)
                self._log(now, donor.owner, recipient.owner, c)
        else:
            for (donor, rng), recipient in (((na, self.node_rngs[a]), nb), ((nb, self.node_rngs[b]), na)):
                picked = epidemic_exchange(donor, recipient, cfg.t_max, cfg.l_max, rng, now)
                self._log(now, donor.owner, recipient.owner, picked)
        self._received(a, now)
        self._received(b, now)

    def sample(self, now: int) -> None:
        for i in range(self.n_nodes):
            self._prune(i, now)
        t = now / 1000.0
        rows = self.result.samples
        nodes = self.nodes
        rows.append((t, "hit_ratio", "all", hit_ratio([n.tags() for n in nodes], self.universe)))
        rows.append((t, "coverage", "all", coverage(nodes, self.profile_tags)))
        if self.layout is not None:
            for scope, value in self.community_metrics():
                rows.append((t, scope[0], scope[1], value))

    def community_metrics(self):
        lay = self.layout
        n_comm = lay.n_communities
        universes = [self.community_universe(c) for c in range(n_comm)]
        locs_of = [{l for l, c in self.location_community.items() if c == k} for k in range(n_comm)]

        def scoped(node_idx, target, home):
            uni = universes[target] - universes[home] if target != home else universes[target]
            node = self.nodes[node_idx]
            hr = hit_ratio([node.tags()], uni) if uni else 0.0
            cov = coverage([node], self.profile_tags, locs_of[target])
            return hr, cov

        def mean_over(pairs):
            pairs = list(pairs)
            if not pairs:
                return 0.0, 0.0
            return (sum(p[0] for p in pairs) / len(pairs), sum(p[1] for p in pairs) / len(pairs))

        out = []
        residents = lay.residents()
        home_vals = mean_over(scoped(i, lay.home[i], lay.home[i]) for i in residents)
        ext_vals = mean_over(
            mean_over(scoped(i, c, lay.home[i]) for c in range(n_comm) if c != lay.home[i])
            for i in residents)
        for name, vals in (("resident_home", home_vals), ("resident_external", ext_vals)):
            out.append((("hit_ratio", name), vals[0]))
            out.append((("coverage", name), vals[1]))
        travellers = lay.travellers()
        if travellers:
            def traveller_vals(i):
                home, dest = lay.home[i], lay.destination[i]
                ext = [c for c in range(n_comm) if c not in (home, dest)]
                return (scoped(i, home, home), scoped(i, dest, home),
                        mean_over(scoped(i, c, home) for c in ext))

            tagged = traveller_vals(travellers[0])
            every = [traveller_vals(i) for i in travellers]
            for k, part in enumerate(("home", "destination", "external")):
                avg = mean_over(v[k] for v in every)
                out.append((("hit_ratio", f"traveller_{part}"), tagged[k][0]))
                out.append((("coverage", f"traveller_{part}"), tagged[k][1]))
                out.append((("hit_ratio", f"travellers_{part}"), avg[0]))
                out.append((("coverage", f"travellers_{part}"), avg[1]))
        return out

    def run(self) -> RunResult:
        cfg = self.cfg
        n = self.n_nodes
        n_ent = n + len(self.locations)
        times = self.trace.times_ms
        delay = to_ms(cfg.exchange_delay_s)
        repeat = to_ms(cfg.exchange_repeat_s)
        cadence = to_ms(cfg.metric_cadence_s)
        end = to_ms(cfg.sim_time_s)
        never = np.iinfo(np.int64).max
        r2 = cfg.range_m * cfg.range_m
        prev = np.zeros((n_ent, n_ent), dtype=bool)
        start = np.zeros((n_ent, n_ent), dtype=np.int64)
        next_at = np.full((n_ent, n_ent), never, dtype=np.int64)
        upper = np.triu(np.ones((n_ent, n_ent), dtype=bool), 1)
        upper[n:, n:] = False
        positions = np.empty((n_ent, 2))
        positions[n:] = self.loc_positions
        for ti, now in enumerate(times.tolist()):
            if now > end:
                break
            positions[:n] = self.trace.positions[ti]
            diff = positions[:, None, :] - positions[None, :, :]
            close = ((diff ** 2).sum(-1) <= r2) & upper
            new = close & ~prev
            if new.any():
                start[new] = now
                next_at[new] = now + delay
            next_at[~close] = never
            prev = close
            due = close & (next_at <= now)
            if due.any():
                ii, jj = np.nonzero(due)
                for a, b in zip(ii.tolist(), jj.tolist()):
                    self.exchange(a, b, now, (now - start[a, b]) / 1000.0)
                next_at[due] = now + repeat if repeat > 0 else never
            if now % cadence == 0:
                self.sample(now)
        self._finish(min(end, int(times[-1])))
        return self.result

    def _finish(self, now: int) -> None:
        res = self.result
        cfg = self.cfg
        for i, node in enumerate(self.nodes):
            self._prune(i, now)
            res.snapshots[node.owner] = node.snapshot()
        for loc in self.locations:
            res.snapshots[loc.id] = loc.san.snapshot()
        loc_nets = [loc.san for loc in self.locations]
        for weighted in (False, True):
            suffix = "_weighted" if weighted else ""
            if cfg.scheme == COGNITIVE:
                node_curve = mean_ccdf([degree_ccdf(nd, weighted, now) for nd in self.nodes])
                res.ccdf.extend((d, p, "nodes" + suffix) for d, p in node_curve)
            union = union_locations_san(loc_nets, weighted, now)
            res.ccdf.extend((d, p, "locations" + suffix) for d, p in degree_ccdf(union, weighted))
        for loc in self.locations:
            if len(loc.san) >= 2:
                before = degrees(loc.initial, True, 0)
                after = degrees(loc.san, True, now)
                res.taub.append((loc.id, kendall_tau_b(before, after)))


def run(cfg: SimConfig, trace: Trace | None = None) -> RunResult:
    return Simulation(cfg, trace).run()


# -- output -------------------------------------------------------------------

def _num(x) -> str:
    return repr(float(x))


def write_run(result: RunResult, out_dir, with_trace: bool = False, decided=()) -> Path:
    out = Path(out_dir)
    (out / "san_final").mkdir(parents=True, exist_ok=True)
    result.config.dump(out / "config.json", decided)
    with open(out / "metrics.csv", "w") as fh:
        fh.write("time_s,metric,scope,value\n")
        fh.writelines(f"{_num(t)},{m},{s},{_num(v)}\n" for t, m, s, v in result.samples)
    with open(out / "ccdf.csv", "w") as fh:
        fh.write("degree,probability,source\n")
        fh.writelines(f"{_num(d)},{_num(p)},{s}\n" for d, p, s in result.ccdf)
    with open(out / "exchanges.csv", "w") as fh:
        fh.write("time_s,donor,recipient,n_vertices,n_edges\n")
        fh.writelines(f"{_num(t)},{d},{r},{nv},{ne}\n" for t, d, r, nv, ne in result.exchanges)
    with open(out / "taub.csv", "w") as fh:
        fh.write("location,tau_b\n")
        fh.writelines(f"{loc},{_num(tb)}\n" for loc, tb in result.taub)
    for owner, text in sorted(result.snapshots.items()):
        (out / "san_final" / f"{owner}.txt").write_text(text)
    write_locations(out / "locations.csv", result.locations)
    if with_trace and result.trace is not None:
        save_trace(result.trace, out / "trace.csv")
    return out


# -- batches ------------------------------------------------------------------

def mean_series(results: list[RunResult]) -> dict[tuple[float, str, str], float]:
    """Pointwise mean of the sampled metrics over runs."""
    acc: dict[tuple[float, str, str], list[float]] = {}
    for res in results:
        for t, m, s, v in res.samples:
            acc.setdefault((t, m, s), []).append(v)
    return {k: sum(v) / len(v) for k, v in acc.items()}


def _run_one(args):
    cfg, out_dir, decided = args
    res = run(cfg)
    if out_dir is not None:
        write_run(res, out_dir, decided=decided)
    return res


def batch(configs: dict[str, SimConfig], n_runs: int, seed: int | None = None, out_dir=None,
          decided=(), workers: int = 1, keep: bool = True) -> dict[str, list[RunResult]]:
    """Run every variant ``n_runs`` times with run indices 0..n_runs-1.

    Variants sharing a run index share the trace and placement streams, so
    schemes are compared on identical worlds. Writes ``run_XX/<variant>/``
    and ``mean_metrics.csv`` when ``out_dir`` is given.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    jobs = []
    for r in range(n_runs):
        for name, cfg in configs.items():
            c = cfg.replace(run_index=r) if seed is None else cfg.replace(seed=seed, run_index=r)
            d = None if out_dir is None else Path(out_dir) / f"run_{r:02d}" / name
            jobs.append((name, (c, d, decided)))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as ex:
            done = list(ex.map(_run_one, [j[1] for j in jobs]))
    else:
        done = [_run_one(j[1]) for j in jobs]
    out: dict[str, list[RunResult]] = {name: [] for name in configs}
    for (name, _), res in zip(jobs, done):
        if not keep:
            res = RunResult(res.config, samples=res.samples, taub=res.taub, ccdf=res.ccdf)
        out[name].append(res)
    if out_dir is not None:
        write_mean_metrics(Path(out_dir) / "mean_metrics.csv", {k: mean_series(v) for k, v in out.items()})
    return out


def write_mean_metrics(path, means: dict[str, dict[tuple[float, str, str], float]]) -> None:
    names = list(means)
    keys = sorted({k for m in means.values() for k in m}, key=lambda k: (k[1], k[2], k[0]))
    with open(path, "w") as fh:
        fh.write(",".join(["time_s", "metric", "scope", *names]) + "\n")
        for k in keys:
            vals = [_num(means[n][k]) if k in means[n] else "" for n in names]
            fh.write(",".join([_num(k[0]), k[1], k[2], *vals]) + "\n")
