"""Mobility traces: random waypoint, a community/traveller model, CSV I/O.

Paths are piecewise linear. A node's path is a list of breakpoints
``(t, x, y)`` and positions at each tick are obtained by linear
interpolation, so samples land exactly on waypoints when a tick coincides
with one.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .san import to_ms

Rect = tuple[float, float, float, float]  # x0, y0, x1, y1


@dataclass
class Trace:
    times_ms: np.ndarray      # (T,) int64, uniform ticks from 0
    positions: np.ndarray     # (T, N, 2) float64
    area: tuple[float, float]

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[1]

    @property
    def n_ticks(self) -> int:
        return len(self.times_ms)

    def __eq__(self, other):
        return (isinstance(other, Trace) and self.area == other.area
                and np.array_equal(self.times_ms, other.times_ms)
                and np.array_equal(self.positions, other.positions))


def tick_times(sim_time: float, tick: float) -> np.ndarray:
    step = to_ms(tick)
    if step <= 0:
        raise ValueError("tick must be positive")
    return np.arange(0, to_ms(sim_time) + 1, step, dtype=np.int64)


def sample_path(bt, bx, by, times_s: np.ndarray) -> np.ndarray:
    """Positions of a breakpoint path at the given times, shape (len(times), 2)."""
    return np.column_stack([np.interp(times_s, bt, bx), np.interp(times_s, bt, by)])


def _seed_seq(seed) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


def _uniform_point(rng, rect: Rect):
    x0, y0, x1, y1 = rect
    return (x0 + (x1 - x0) * rng.random(), y0 + (y1 - y0) * rng.random())


def rwp_path(rng, rect: Rect, start, t0: float, t1: float, speed_range, path=None):
    """Zero-pause random waypoint inside ``rect`` from ``t0`` to ``t1``.

    Appends breakpoints to ``path`` (a list of (t, x, y)); the last leg is
    cut at ``t1``.
    """
    lo, hi = speed_range
    path = [] if path is None else path
    t, (x, y) = t0, start
    if not path or path[-1][0] != t:
        path.append((t, x, y))
    while t < t1:
        wx, wy = _uniform_point(rng, rect)
        speed = lo + (hi - lo) * rng.random()
        dur = math.hypot(wx - x, wy - y) / speed
        if dur == 0.0:
            continue
        if t + dur >= t1:
            f = (t1 - t) / dur
            x, y = x + f * (wx - x), y + f * (wy - y)
            t = t1
        else:
            x, y, t = wx, wy, t + dur
        path.append((t, x, y))
    return path


def _sample(paths, times_ms):
    ts = times_ms / 1000.0
    pos = np.empty((len(times_ms), len(paths), 2))
    for i, path in enumerate(paths):
        arr = np.asarray(path)
        pos[:, i, :] = sample_path(arr[:, 0], arr[:, 1], arr[:, 2], ts)
    return pos


def gen_rwp_trace(n_nodes: int, area=(1000.0, 1000.0), speed_range=(1.0, 1.86),
                  sim_time: float = 75000.0, tick: float = 1.0, seed: int = 0) -> Trace:
    if min(speed_range) <= 0 or min(area) <= 0:
        raise ValueError("speeds and area must be positive")
    times = tick_times(sim_time, tick)
    rect = (0.0, 0.0, float(area[0]), float(area[1]))
    paths = []
    for ss in _seed_seq(seed).spawn(n_nodes):
        rng = np.random.default_rng(ss)
        paths.append(rwp_path(rng, rect, _uniform_point(rng, rect), 0.0, times[-1] / 1000.0, speed_range))
    return Trace(times, _sample(paths, times), (float(area[0]), float(area[1])))


# -- communities -------------------------------------------------------------

@dataclass
class CommunityLayout:
    n_communities: int
    nodes_per_comm: int
    cell_size: tuple[float, float] = (200.0, 200.0)
    grid: tuple[int, int] | None = None       # (cols, rows); default one row
    travellers_per_comm: int = 2
    home_dwell: float = 600.0
    away_dwell: float = 200.0
    gap: float = 0.0        # empty strip between cells; wider than the radio range keeps groups apart
    home: list[int] = field(default_factory=list)
    destination: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.grid is None:
            self.grid = (self.n_communities, 1)
        cols, rows = self.grid
        if cols * rows < self.n_communities:
            raise ValueError("grid has fewer cells than communities")
        if self.n_communities > 1 and self.travellers_per_comm > self.nodes_per_comm:
            raise ValueError("more travellers than nodes in a community")
        if not self.home:
            self.home = [c for c in range(self.n_communities) for _ in range(self.nodes_per_comm)]
            if self.n_communities > 1:
                for c in range(self.n_communities):
                    first = c * self.nodes_per_comm
                    for k in range(self.travellers_per_comm):
                        dest = (c + 1 + k % (self.n_communities - 1)) % self.n_communities
                        self.destination[first + k] = dest
        for node, dest in self.destination.items():
            if dest == self.home[node]:
                raise ValueError(f"traveller {node} has its home as destination")

    @property
    def n_nodes(self) -> int:
        return len(self.home)

    @property
    def area(self) -> tuple[float, float]:
        cols, rows = self.grid
        g = self.gap
        return (cols * (self.cell_size[0] + g) - g, rows * (self.cell_size[1] + g) - g)

    def cell(self, community: int) -> Rect:
        cols, _ = self.grid
        cx, cy = community % cols, community // cols
        w, h = self.cell_size
        x0, y0 = cx * (w + self.gap), cy * (h + self.gap)
        return (x0, y0, x0 + w, y0 + h)

    def is_traveller(self, node: int) -> bool:
        return node in self.destination

    def residents(self, community: int | None = None) -> list[int]:
        return [n for n, c in enumerate(self.home)
                if n not in self.destination and (community is None or c == community)]

    def travellers(self) -> list[int]:
        return sorted(self.destination)

    def without_travellers(self) -> "CommunityLayout":
        return CommunityLayout(self.n_communities, self.nodes_per_comm, self.cell_size, self.grid,
                               travellers_per_comm=0, home_dwell=self.home_dwell, away_dwell=self.away_dwell,
                               gap=self.gap, home=list(self.home), destination={})


def traveller_path(rng, home: Rect, dest: Rect, t_end: float, speed_range, home_dwell, away_dwell):
    lo, hi = speed_range
    path = []
    pos = _uniform_point(rng, home)
    t = 0.0
    at_home = True
    while t < t_end:
        rect, dwell = (home, home_dwell) if at_home else (dest, away_dwell)
        stop = min(t_end, t + dwell)
        rwp_path(rng, rect, pos, t, stop, speed_range, path)
        t, x, y = path[-1]
        if t >= t_end:
            break
        at_home = not at_home
        target = _uniform_point(rng, home if at_home else dest)
        speed = lo + (hi - lo) * rng.random()
        dur = math.hypot(target[0] - x, target[1] - y) / speed
        if t + dur >= t_end:
            f = (t_end - t) / dur
            path.append((t_end, x + f * (target[0] - x), y + f * (target[1] - y)))
            break
        t += dur
        pos = target
        path.append((t, *pos))
    return path


def gen_community_trace(layout: CommunityLayout, speed_range=(1.0, 1.86), sim_time: float = 75000.0,
                        tick: float = 1.0, seed: int = 0) -> Trace:
    times = tick_times(sim_time, tick)
    t_end = times[-1] / 1000.0
    paths = []
    for node, ss in enumerate(_seed_seq(seed).spawn(layout.n_nodes)):
        rng = np.random.default_rng(ss)
        home = layout.cell(layout.home[node])
        if layout.is_traveller(node):
            dest = layout.cell(layout.destination[node])
            paths.append(traveller_path(rng, home, dest, t_end, speed_range,
                                        layout.home_dwell, layout.away_dwell))
        else:
            paths.append(rwp_path(rng, home, _uniform_point(rng, home), 0.0, t_end, speed_range))
    return Trace(times, _sample(paths, times), layout.area)


# -- files -------------------------------------------------------------------

HEADER = ["time_s", "node_id", "x_m", "y_m"]


def save_trace(trace: Trace, path) -> None:
    n = trace.n_nodes
    with open(path, "w", newline="") as fh:
        fh.write(",".join(HEADER) + "\n")
        for ti, t_ms in enumerate(trace.times_ms.tolist()):
            t = repr(t_ms / 1000.0)
            rows = trace.positions[ti].tolist()
            fh.write("".join(f"{t},{i},{rows[i][0]!r},{rows[i][1]!r}\n" for i in range(n)))


def load_trace(path, area) -> Trace:
    """Read and validate a trace file: every node at every tick, in order, inside ``area``."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"trace file not found: {path}")
    w, h = area
    times, rows = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != HEADER:
            raise ValueError(f"{path}:1: expected header {','.join(HEADER)}")
        prev = None
        for lineno, row in enumerate(reader, 2):
            if len(row) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                t_ms, node, x, y = to_ms(float(row[0])), int(row[1]), float(row[2]), float(row[3])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if not (0.0 <= x <= w and 0.0 <= y <= h):
                raise ValueError(f"{path}:{lineno}: position ({x}, {y}) outside area {w}x{h}")
            if prev is not None and (t_ms, node) <= prev:
                raise ValueError(f"{path}:{lineno}: records out of (time, node) order")
            prev = (t_ms, node)
            if not times or times[-1] != t_ms:
                times.append(t_ms)
                rows.append([])
            if node != len(rows[-1]):
                raise ValueError(f"{path}:{lineno}: expected node {len(rows[-1])} at t={row[0]}, got {node}")
            rows[-1].append((x, y))
    if not rows:
        raise ValueError(f"{path}: empty trace")
    n = len(rows[0])
    for t_ms, r in zip(times, rows):
        if len(r) != n:
            raise ValueError(f"{path}: tick t={t_ms / 1000.0} has {len(r)} nodes, expected {n}")
    return Trace(np.asarray(times, dtype=np.int64), np.asarray(rows, dtype=float), (float(w), float(h)))
