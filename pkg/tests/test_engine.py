import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cognets.engine import (COGNITIVE, EPIDEMIC, SimConfig, Simulation, batch, detect_contacts, mean_series, run,
                            write_run)
from cognets.mobility import Trace, tick_times
from cognets.presets import PRESETS


def small(**kw):
    base = dict(n_nodes=10, area=(200.0, 200.0), sim_time_s=600.0, n_locations=3, tags_per_location=30,
                t_max=20, forget_s=100.0, metric_cadence_s=50.0, seed=11)
    base.update(kw)
    return SimConfig(**base)


def still_trace(points, sim_time=30.0, area=(1000.0, 1000.0)):
    times = tick_times(sim_time, 1.0)
    pos = np.repeat(np.asarray(points, dtype=float)[None], len(times), axis=0)
    return Trace(times, pos, area)


# -- contacts -------------------------------------------------------------------------

def test_contact_range_is_a_closed_ball():
    pts = np.array([[0.0, 0.0], [19.9, 0.0], [0.0, 500.0], [20.1, 500.0], [0.0, 900.0], [20.0, 900.0]])
    assert detect_contacts(pts, 20.0) == {(0, 1), (4, 5)}


def test_location_pairs_ignored():
    pts = np.array([[0.0, 0.0], [5.0, 0.0], [6.0, 0.0]])
    assert detect_contacts(pts, 20.0, n_nodes=1) == {(0, 1), (0, 2)}


# -- exchange triggering -----------------------------------------------------------------

def far_locations_cfg(**kw):
    # tiny location cells are drawn in [0, 1000)^2 but the test nodes sit far outside their reach
    return small(n_nodes=2, area=(1000.0, 1000.0), sim_time_s=30.0, metric_cadence_s=10.0, **kw)


def node_pairs(res):
    return [(t, d, r) for t, d, r, _, _ in res.exchanges if d.startswith("n") and r.startswith("n")]


def place_away(cfg, n):
    sim = Simulation(cfg, still_trace([[0.0, 0.0]] * n, cfg.sim_time_s))
    locs = sim.loc_positions
    for y in np.linspace(0, 1000, 201):
        for x in np.linspace(0, 1000, 201):
            if np.all(np.hypot(locs[:, 0] - x, locs[:, 1] - y) > 100):
                return x, y
    raise AssertionError("no free spot")


def test_stationary_pair_exchanges_once_after_delay():
    cfg = far_locations_cfg()
    x, y = place_away(cfg, 2)
    res = run(cfg, still_trace([[x, y], [x + 10, y]], cfg.sim_time_s))
    assert [(t, d) for t, d, _ in node_pairs(res)] == [(2.0, "n000"), (2.0, "n001")]


def test_repeat_exposes_periodic_exchanges():
    cfg = far_locations_cfg(exchange_repeat_s=10.0)
    x, y = place_away(cfg, 2)
    res = run(cfg, still_trace([[x, y], [x + 10, y]], cfg.sim_time_s))
    assert sorted({t for t, _, _ in node_pairs(res)}) == [2.0, 12.0, 22.0]


def test_out_of_range_never_exchanges():
    cfg = far_locations_cfg()
    x, y = place_away(cfg, 2)
    res = run(cfg, still_trace([[x, y], [x, min(y + 60, 1000.0)]], cfg.sim_time_s))
    assert node_pairs(res) == []


def test_node_at_location_learns_its_tags():
    cfg = far_locations_cfg(init_tag_prob=0.0)
    probe = Simulation(cfg, still_trace([[0.0, 0.0]] * 2, cfg.sim_time_s))
    loc = probe.locations[0]
    x, y = loc.position
    other = place_away(cfg, 2)
    sim = Simulation(cfg, still_trace([[x, y], list(other)], cfg.sim_time_s))
    # a node needs a shared tag to meet a location; give it the location's top tag
    sim.nodes[0].add_vertex(loc.tags[0])
    sim.run()
    got = {t for t in sim.nodes[0].tags() if loc.id in sim.nodes[0].annotations_of(t)}
    assert len(got) >= 1
    assert got <= set(loc.tags)


# -- whole runs ------------------------------------------------------------------------------

def test_t_max_zero_keeps_metrics_flat():
    res = run(small(t_max=0))
    for metric in ("hit_ratio", "coverage"):
        _, v = res.series(metric)
        assert np.all(v == v[0])


def test_no_forgetting_is_monotone():
    res = run(small(beta=0.0, pruning=False))
    _, v = res.series("hit_ratio")
    assert np.all(np.diff(v) >= 0)
    assert v[-1] > v[0]


def test_closed_system_never_invents_tags():
    sim = Simulation(small(pruning=False, beta=0.0))
    sim.run()
    held = set().union(*(set(n.tags()) for n in sim.nodes))
    assert held <= sim.universe


def test_schemes_share_world():
    a = Simulation(small(scheme=COGNITIVE))
    b = Simulation(small(scheme=EPIDEMIC))
    assert a.trace == b.trace
    assert np.array_equal(a.loc_positions, b.loc_positions)
    assert [set(n.tags()) for n in a.nodes] == [set(n.tags()) for n in b.nodes]


def test_static_locations_unchanged():
    sim = Simulation(small())
    before = [loc.san.snapshot() for loc in sim.locations]
    sim.run()
    assert [loc.san.snapshot() for loc in sim.locations] == before


def test_dynamic_locations_keep_structure():
    sim = Simulation(small(dynamic_locations=True))
    before = [(set(l.san.tags()), {e.key for e in l.san.edges()}) for l in sim.locations]
    res = sim.run()
    after = [(set(l.san.tags()), {e.key for e in l.san.edges()}) for l in sim.locations]
    assert before == after
    assert any(l.san.snapshot() != l.initial.snapshot() for l in sim.locations)
    assert len(res.taub) == 3


@pytest.mark.parametrize("scheme", [COGNITIVE, EPIDEMIC])
def test_byte_identical_reruns(tmp_path, scheme):
    cfg = small(scheme=scheme)
    a, b = tmp_path / "a", tmp_path / "b"
    write_run(run(cfg), a, with_trace=True)
    write_run(run(cfg), b, with_trace=True)
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert files == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert all((a / f).read_bytes() == (b / f).read_bytes() for f in files)
    assert {"metrics.csv", "ccdf.csv", "exchanges.csv", "config.json"} <= {f.name for f in files}


def test_communities_run_reports_breakdowns():
    cfg = small(n_nodes=1, communities=dict(n_communities=3, nodes_per_comm=4, locations_per_comm=1,
                                            travellers_per_comm=1, cell_size=[80.0, 80.0]))
    res = run(cfg)
    scopes = {s for _, m, s, _ in res.samples if m == "hit_ratio"}
    assert {"all", "resident_home", "resident_external", "traveller_home", "traveller_destination",
            "traveller_external"} <= scopes
    assert all(0.0 <= v <= 1.0 for *_, v in res.samples)


def test_isolated_communities_never_meet():
    comm = dict(n_communities=3, nodes_per_comm=6, locations_per_comm=2, travellers_per_comm=0,
                cell_size=[60.0, 60.0])
    cfg = small(sim_time_s=1500.0, exchange_repeat_s=2.0, communities=comm)
    sim = Simulation(cfg)
    res = sim.run()
    home = {nid: sim.layout.home[i] for i, nid in enumerate(sim.node_ids)}
    home.update(sim.location_community)
    assert res.exchanges
    assert all(home[d] == home[r] for _, d, r, _, _ in res.exchanges)
    ext = [v for _, m, s, v in res.samples if (m, s) == ("hit_ratio", "resident_external")]
    assert max(ext) == 0.0


# -- config -----------------------------------------------------------------------------------

def test_config_roundtrip_and_validation(tmp_path):
    cfg = small(topology="cc05", dynamic_locations=True)
    p = tmp_path / "c.json"
    cfg.dump(p, decided=["hk_m"])
    assert json.loads(p.read_text())["_decided"] == ["hk_m"]
    assert SimConfig.load(p) == cfg
    with pytest.raises(ValueError):
        SimConfig.from_dict({"bogus": 1})
    for bad in (dict(range_m=0), dict(scheme="flood"), dict(topology="ring"), dict(sim_time_s=10.5),
                dict(speed_range=(2.0, 1.0)), dict(init_tag_prob=2.0)):
        with pytest.raises(ValueError):
            small(**bad)
    with pytest.raises(FileNotFoundError):
        SimConfig.load(tmp_path / "missing.json")


def test_defaults_follow_parameter_tables():
    cfg = SimConfig()
    assert (cfg.range_m, cfg.sim_time_s, cfg.beta, cfg.tau, cfg.theta_rec) == (20.0, 75000.0, 0.1, 0.1, 5)
    assert PRESETS["communities"].config("travellers").t_max == 50
    assert PRESETS["fig7"].config("epidemic").forget_s == 75.0


def test_preset_roundtrip_through_file(tmp_path):
    preset = PRESETS["fig8-desk"]
    cfg = preset.config("cognitive-cc02", sim_time_s=300.0)
    p = tmp_path / "c.json"
    cfg.dump(p, preset.decided)
    a, b = tmp_path / "a", tmp_path / "b"
    write_run(run(cfg), a)
    write_run(run(SimConfig.load(p)), b)
    for name in ("metrics.csv", "ccdf.csv", "exchanges.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


# -- batches ----------------------------------------------------------------------------------

def test_batch_single_run_equals_run():
    cfg = small(sim_time_s=200.0)
    res = batch({"x": cfg}, 1)
    assert mean_series(res["x"]) == {(t, m, s): v for t, m, s, v in run(cfg).samples}


def test_batch_mean_within_envelope(tmp_path):
    cfg = small(sim_time_s=300.0)
    res = batch({"x": cfg}, 3, seed=5, out_dir=tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["mean_metrics.csv", "run_00", "run_01", "run_02"]
    per_run = [{(t, m, s): v for t, m, s, v in r.samples} for r in res["x"]]
    assert len({json.dumps(r.config.to_dict()) for r in res["x"]}) == 3
    for k, v in mean_series(res["x"]).items():
        vals = [r[k] for r in per_run]
        assert min(vals) - 1e-12 <= v <= max(vals) + 1e-12
    traces = [r.trace for r in res["x"]]
    assert traces[0] != traces[1]
