"""Named experiment bundles.

A preset is a base SimConfig plus named variants (field overrides). Values
from the published parameter tables are set directly; everything else is
listed in ``decided`` and ends up under ``_decided`` in emitted configs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .engine import COGNITIVE, EPIDEMIC, SimConfig

# Table II
TABLE2 = dict(n_nodes=100, area=(1000.0, 1000.0), speed_range=(1.0, 1.86), range_m=20.0,
              sim_time_s=75000.0, beta=0.1, tau=0.1, theta_rec=5, n_locations=10,
              tags_per_location=221, l_max=2, warm_s=25.0, warm_ref_s=2.0, init_tag_prob=0.01)

# Table IV (2098 tags over 9 locations: 233 each gives 2097)
TABLE4 = dict(TABLE2, t_max=50, forget_s=35.0, topology="chain", tags_per_location=233,
              communities=dict(n_communities=3, nodes_per_comm=33, locations_per_comm=3,
                               travellers_per_comm=2, cell_size=[575.0, 575.0],
                               home_dwell_s=600.0, away_dwell_s=200.0))

# not fixed by the published setup
DECIDED = dict(exchange_delay_s=2.0, exchange_repeat_s=10.0, metric_cadence_s=250.0, tick_s=1.0,
               shared_fraction=0.1, zipf_s=1.0, hk_m=2)
DECIDED_COMMUNITY = ("communities.cell_size", "communities.home_dwell_s", "communities.away_dwell_s")

# reduced scale that fits a laptop: same node and location density ratios
DESK = dict(n_nodes=50, n_locations=5, area=(500.0, 500.0), sim_time_s=20000.0)
DESK_COMMUNITY = dict(sim_time_s=20000.0,
                      communities=dict(TABLE4["communities"], nodes_per_comm=12, cell_size=[250.0, 250.0]))

TOPOLOGY_NAMES = ("chain", "cc02", "cc05")


@dataclass
class Preset:
    name: str
    description: str
    base: dict
    variants: dict[str, dict] = field(default_factory=dict)
    decided: tuple[str, ...] = ()

    def config(self, variant: str | None = None, **overrides) -> SimConfig:
        if variant is None:
            if len(self.variants) != 1:
                raise ValueError(f"preset {self.name} has variants {sorted(self.variants)}; pick one")
            variant = next(iter(self.variants))
        if variant not in self.variants:
            raise KeyError(f"preset {self.name} has no variant {variant!r}")
        d = dict(self.base)
        d.update(self.variants[variant])
        d.update(overrides)
        d.setdefault("label", f"{self.name}/{variant}")
        return SimConfig.from_dict(d)

    def configs(self, **overrides) -> dict[str, SimConfig]:
        return {v: self.config(v, **overrides) for v in self.variants}


def _scheme_variants(topologies=TOPOLOGY_NAMES) -> dict[str, dict]:
    out = {f"cognitive-{t}": dict(scheme=COGNITIVE, topology=t) for t in topologies}
    out["epidemic"] = dict(scheme=EPIDEMIC)
    return out


def _comparison(name, t_max, forget, desk):
    base = dict(TABLE2, **DECIDED, t_max=t_max, forget_s=forget)
    if desk:
        base.update(DESK)
    return Preset(name, f"cognitive vs epidemic, T_max={t_max}, forget={forget}s", base,
                  _scheme_variants(), tuple(DECIDED) + (("desk-scale",) if desk else ()))


def _build() -> dict[str, Preset]:
    presets = {}
    for desk in (False, True):
        sfx = "-desk" if desk else ""
        extra = ("desk-scale",) if desk else ()
        presets["fig7" + sfx] = _comparison("fig7" + sfx, 75, 75.0, desk)
        presets["fig8" + sfx] = _comparison("fig8" + sfx, 150, 150.0, desk)

        base = dict(TABLE2, **DECIDED, scheme=COGNITIVE)
        if desk:
            base.update(DESK)
        fig9 = {f"t{tm}-{topo}": dict(t_max=tm, forget_s=float(tm), topology=topo)
                for tm in (75, 100, 150) for topo in TOPOLOGY_NAMES}
        presets["fig9" + sfx] = Preset("fig9" + sfx, "final degree CCDFs over forget/tag limits", base, fig9,
                                       tuple(DECIDED) + ("fig9 middle setting t_max=forget=100",) + extra)

        base = dict(TABLE2, **DECIDED, scheme=COGNITIVE, t_max=150, forget_s=150.0)
        if desk:
            base.update(DESK)
        table3 = {f"dynamic-{t}": dict(topology=t, dynamic_locations=True) for t in TOPOLOGY_NAMES}
        table3.update({f"static-{t}": dict(topology=t) for t in TOPOLOGY_NAMES})
        presets["table3" + sfx] = Preset("table3" + sfx, "dynamic location SANs and rank drift", base, table3,
                                         tuple(DECIDED) + ("beta_loc = beta",) + extra)

        # memory must outlast the walk between cells at forget <= 50s
        base = dict(TABLE4, **dict(DECIDED, exchange_repeat_s=2.0), scheme=COGNITIVE)
        if desk:
            base.update(DESK_COMMUNITY)
        decided = tuple(DECIDED) + DECIDED_COMMUNITY + extra
        presets["communities" + sfx] = Preset(
            "communities" + sfx, "three communities bridged by travellers", base,
            {"travellers": {}, "no-travellers": dict(communities=dict(base["communities"], travellers_per_comm=0))},
            decided)
        presets["forget" + sfx] = Preset(
            "forget" + sfx, "forget sensitivity in the community setting", base,
            {f"forget{f}": dict(forget_s=float(f)) for f in (25, 35, 50)}, decided)
        presets["comm-topology" + sfx] = Preset(
            "comm-topology" + sfx, "location SAN organisation in the community setting", base,
            {t: dict(topology=t) for t in TOPOLOGY_NAMES}, decided)
    return presets


PRESETS = _build()


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}") from None
