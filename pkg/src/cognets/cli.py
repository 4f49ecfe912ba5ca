"""Command line front end: ``cognets <subcommand> ...``.

Exit codes: 0 success, 1 runtime error (missing files, bad configs,
schema violations), 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .engine import COGNITIVE, EPIDEMIC, SimConfig, batch, mean_series, run, write_mean_metrics, write_run
from .locations import TOPOLOGIES, write_profile
from .metrics import ks_distance, mean_ccdf
from .mobility import gen_community_trace, gen_rwp_trace, save_trace
from .presets import PRESETS, TABLE4, get_preset

log = logging.getLogger("cognets")


class UsageError(Exception):
    pass


# -- CSV schemas ----------------------------------------------------------------

def _unit(x: str) -> float:
    v = float(x)
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"{v} outside [0, 1]")
    return v


def _tau(x: str) -> float:
    v = float(x)
    if not (math.isnan(v) or -1.0 <= v <= 1.0):
        raise ValueError(f"{v} outside [-1, 1]")
    return v


def _opt_unit(x: str):
    return None if x == "" else _unit(x)


SCHEMAS = {
    "metrics.csv": [("time_s", float), ("metric", str), ("scope", str), ("value", _unit)],
    "ccdf.csv": [("degree", float), ("probability", _unit), ("source", str)],
    "exchanges.csv": [("time_s", float), ("donor", str), ("recipient", str), ("n_vertices", int), ("n_edges", int)],
    "taub.csv": [("location", str), ("tau_b", _tau)],
    "locations.csv": [("id", str), ("x", float), ("y", float), ("mode", str)],
    "taub_summary.csv": [("topology", str), ("mode", str), ("tau_b_mean", _tau), ("tau_b_std", float),
                         ("n_runs", int)],
    "ccdf_mean.csv": [("variant", str), ("source", str), ("degree", float), ("probability", _unit)],
    "ks.csv": [("variant", str), ("weighted", int), ("ks_distance", _unit)],
}


def validate_csv(path, schema=None) -> int:
    """Check header and per-column types; returns the row count."""
    path = Path(path)
    schema = schema or SCHEMAS[path.name]
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        names = [c for c, _ in schema]
        if header is None or header[:len(names)] != names:
            raise ValueError(f"{path}:1: header {header} does not start with {names}")
        n = 0
        for lineno, row in enumerate(rows, 2):
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            for (name, conv), cell in zip(schema, row):
                try:
                    conv(cell)
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: column {name}: {exc}") from None
            n += 1
    return n


def _mean_metrics_schema(path):
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
    return [("time_s", float), ("metric", str), ("scope", str)] + [(h, _opt_unit) for h in header[3:]]


# -- config assembly ------------------------------------------------------------

def _overrides(args) -> dict:
    out = {}
    if getattr(args, "seed", None) is not None:
        out["seed"] = args.seed
    if getattr(args, "dynamic_locations", False):
        out["dynamic_locations"] = True
    return out


def _apply_communities(cfg: SimConfig, args) -> SimConfig:
    if getattr(args, "communities", False) and not cfg.communities:
        return cfg.replace(communities=dict(TABLE4["communities"]), tags_per_location=TABLE4["tags_per_location"])
    return cfg


def _select(configs: dict[str, SimConfig], args) -> dict[str, SimConfig]:
    """Filter preset variants by --variant/--scheme and pin --topology."""
    if getattr(args, "variant", None):
        if args.variant not in configs:
            raise UsageError(f"no variant {args.variant!r}; choose from {', '.join(configs)}")
        configs = {args.variant: configs[args.variant]}
    if args.scheme:
        configs = {k: c for k, c in configs.items() if c.scheme == args.scheme}
    if args.topology:
        # epidemic ignores the location SAN organisation, so it is kept and relabelled
        configs = {k: c.replace(topology=args.topology) for k, c in configs.items()
                   if c.scheme == EPIDEMIC or c.topology == args.topology}
    if not configs:
        raise UsageError("no preset variant matches the given --scheme/--topology")
    return {k: _apply_communities(c, args) for k, c in configs.items()}


def build_configs(args) -> tuple[dict[str, SimConfig], tuple[str, ...]]:
    if bool(args.config) == bool(args.preset):
        raise UsageError("give exactly one of --config or --preset")
    over = _overrides(args)
    if args.preset:
        try:
            preset = get_preset(args.preset)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
        return _select(preset.configs(**over), args), preset.decided
    cfg = SimConfig.load(args.config)
    if over:
        cfg = cfg.replace(**over)
    if args.scheme:
        cfg = cfg.replace(scheme=args.scheme)
    if args.topology:
        cfg = cfg.replace(topology=args.topology)
    decided = tuple(json.loads(Path(args.config).read_text()).get("_decided", ()))
    name = cfg.label.rsplit("/", 1)[-1] if cfg.label else Path(args.config).stem
    return {name: _apply_communities(cfg, args)}, decided


def _out(args, default: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get("COGNETS_OUT", "runs")) / default


# -- subcommands ----------------------------------------------------------------

def cmd_gen_corpus(args) -> None:
    corp = corpus_mod.synth_corpus(args.venues, args.tags, args.shared_fraction, args.zipf_s, args.seed or 0)
    out = _out(args, "corpus")
    files = corpus_mod.write_corpus_dir(corp, out)
    print(f"wrote {len(files)} venue documents to {out}")


def cmd_extract_tags(args) -> None:
    corp = corpus_mod.load_corpus_dir(args.input)
    out = _out(args, "profiles")
    out.mkdir(parents=True, exist_ok=True)
    for venue in corp.venues():
        write_profile(out / f"{venue}.csv", corpus_mod.extract_profile(corp, venue, args.max_tags))
    print(f"wrote {len(corp.venues())} profiles to {out}")


def cmd_gen_traces(args) -> None:
    configs, _ = build_configs(args)
    cfg = next(iter(configs.values()))
    out = _out(args, "traces")
    out.mkdir(parents=True, exist_ok=True)
    for r in range(args.runs):
        c = cfg.replace(run_index=r)
        seed = c.stream(1)
        lay = c.layout()
        if lay is not None:
            tr = gen_community_trace(lay, c.speed_range, c.sim_time_s, c.tick_s, seed)
        else:
            tr = gen_rwp_trace(c.n_nodes, c.area, c.speed_range, c.sim_time_s, c.tick_s, seed)
        save_trace(tr, out / f"trace_{r:02d}.csv")
    print(f"wrote {args.runs} traces to {out}")


def cmd_run(args) -> None:
    configs, decided = build_configs(args)
    if len(configs) != 1:
        raise UsageError(f"preset matches several variants ({', '.join(configs)}); use --variant, --scheme or "
                         "--topology, or the batch subcommand")
    name, cfg = next(iter(configs.items()))
    out = _out(args, name)
    res = run(cfg)
    write_run(res, out, with_trace=args.save_trace, decided=decided)
    print(f"wrote {out}")


def cmd_batch(args) -> None:
    configs, decided = build_configs(args)
    out = _out(args, args.preset or Path(args.config).stem)
    res = batch(configs, args.runs, args.seed, out, decided, workers=args.workers, keep=False)
    means = {k: mean_series(v) for k, v in res.items()}
    final = {k: max(m.items(), key=lambda kv: (kv[0][1] == "hit_ratio" and kv[0][2] == "all", kv[0][0]))[1]
             for k, m in means.items() if m}
    for k, v in final.items():
        print(f"{k}: final hit ratio {v:.4f}")
    print(f"wrote {args.runs} run directories and mean_metrics.csv to {out}")


def _run_dirs(root: Path) -> list[Path]:
    dirs = sorted(p.parent for p in root.rglob("metrics.csv"))
    if not dirs:
        raise FileNotFoundError(f"no run directories (with metrics.csv) under {root}")
    return dirs


def _read_rows(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        next(r)
        return list(r)


def cmd_report(args) -> None:
    root = Path(args.input)
    if not root.is_dir():
        raise FileNotFoundError(f"input directory not found: {root}")
    out = Path(args.out) if args.out else root
    out.mkdir(parents=True, exist_ok=True)
    dirs = _run_dirs(root)
    for d in dirs:
        for name in ("metrics.csv", "ccdf.csv", "exchanges.csv", "taub.csv", "locations.csv"):
            if (d / name).exists():
                validate_csv(d / name)
    by_variant: dict[str, list[Path]] = {}
    for d in dirs:
        by_variant.setdefault(d.name, []).append(d)

    # pointwise means of the time series
    means = {}
    for variant, ds in by_variant.items():
        acc: dict[tuple[float, str, str], list[float]] = {}
        for d in ds:
            for t, m, s, v in _read_rows(d / "metrics.csv"):
                acc.setdefault((float(t), m, s), []).append(float(v))
        means[variant] = {k: sum(v) / len(v) for k, v in acc.items()}
    write_mean_metrics(out / "mean_metrics.csv", means)

    # CCDF means per source and node/location KS distances
    with open(out / "ccdf_mean.csv", "w") as fc, open(out / "ks.csv", "w") as fk:
        fc.write("variant,source,degree,probability\n")
        fk.write("variant,weighted,ks_distance\n")
        for variant, ds in by_variant.items():
            curves: dict[str, list[list[tuple[float, float]]]] = {}
            for d in ds:
                per: dict[str, list[tuple[float, float]]] = {}
                for deg, p, src in _read_rows(d / "ccdf.csv"):
                    per.setdefault(src, []).append((float(deg), float(p)))
                for src, c in per.items():
                    curves.setdefault(src, []).append(c)
            avg = {src: mean_ccdf(cs) for src, cs in curves.items()}
            for src in sorted(avg):
                fc.writelines(f"{variant},{src},{d!r},{p!r}\n" for d, p in avg[src])
            for w, sfx in ((0, ""), (1, "_weighted")):
                if "nodes" + sfx in avg and "locations" + sfx in avg:
                    fk.write(f"{variant},{w},{ks_distance(avg['nodes' + sfx], avg['locations' + sfx])!r}\n")

    written = ["mean_metrics.csv", "ccdf_mean.csv", "ks.csv"]
    if args.tau_b:
        groups: dict[tuple[str, str], list[float]] = {}
        for d in dirs:
            cfg = json.loads((d / "config.json").read_text())
            if cfg.get("scheme") != COGNITIVE or not (d / "taub.csv").exists():
                continue
            vals = [float(r[1]) for r in _read_rows(d / "taub.csv") if not math.isnan(float(r[1]))]
            if vals:
                mode = "dynamic" if cfg.get("dynamic_locations") else "static"
                groups.setdefault((cfg["topology"], mode), []).append(sum(vals) / len(vals))
        order = {t: i for i, t in enumerate(TOPOLOGIES)}
        with open(out / "taub_summary.csv", "w") as fh:
            fh.write("topology,mode,tau_b_mean,tau_b_std,n_runs\n")
            for (topo, mode) in sorted(groups, key=lambda k: (k[1] != "dynamic", order.get(k[0], 99), k[0])):
                v = groups[(topo, mode)]
                mu = sum(v) / len(v)
                sd = math.sqrt(sum((x - mu) ** 2 for x in v) / (len(v) - 1)) if len(v) > 1 else 0.0
                fh.write(f"{topo},{mode},{mu!r},{sd!r},{len(v)}\n")
        written.append("taub_summary.csv")
    for name in written:
        schema = _mean_metrics_schema(out / name) if name == "mean_metrics.csv" else None
        validate_csv(out / name, schema)
    print(f"report over {len(dirs)} runs written to {out}: {', '.join(written)}")


# -- parser -----------------------------------------------------------------------

def _add_config_flags(p, with_variant=True):
    p.add_argument("--config", help="SimConfig JSON file")
    p.add_argument("--preset", help=f"named experiment ({', '.join(sorted(PRESETS))})")
    if with_variant:
        p.add_argument("--variant", help="preset variant name")
    p.add_argument("--scheme", choices=[COGNITIVE, EPIDEMIC])
    p.add_argument("--topology", choices=sorted(TOPOLOGIES))
    p.add_argument("--dynamic-locations", action="store_true", help="location SANs learn from interactions")
    p.add_argument("--communities", action="store_true", help="use the community mobility layout")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (default under $COGNETS_OUT or ./runs)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cognets", description="Cognitive vs epidemic dissemination simulator.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="write a synthetic venue review corpus")
    p.add_argument("--venues", type=int, default=10)
    p.add_argument("--tags", type=int, default=221, help="extractable terms per venue")
    p.add_argument("--shared-fraction", type=float, default=0.1)
    p.add_argument("--zipf-s", type=float, default=1.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("extract-tags", help="TF-IDF tag profiles from a corpus directory")
    p.add_argument("--in", dest="input", required=True, help="corpus directory, one text file per venue")
    p.add_argument("--max-tags", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_extract_tags)

    p = sub.add_parser("gen-traces", help="write mobility traces for a config or preset")
    _add_config_flags(p)
    p.add_argument("--runs", type=int, default=1)
    p.set_defaults(func=cmd_gen_traces)

    p = sub.add_parser("run", help="one simulation run")
    _add_config_flags(p)
    p.add_argument("--save-trace", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("batch", help="repeated runs of every selected variant")
    _add_config_flags(p, with_variant=True)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("report", help="aggregate run directories into plot-ready CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--tau-b", action="store_true", help="also write the tau-b summary per topology")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    for name in ("runs", "workers", "venues", "tags"):
        if getattr(args, name, 1) is not None and getattr(args, name, 1) < 1:
            ap.print_usage(sys.stderr)
            print(f"cognets: error: --{name} must be >= 1", file=sys.stderr)
            return 2
    try:
        args.func(args)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"cognets: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"cognets: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
