"""Command-line entry point: ``kbresolve <command> [options]``.

Exit status: 0 on success, 1 on a processing error, 2 on bad usage, 3 for a
missing input file, 4 for an unparsable config file and 5 for a parameter
outside its valid range.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

from .baseline import grid_search
from .blocking import ConfigError, block_stats, build_blocks
from .config import SWEEP_RANGES, ConfigFileError, RunConfig, load_config_file, sweep_configs
from .evaluation import rule_ablation, score_matches
from .kb import load_ground_truth, load_kb, write_ground_truth, write_triples
from .matching import MatchSet, build_stage, match_graph, run_pipeline
from .stats import top_k_name_attributes
from .synthetic import SyntheticConfig, generate

logger = logging.getLogger("kbresolve")

EXIT_ERROR, EXIT_USAGE, EXIT_MISSING, EXIT_BAD_CONFIG, EXIT_RANGE = 1, 2, 3, 4, 5


def _common(p: argparse.ArgumentParser, truth_required: bool) -> None:
    g = p.add_argument_group("inputs and run options")
    g.add_argument("--config", help="flat 'key = value' file; flags given here win")
    g.add_argument("--kb1", help="triples of the first KB")
    g.add_argument("--kb2", help="triples of the second KB")
    g.add_argument("--truth", help="ground-truth pairs" + (" (required)" if truth_required else ""))
    g.add_argument("--partial-truth", action="store_const", const=True, default=None,
                   help="ground truth covers only some entity types; ignore matches outside it")
    g.add_argument("--k", type=int, dest="k", help="name attributes per KB (default 2)")
    g.add_argument("--big-k", type=int, dest="K", help="candidates per entity and evidence (default 15)")
    g.add_argument("--n", type=int, dest="N", help="top relations per entity (default 3)")
    g.add_argument("--theta", type=float, help="value weight in rank aggregation (default 0.6)")
    g.add_argument("--purge-fraction", type=float, dest="purge_fraction",
                   help="comparison budget of block purging, as a fraction of |E1|x|E2| (default 0.01)")
    g.add_argument("--workers", type=int, help="worker processes; 0 means all available (default 1)")
    g.add_argument("--out", help="output directory (default ./out)")
    g.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kbresolve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("match", help="run the full matching pipeline")
    _common(p, truth_required=False)
    p.add_argument("--dump-graph", action="store_true", help="also write the pruned blocking graph")

    p = sub.add_parser("bsl", help="grid search of the value-only baseline")
    _common(p, truth_required=True)

    p = sub.add_parser("blocks", help="block collection statistics")
    p.add_argument("action", nargs="?", default="stats", choices=["stats"])
    _common(p, truth_required=False)

    p = sub.add_parser("ablate", help="evaluate rule subsets")
    _common(p, truth_required=True)

    p = sub.add_parser("sweep", help="sensitivity analysis over k, K, N and theta")
    _common(p, truth_required=True)
    p.add_argument("--param", action="append", choices=sorted(SWEEP_RANGES),
                   help="parameter to vary, others fixed (repeatable; default: all, one at a time)")
    p.add_argument("--full-grid", action="store_true", help="evaluate the full cartesian product")

    p = sub.add_parser("synth", help="generate a synthetic KB pair with ground truth")
    p.add_argument("--n-per-kb", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nearly-similar-fraction", type=float, default=SyntheticConfig.nearly_similar_fraction)
    p.add_argument("--out", default="out")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


_FLAG_KEYS = ("kb1", "kb2", "truth", "out", "workers", "partial_truth",
              "k", "K", "N", "theta", "purge_fraction")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = load_config_file(args.config) if getattr(args, "config", None) else {}
    for key in _FLAG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return RunConfig.from_values(values)


def _check_inputs(cfg: RunConfig, need_truth: bool, parser: argparse.ArgumentParser) -> None:
    for name, path in cfg.required_inputs(need_truth):
        if path is None:
            parser.error(f"--{name} is required")
        if not Path(path).is_file():
            raise FileNotFoundError(f"{name} file not found: {path}")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load(cfg: RunConfig):
    t0 = time.perf_counter()
    kb1, kb2 = load_kb(cfg.kb1, 1), load_kb(cfg.kb2, 2)
    truth = load_ground_truth(cfg.truth) if cfg.truth else None
    logger.info("loaded %r and %r in %.2fs", kb1, kb2, time.perf_counter() - t0)
    return kb1, kb2, truth


def cmd_match(cfg: RunConfig, args, out: Path) -> int:
    kb1, kb2, truth = _load(cfg)
    res = run_pipeline(kb1, kb2, cfg.matcher, workers=cfg.workers)
    res.matches.write(out / "matches.tsv")
    (out / "rejected.tsv").write_text(MatchSet(res.matches.filtered).to_tsv(), encoding="utf-8")
    timings = {k: round(v, 4) for k, v in res.timings.items()}
    _write_json(out / "timings.json", timings)
    report = {"config": cfg.as_dict(), "matches": len(res.matches),
              "rejected_by_reciprocity": len(res.matches.filtered),
              "graph_edges": res.graph.num_edges(), "name_attributes": list(res.name_attrs)}
    if truth is not None:
        ev = score_matches(res.matches, truth, res.timings, cfg.partial_truth)
        report["evaluation"] = ev.as_dict()
        print(ev.table("match"))
    else:
        report["timings"] = timings
        print(f"{len(res.matches)} matches written to {out / 'matches.tsv'}")
    _write_json(out / "report.json", report)
    if args.dump_graph:
        res.graph.dump(out / "graph.tsv", kb1, kb2)
    return 0


def cmd_bsl(cfg: RunConfig, args, out: Path) -> int:
    kb1, kb2, truth = _load(cfg)
    t0 = time.perf_counter()
    result = grid_search(kb1, kb2, truth, k=cfg.matcher.k, purge_fraction=cfg.matcher.purge_fraction,
                         workers=cfg.workers, partial_truth=cfg.partial_truth)
    elapsed = time.perf_counter() - t0
    result.write_csv(out / "bsl_grid.csv")
    best = asdict(result.best)
    _write_json(out / "bsl_report.json", {"configurations": len(result.rows),
                                          "candidate_pairs": result.candidate_pairs,
                                          "best": best, "seconds": round(elapsed, 4)})
    print(f"{len(result.rows)} configurations, best: n={best['ngram_n']} {best['weighting']} "
          f"{best['similarity']} t={best['threshold']:.2f}  P {best['precision']:.2f} "
          f"R {best['recall']:.2f} F1 {best['f1']:.2f}")
    return 0


def cmd_blocks(cfg: RunConfig, args, out: Path) -> int:
    kb1, kb2, truth = _load(cfg)
    m = cfg.matcher
    names1 = top_k_name_attributes(kb1, m.k, m.name_discriminability)
    names2 = top_k_name_attributes(kb2, m.k, m.name_discriminability)
    blocks = build_blocks(kb1, kb2, names1, names2, m.purge_fraction)
    collections = {"name_blocks": list(blocks.name_blocks.values()),
                   "token_blocks": list(blocks.token_blocks.values()),
                   "combined": blocks.all_blocks()}
    report = {"entities": [len(kb1), len(kb2)], "purged_token_blocks": len(blocks.purged_keys),
              "name_attributes": [names1, names2]}
    for name, bl in collections.items():
        if truth is not None:
            report[name] = block_stats(bl, truth, kb1, kb2).as_dict()
        else:
            report[name] = {"blocks": len(bl), "comparisons": sum(b.comparisons for b in bl)}
        d = report[name]
        extra = f"  recall {d['recall']:.2f}  precision {d['precision']:.4f}" if truth is not None else ""
        print(f"{name:12s} |B| {d['blocks']:8d}  comparisons {d['comparisons']:12d}{extra}")
    _write_json(out / "blocks.json", report)
    return 0


def cmd_ablate(cfg: RunConfig, args, out: Path) -> int:
    kb1, kb2, truth = _load(cfg)
    reports = rule_ablation(kb1, kb2, cfg.matcher, truth, cfg.workers, cfg.partial_truth)
    for name, rep in reports.items():
        print(f"{name:13s} P {rep.precision:6.2f}  R {rep.recall:6.2f}  F1 {rep.f1:6.2f}")
    _write_json(out / "ablation.json", {"config": cfg.as_dict(),
                                        "reports": {k: v.as_dict() for k, v in reports.items()}})
    return 0


def cmd_sweep(cfg: RunConfig, args, out: Path) -> int:
    kb1, kb2, truth = _load(cfg)
    configs = sweep_configs(cfg.matcher, args.param or list(SWEEP_RANGES), args.full_grid)
    rows = []
    graph_key, graph, timings = None, None, {}
    # configurations differing only in theta share one graph
    for mc in sorted(set(configs), key=lambda c: (c.k, c.K, c.N, c.theta)):
        key = replace(mc, theta=0.5)
        if key != graph_key:
            timings = {}
            _, _, _, graph = build_stage(kb1, kb2, mc, cfg.workers, timings)
            graph_key = key
        t = dict(timings)
        ms = match_graph(graph, kb1, kb2, mc.theta, workers=cfg.workers, timings=t)
        ev = score_matches(ms, truth, t, cfg.partial_truth)
        rows.append({"k": mc.k, "K": mc.K, "N": mc.N, "theta": mc.theta,
                     "precision": round(ev.precision, 2), "recall": round(ev.recall, 2),
                     "f1": round(ev.f1, 2), "matches": len(ms)})
    by_cfg = {(r["k"], r["K"], r["N"], r["theta"]): r for r in rows}
    ordered = []
    for mc in configs:
        r = by_cfg[(mc.k, mc.K, mc.N, mc.theta)]
        if r not in ordered:
            ordered.append(r)
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=list(ordered[0]))
        w.writeheader()
        w.writerows(ordered)
    _write_json(out / "sweep.json", {"base": cfg.as_dict(), "full_grid": args.full_grid, "runs": ordered})
    for r in ordered:
        print(f"k={r['k']} K={r['K']:2d} N={r['N']} theta={r['theta']:.1f}  "
              f"P {r['precision']:6.2f}  R {r['recall']:6.2f}  F1 {r['f1']:6.2f}")
    return 0


def cmd_synth(args, out: Path) -> int:
    if args.n_per_kb < 1:
        raise ConfigError(f"--n-per-kb must be positive, got {args.n_per_kb}")
    if not 0.0 <= args.nearly_similar_fraction <= 1.0:
        raise ConfigError("--nearly-similar-fraction must be in [0, 1]")
    kb1, kb2, truth = generate(SyntheticConfig(n_per_kb=args.n_per_kb, seed=args.seed,
                                               nearly_similar_fraction=args.nearly_similar_fraction))
    write_triples(kb1, out / "kb1.tsv")
    write_triples(kb2, out / "kb2.tsv")
    write_ground_truth(truth, out / "truth.tsv")
    print(f"wrote {len(kb1)} + {len(kb2)} entities and {len(truth)} matches to {out}")
    return 0


COMMANDS = {"match": cmd_match, "bsl": cmd_bsl, "blocks": cmd_blocks, "ablate": cmd_ablate, "sweep": cmd_sweep}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        if args.command == "synth":
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            return cmd_synth(args, out)
        cfg = resolve_config(args)
        _check_inputs(cfg, args.command in ("bsl", "ablate", "sweep"), parser)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args, out)
    except FileNotFoundError as exc:
        print(f"kbresolve: missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except ConfigFileError as exc:
        print(f"kbresolve: unparsable config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except ConfigError as exc:
        print(f"kbresolve: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except Exception as exc:  # noqa: BLE001 - any module failure maps to a non-zero status
        logger.debug("failure", exc_info=True)
        print(f"kbresolve: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
