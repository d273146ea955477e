"""Command-line entry point: ``smmpipe run | evaluate | cache``.

Exit codes: 0 success, 1 config error, 2 data error, 3 remote/backend failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import itertools
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .backends import PromptedBackend, ResponseCache
from .config import FORMATS, load_config
from .corpus import SPLITS, LabelSpace, TASK_LABELS, file_checksum, load_dataset
from .errors import ConfigInvalid, DataError, SmmpipeError
from .evaluation import DEFAULT_BETA, compare_systems, error_analysis, evaluate
from .pipelines import run_pipeline
from .predictions import load_predictions, write_predictions

logger = logging.getLogger("smmpipe")


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


def write_reports(out_dir, gold, pred_sets, beta=DEFAULT_BETA, formats=FORMATS, figures=True,
                  pairs=None):
    """Metric reports per prediction set, a comparison table for two or more
    sets, and a disagreement report per requested pair. Returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(stem, obj):
        if "json" in formats:
            written.append(out_dir / f"{stem}.json")
            written[-1].write_text(obj.to_json(), encoding="utf-8")
        if "md" in formats:
            written.append(out_dir / f"{stem}.md")
            written[-1].write_text(obj.to_markdown(), encoding="utf-8")

    if figures:
        from . import plotting

    reports = []
    by_name = {}
    for ps in pred_sets:
        report = evaluate(gold, ps, beta=beta, name=ps.pipeline_name)
        reports.append(report)
        by_name[ps.pipeline_name] = ps
        stem = _safe(ps.pipeline_name) + ".metrics"
        emit(stem, report)
        if figures:
            written.append(plotting.plot_confusion(report, out_dir / f"{_safe(ps.pipeline_name)}.confusion.png"))

    if len(reports) >= 2:
        table = compare_systems(reports)
        emit("comparison", table)
        if figures:
            written.append(plotting.plot_comparison(table, out_dir / "comparison.png"))

    if pairs is None:
        pairs = list(itertools.combinations(by_name, 2)) if len(by_name) >= 2 else []
    for a, b in pairs:
        if a not in by_name or b not in by_name:
            missing = a if a not in by_name else b
            raise ConfigInvalid("pair", f"unknown prediction set {missing!r}")
        report = error_analysis(gold, by_name[a], by_name[b], names=(a, b))
        stem = f"disagreement_{_safe(a)}__{_safe(b)}"
        emit(stem, report)
        if figures:
            written.append(plotting.plot_disagreement(report, out_dir / f"{stem}.png"))
    return written


def run_experiment(cfg, split="dev", parallelism=None, cache_dir=None, out=None, transports=None):
    """Execute every configured pipeline over one split.

    Returns ``(run_dir, manifest)``. ``transports`` maps provider names to
    transport callables and exists so tests can instrument remote traffic.
    """
    started = time.perf_counter()
    started_at = dt.datetime.now(dt.timezone.utc)
    parallelism = parallelism or cfg.parallelism
    data_path = cfg.dataset_path(split)
    ds = load_dataset(data_path, label_space=cfg.label_space, split=split)

    cache = ResponseCache(Path(cache_dir) if cache_dir else cfg.cache_dir)
    cache_before = cache.stats()
    backends = cfg.build_backends(cache=cache, transports=transports)
    pipelines = cfg.build_pipelines(backends)

    root = Path(out) if out else cfg.output_dir
    stamp = started_at.strftime("%Y%m%dT%H%M%S%fZ")
    run_dir = root / f"{cfg.checksum[:12]}-{stamp}"
    run_dir.mkdir(parents=True, exist_ok=False)

    outputs = []
    pred_sets = []
    try:
        for spec in pipelines:
            ps = run_pipeline(spec, ds, parallelism=parallelism, failure_ceiling=cfg.failure_ceiling)
            pred_sets.append(ps)
            outputs.append(write_predictions(ps, run_dir / f"{_safe(spec.name)}.csv"))
            logger.info("pipeline %s: %d predictions", spec.name, len(ps))
        labeled = all(s.gold_label is not None for s in ds) and len(ds) > 0
        if labeled:
            outputs += write_reports(run_dir / "reports", ds, pred_sets, cfg.beta, cfg.formats,
                                     cfg.figures, cfg.pairs or None)
    finally:
        cache.flush()

    cache_after = cache.stats()
    backend_stats = {}
    for name, backend in backends.items():
        entry = {"kind": type(backend).__name__}
        entry.update(backend.counters())
        backend_stats[name] = entry
    remote_calls = sum(b.remote_calls for b in backends.values() if isinstance(b, PromptedBackend))
    manifest = {
        "smmpipe_version": __version__,
        "config": str(cfg.path),
        "config_checksum": cfg.checksum,
        "task": cfg.task_id,
        "split": split,
        "datasets": {split: {"path": str(data_path), "sha256": file_checksum(data_path),
                             "samples": len(ds)}},
        "backends": backend_stats,
        "remote_calls": remote_calls,
        "cache": {
            "dir": str(cache.directory),
            "entries": cache_after["entries"],
            "hits": cache_after["hits"] - cache_before["hits"],
            "misses": cache_after["misses"] - cache_before["misses"],
            "warnings": cache.warnings,
        },
        "parallelism": parallelism,
        "started_at": started_at.isoformat(),
        "wall_clock_seconds": round(time.perf_counter() - started, 3),
        "outputs": [str(Path(p).relative_to(run_dir)) for p in outputs],
    }
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return run_dir, manifest


# commands -------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = load_config(args.config)
    run_dir, manifest = run_experiment(cfg, args.split, args.parallelism, args.cache_dir, args.out)
    print(f"run directory: {run_dir}")
    for p in manifest["outputs"]:
        if p.endswith(".csv"):
            print(f"  predictions: {p}")
    print(f"remote calls: {manifest['remote_calls']}  cache hits: {manifest['cache']['hits']}")
    return 0


def cmd_evaluate(args) -> int:
    space = LabelSpace.for_task(args.task)
    gold = load_dataset(args.gold, label_space=space, split=args.split)
    pred_sets = []
    seen = set()
    for path in args.predictions:
        name = Path(path).stem
        base, k = name, 2
        while name in seen:
            name, k = f"{base}_{k}", k + 1
        seen.add(name)
        pred_sets.append(load_predictions(path, args.task, name))
    pairs = None
    if args.pair:
        pairs = []
        for raw in args.pair:
            parts = raw.split(",")
            if len(parts) != 2:
                raise ConfigInvalid("--pair", f"expected NAME_A,NAME_B, got {raw!r}")
            pairs.append(tuple(p.strip() for p in parts))
    formats = tuple(args.format) if args.format else FORMATS
    written = write_reports(args.out, gold, pred_sets, args.beta, formats, not args.no_figures, pairs)
    for ps in pred_sets:
        rep = evaluate(gold, ps, beta=args.beta, name=ps.pipeline_name)
        head = rep.headline()
        print(f"{ps.pipeline_name}: F1={head['F1']:.3f} P={head['P']:.3f} R={head['R']:.3f} "
              f"macro-F1={rep.macro_f1:.3f} F{args.beta:g}={rep.f_beta:.3f}")
    print(f"wrote {len(written)} files to {args.out}")
    return 0


def cmd_cache(args) -> int:
    cache = ResponseCache(args.cache_dir)
    for w in cache.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.action == "purge":
        if not args.yes:
            print("refusing to purge without --yes", file=sys.stderr)
            return 1
        cache.purge()
        print(f"purged {args.cache_dir}")
        return 0
    stats = cache.stats()
    print(f"entries: {stats['entries']}\nhits: {stats['hits']}\nmisses: {stats['misses']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smmpipe", description="Run and score classification pipelines.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every pipeline in an experiment config")
    run.add_argument("--config", required=True)
    run.add_argument("--split", choices=SPLITS, default="dev")
    run.add_argument("--parallelism", type=int, default=None)
    run.add_argument("--cache-dir", default=None)
    run.add_argument("--out", default=None, help="root for run directories (default: config output_dir)")
    run.set_defaults(func=cmd_run)

    ev = sub.add_parser("evaluate", help="score id,label prediction files against gold labels")
    ev.add_argument("predictions", nargs="+")
    ev.add_argument("--gold", required=True)
    ev.add_argument("--task", required=True, choices=sorted(TASK_LABELS))
    ev.add_argument("--split", choices=SPLITS, default="dev")
    ev.add_argument("--beta", type=float, default=DEFAULT_BETA)
    ev.add_argument("--format", action="append", choices=FORMATS)
    ev.add_argument("--pair", action="append", help="NAME_A,NAME_B (file stems); repeatable")
    ev.add_argument("--out", default="evaluation")
    ev.add_argument("--no-figures", action="store_true")
    ev.set_defaults(func=cmd_evaluate)

    cache = sub.add_parser("cache", help="inspect or purge the response cache")
    cache.add_argument("action", choices=("stats", "purge"))
    cache.add_argument("--cache-dir", required=True)
    cache.add_argument("--yes", action="store_true", help="confirm purge")
    cache.set_defaults(func=cmd_cache)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "parallelism", None) is not None and args.parallelism < 1:
        print("error: [cli] --parallelism must be >= 1", file=sys.stderr)
        return 1
    if getattr(args, "beta", None) is not None and args.beta <= 0:
        print("error: [cli] --beta must be positive", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except SmmpipeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {DataError(f'file not found: {exc.filename}')}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
