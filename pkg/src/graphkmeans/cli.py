"""Command-line interface: ``graphkmeans {dist,mean,cluster,eval,bench}``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from typing import Sequence

import numpy as np

from . import graphio
from .clustering import DROP, ELKAN, REPAIR_FARTHEST, STD, ClusterConfig, best_of_runs, run_kmeans
from .errors import ConfigError, GraphKMeansError, ParseError, ScaleError
from .evaluation import classification_accuracy, cluster_error, evaluate, pairwise_distances, silhouette_index
from .graphio import DatasetStats
from .matching import EXACT, GA, DistanceOracle, GaParams
from .mean import brute_force_mean, iam_mean, set_mean, ssd

EXIT_OK, EXIT_CONFIG, EXIT_PARSE, EXIT_SCALE, EXIT_OTHER = 0, 2, 3, 4, 1
THREADS_ENV = "GRAPHKMEANS_THREADS"


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def _k_list(text: str) -> list[int]:
    try:
        ks = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not ks or min(ks) < 1:
        raise argparse.ArgumentTypeError("k values must be positive")
    return ks


def _add_matcher(p: argparse.ArgumentParser) -> None:
    p.add_argument("--matcher", choices=(EXACT, GA, "auto"), default="auto",
                   help="graph matcher; auto picks exact up to --exact-max-order, GA above")
    p.add_argument("--exact-max-order", type=int, default=10, metavar="N")
    p.add_argument("--force", action="store_true", help="allow the exact matcher above --exact-max-order")
    p.add_argument("--memo", action="store_true", help="cache distances between identified graphs")


def _add_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("text", "json"), default="text")


def _add_run(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--no-improve", type=int, default=3, metavar="N")
    p.add_argument("--max-iters", type=int, default=100, metavar="N")
    p.add_argument("--empty-policy", choices=(REPAIR_FARTHEST, DROP), default=REPAIR_FARTHEST)
    p.add_argument("--threads", type=int, default=None, help=f"worker cap (default ${THREADS_ENV} or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphkmeans", description="k-means clustering of attributed graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="distance and optimal alignment of two graphs")
    p.add_argument("dataset")
    p.add_argument("id_a")
    p.add_argument("id_b")
    p.add_argument("--compare", action="store_true", help="also run the GA matcher and print its gap")
    _add_matcher(p)
    _add_format(p)

    p = sub.add_parser("mean", help="sample mean of (a subset of) a dataset")
    p.add_argument("dataset")
    p.add_argument("--ids", nargs="+", help="graph ids to average (default: all)")
    p.add_argument("--method", choices=("iam", "set", "brute"), default="iam")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the mean graph as a one-graph dataset file")
    _add_matcher(p)
    _add_format(p)

    p = sub.add_parser("cluster", help="run k-means and write a manifest")
    p.add_argument("dataset")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--algo", choices=(STD, ELKAN), default=ELKAN)
    p.add_argument("--verify", action="store_true", help="check every Elkan bound against true distances")
    p.add_argument("--manifest", help="manifest output path")
    p.add_argument("--baseline", help="manifest of a baseline run for speedup figures")
    p.add_argument("--round-centroids", type=int, default=None, metavar="DIGITS",
                   help="round exported centroid attributes (breaks bit-exact recomputation)")
    _add_run(p)
    _add_matcher(p)
    _add_format(p)

    p = sub.add_parser("eval", help="recompute a manifest's report from its dataset")
    p.add_argument("manifest")
    p.add_argument("--dataset", help="dataset path (default: path recorded in the manifest)")
    p.add_argument("--baseline", help="baseline manifest for speedup figures")
    _add_matcher(p)
    _add_format(p)

    p = sub.add_parser("bench", help="compare std and elkan over several k")
    p.add_argument("dataset")
    p.add_argument("--k-list", type=_k_list, required=True, metavar="K1,K2,...")
    _add_run(p)
    _add_matcher(p)
    _add_format(p)
    return parser


def resolve_matcher(args, max_order: int) -> str:
    if args.exact_max_order < 1:
        raise ConfigError("--exact-max-order must be positive")
    if args.matcher == "auto":
        return EXACT if max_order <= args.exact_max_order else GA
    if args.matcher == EXACT and max_order > args.exact_max_order and not args.force:
        raise ScaleError(f"exact matching refused for order {max_order} > --exact-max-order "
                         f"{args.exact_max_order}; use --force or --matcher ga")
    return args.matcher


def _oracle(kind: str, args, padding: int | None = None) -> DistanceOracle:
    return DistanceOracle(kind, GaParams(), memoize=getattr(args, "memo", False), padding=padding)


def _config(args, k: int, matcher: str) -> ClusterConfig:
    threads = args.threads if args.threads is not None else _default_threads()
    if args.runs < 1:
        raise ConfigError("--runs must be >= 1")
    return ClusterConfig(k=k, max_iters=args.max_iters, no_improve_limit=args.no_improve, matcher=matcher,
                         run_seed=args.seed, empty_cluster_policy=args.empty_policy,
                         verification_mode=getattr(args, "verify", False), threads=threads)


def _emit(args, payload: dict, lines: Sequence[str], out) -> None:
    if args.format == "json":
        out.write(json.dumps(payload, indent=2) + "\n")
    else:
        out.write("\n".join(lines) + "\n")


def _fmt(v, spec=".6g") -> str:
    return "n/a" if v is None else format(v, spec)


def cmd_dist(args, out) -> int:
    ds = graphio.load_dataset(args.dataset)
    a, b = ds.by_id(args.id_a), ds.by_id(args.id_b)
    # measure in the dataset's common space so distances agree with clustering
    padding = max(g.order for g in ds.graphs)
    kind = resolve_matcher(args, padding)
    oracle = _oracle(kind, args, padding)
    al = oracle.align(a, b)
    payload = {"id_a": args.id_a, "id_b": args.id_b, "matcher": kind, "padding": padding, "distance": al.distance,
               "permutation": list(al.permutation), "exact": al.exact, "calls": oracle.calls}
    lines = [f"distance     {al.distance!r}", f"permutation  {' '.join(map(str, al.permutation))}",
             f"exact        {al.exact}", f"calls        {oracle.calls}"]
    if args.compare:
        ga = DistanceOracle(GA, padding=padding).align(a, b)
        payload["ga_distance"] = ga.distance
        payload["ga_gap"] = ga.distance - al.distance
        lines += [f"ga distance  {ga.distance!r}", f"ga gap       {ga.distance - al.distance:.6g}"]
    _emit(args, payload, lines, out)
    return EXIT_OK


def cmd_mean(args, out) -> int:
    ds = graphio.load_dataset(args.dataset)
    sample = [ds.by_id(i) for i in args.ids] if args.ids else ds.graphs
    kind = resolve_matcher(args, max(g.order for g in sample))
    oracle = _oracle(kind, args)
    alignments = None
    if args.method == "iam":
        res = iam_mean(sample, seed=args.seed, oracle=oracle, compute_ssd=False)
        mean, alignments = res.mean, res.alignments_used
    elif args.method == "set":
        mean = set_mean(sample, oracle)
    else:
        mean = brute_force_mean(sample).mean
    value = ssd(mean, sample, oracle.clone())
    payload = {"method": args.method, "matcher": kind, "graphs": len(sample), "order": mean.order,
               "ssd": value, "alignments": alignments, "calls": oracle.calls}
    if args.method == "set":
        payload["member"] = mean.id
    lines = [f"method       {args.method}", f"graphs       {len(sample)}", f"mean order   {mean.order}",
             f"F (SSD)      {value!r}", f"calls        {oracle.calls}"]
    if args.out:
        graphio.write_dataset(args.out, [mean.with_meta("mean", None)], transforms_applied=ds.header["transforms_applied"])
        lines.append(f"written      {args.out}")
    _emit(args, payload, lines, out)
    return EXIT_OK


def _report_lines(report, result) -> list[str]:
    lines = [
        f"algorithm    {result.algorithm}",
        f"k            {result.k}",
        f"seed         {result.seed}",
        f"error        {report.error!r}",
        f"accuracy     {_fmt(report.accuracy, '.4f')}",
        f"silhouette   {_fmt(report.silhouette, '.4f')}",
        f"iterations   {report.iterations}",
        f"matchings    {report.matchings_total} total, {report.matchings_per_iteration:.1f} per iteration",
    ]
    if report.speedup_total is not None:
        lines.append(f"speedup      {_fmt(report.speedup_per_iteration, '.2f')} per iteration, "
                     f"{report.speedup_total:.2f} total")
    return lines


def _apply_baseline(report, manifest: dict, baseline_path: str | None) -> None:
    if baseline_path:
        per_iter, total = graphio.manifest_speedup(manifest, graphio.load_manifest(baseline_path))
        report.speedup_per_iteration, report.speedup_total = per_iter, total


def cmd_cluster(args, out) -> int:
    ds = graphio.load_dataset(args.dataset)
    kind = resolve_matcher(args, max(g.order for g in ds.graphs))
    if args.verify and kind != EXACT:
        raise ConfigError("--verify needs the exact matcher; bounds are not guaranteed under GA")
    config = _config(args, args.k, kind)
    config.validate(len(ds.graphs))
    best, _ = best_of_runs(ds.graphs, config, args.algo, args.runs, lambda: _oracle(kind, args))
    distances = pairwise_distances(ds.graphs, _oracle(kind, args)) if best.k >= 2 else None
    report = evaluate(best, ds.graphs, distances=distances)
    manifest = graphio.build_manifest(best, report, config, args.dataset, runs=args.runs,
                                      matcher={"kind": kind, "memo": args.memo}, round_digits=args.round_centroids)
    _apply_baseline(report, manifest, args.baseline)
    manifest["report"] = report.as_dict()
    if args.manifest:
        graphio.save_manifest(manifest, args.manifest)
    lines = _report_lines(report, best)
    if best.verification is not None:
        lines.append(f"verification {best.verification.checks} checks, {len(best.verification.violations)} violations")
    if args.manifest:
        lines.append(f"manifest     {args.manifest}")
    _emit(args, manifest, lines, out)
    if best.verification is not None and best.verification.violations:
        return EXIT_OTHER
    return EXIT_OK


def cmd_eval(args, out) -> int:
    manifest = graphio.load_manifest(args.manifest)
    path = args.dataset or (manifest.get("dataset") or {}).get("path")
    if not path:
        raise ConfigError("manifest records no dataset; pass --dataset")
    ds = graphio.load_dataset(path)
    kind = manifest["config"]["matcher"]["kind"]
    assignment = np.array(manifest["result"]["assignment"], dtype=int)
    if assignment.shape[0] != len(ds.graphs):
        raise ConfigError("manifest assignment does not match the dataset size")
    centroids = graphio.manifest_centroids(manifest)
    oracle = _oracle(kind, args)
    error = cluster_error(assignment, sample=ds.graphs, centroids=centroids, oracle=oracle)
    labels = [g.label for g in ds.graphs]
    accuracy = classification_accuracy(assignment, labels) if all(l is not None for l in labels) else None
    sil = None
    if len(centroids) >= 2 and len(np.unique(assignment)) == len(centroids):
        sil = silhouette_index(assignment, ds.graphs, oracle.clone()).index
    stored = manifest.get("report") or {}
    payload = {"error": error, "accuracy": accuracy, "silhouette": sil, "stored": stored,
               "matches_stored": {"error": error == stored.get("error"), "accuracy": accuracy == stored.get("accuracy"),
                                  "silhouette": sil == stored.get("silhouette")}}
    lines = [f"error        {error!r}  (stored {stored.get('error')!r})",
             f"accuracy     {_fmt(accuracy, '.4f')}  (stored {_fmt(stored.get('accuracy'), '.4f')})",
             f"silhouette   {_fmt(sil, '.4f')}  (stored {_fmt(stored.get('silhouette'), '.4f')})",
             f"iterations   {manifest['result']['iterations']}",
             f"matchings    {manifest['result']['matchings']['total']}"]
    if args.baseline:
        per_iter, total = graphio.manifest_speedup(manifest, graphio.load_manifest(args.baseline))
        payload["speedup_per_iteration"], payload["speedup_total"] = per_iter, total
        lines.append(f"speedup      {per_iter:.2f} per iteration, {total:.2f} total")
    _emit(args, payload, lines, out)
    return EXIT_OK


BENCH_COLUMNS = ("k", "algo", "error", "accuracy", "silhouette", "iterations",
                 "matchings/iter", "matchings total", "speedup/iter", "speedup total")


def _mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def cmd_bench(args, out) -> int:
    ds = graphio.load_dataset(args.dataset)
    kind = resolve_matcher(args, max(g.order for g in ds.graphs))
    for k in args.k_list:
        _config(args, k, kind).validate(len(ds.graphs))
    distances = pairwise_distances(ds.graphs, _oracle(kind, args))
    rows = []
    for k in args.k_list:
        summary = {}
        for algo in (STD, ELKAN):
            reports = []
            for r in range(args.runs):
                config = replace(_config(args, k, kind), run_seed=args.seed + r)
                result = run_kmeans(ds.graphs, config, algo, _oracle(kind, args))
                reports.append(evaluate(result, ds.graphs, distances=distances))
            summary[algo] = {
                "error": _mean(r.error for r in reports),
                "accuracy": _mean(r.accuracy for r in reports),
                "silhouette": _mean(r.silhouette for r in reports),
                "iterations": _mean(r.iterations for r in reports),
                "matchings_per_iteration": _mean(r.matchings_per_iteration for r in reports),
                "matchings_total": _mean(r.matchings_total for r in reports),
            }
        std, elk = summary[STD], summary[ELKAN]
        for algo, s in ((STD, std), (ELKAN, elk)):
            row = {"k": k, "algo": algo, **s, "speedup_per_iteration": None, "speedup_total": None}
            if algo == ELKAN:
                row["speedup_per_iteration"] = std["matchings_per_iteration"] / elk["matchings_per_iteration"]
                row["speedup_total"] = std["matchings_total"] / elk["matchings_total"]
            rows.append(row)
    stats = ds.stats
    lines = [DatasetStats.header(), stats.row(os.path.basename(args.dataset)), "",
             "  ".join(f"{c:>15}" for c in BENCH_COLUMNS)]
    for row in rows:
        cells = [row["k"], row["algo"], _fmt(row["error"], ".4g"), _fmt(row["accuracy"], ".3f"),
                 _fmt(row["silhouette"], ".3f"), _fmt(row["iterations"], ".1f"),
                 _fmt(row["matchings_per_iteration"], ".4g"), _fmt(row["matchings_total"], ".4g"),
                 _fmt(row["speedup_per_iteration"], ".2f"), _fmt(row["speedup_total"], ".2f")]
        lines.append("  ".join(f"{str(c):>15}" for c in cells))
    payload = {"dataset": args.dataset, "matcher": kind, "runs": args.runs, "seed": args.seed, "rows": rows}
    _emit(args, payload, lines, out)
    return EXIT_OK


COMMANDS = {"dist": cmd_dist, "mean": cmd_mean, "cluster": cmd_cluster, "eval": cmd_eval, "bench": cmd_bench}


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except ConfigError as exc:
        print(f"graphkmeans: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, OSError) as exc:
        print(f"graphkmeans: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ScaleError as exc:
        print(f"graphkmeans: error: {exc}", file=sys.stderr)
        return EXIT_SCALE
    except GraphKMeansError as exc:
        print(f"graphkmeans: error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
