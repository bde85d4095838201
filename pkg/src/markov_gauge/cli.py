"""``markov-gauge`` command-line interface.

Exit codes: 0 success, 2 configuration or usage error, 3 data or graph input
error, 4 no candidate passed (``cafs --fail-if-none``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .cafs import cafs, load_candidates
from .checker import CheckConfig, markov_check
from .data import load_csv
from .dsep import parse_variant
from .errors import ConfigError, DataError, GraphError
from .graph import cpdag_of, read_graph, write_graph
from .learners import HC_LAMBDAS, PC_ALPHAS, LearnerSpec, candidate_grid
from .metrics import metrics_row
from .pipeline import load_config, plot_data, plot_rows_to_csv, read_summary, run_pipeline
from .runtime import derive_seed
from .simulate import SimConfig, overlap_experiment, random_dag, simulate_gaussian

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NONE_PASSED = 0, 2, 3, 4


def _write_json(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _write_table(rows: list[dict], path: str, columns=None) -> None:
    columns = list(columns or (rows[0].keys() if rows else []))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow(["" if r.get(c) is None else (repr(r[c]) if isinstance(r[c], float) else r[c])
                        for c in columns])


def _check_config(args) -> CheckConfig:
    return CheckConfig(parse_variant(args.variant, args.seed), args.fraction, args.min_pvalues,
                       args.alpha, args.seed, workers=args.workers)


def _add_check_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--variant", default="ordered-local", help="ordered-local | local | global:K")
    p.add_argument("--fraction", type=float, default=0.5, help="subsample fraction per test")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--min-pvalues", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: $MARKOV_GAUGE_THREADS or 1)")


# --- subcommands ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = SimConfig(args.nodes, args.avg_degree, args.n_train, args.n_test,
                    (args.coef_low, args.coef_high), args.seed)
    dag = random_dag(cfg.n_nodes, cfg.avg_degree, derive_seed(cfg.seed, "graph"))
    train, test = simulate_gaussian(dag, cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_graph(dag, out / "graph.txt")
    write_graph(cpdag_of(dag), out / "cpdag.txt")
    train.to_csv(out / "train.csv")
    test.to_csv(out / "test.csv")
    print(f"wrote {dag.n_nodes} nodes, {dag.edge_count} edges, "
          f"{train.n_rows}+{test.n_rows} rows to {out}")
    return EXIT_OK


def cmd_learn(args) -> int:
    d = load_csv(args.data)
    specs = []
    if args.pc_alphas:
        specs.append(LearnerSpec("pc_lite", tuple(args.pc_alphas)))
    if args.hc_lambdas:
        specs.append(LearnerSpec("hill_climb", tuple(args.hc_lambdas)))
    if args.sp_alphas:
        specs.append(LearnerSpec("sp_oracle", tuple(args.sp_alphas)))
    cands = candidate_grid(d, specs, seed=args.seed, restarts=args.restarts)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for c in cands:
        write_graph(c.graph, out / f"{c.id}.txt")
    print(f"wrote {len(cands)} candidates to {out}")
    return EXIT_OK


def cmd_check(args) -> int:
    g = read_graph(args.graph)
    d = load_csv(args.data)
    report = markov_check(g, d, _check_config(args), Path(args.graph).stem)
    _write_json(report.to_dict(include_facts=True), args.out)
    uni = report.uniformity
    summary = f"{report.graph_id}: {report.outcome}"
    if uni is not None:
        summary += f" (p_ad={uni.p_ad:.4g}, n={uni.n})"
    print(summary, file=sys.stderr)
    return EXIT_OK


def cmd_cafs(args) -> int:
    d = load_csv(args.data)
    truth = read_graph(args.truth) if args.truth else None
    cands = load_candidates(args.candidates)
    result = cafs(cands, d, _check_config(args), truth, with_metrics=truth is not None or args.metrics)
    _write_json(result.to_dict(include_facts=False), args.out)
    if args.table:
        rows = result.table()
        columns = ["id", "edges", "p_ad", "ks", "kl_div", "passed"]
        if truth is not None or args.metrics:
            columns += ["bic", "cfi", "nfi"] + (["f1", "shd"] if truth is not None else [])
        columns += ["is_cafs_selected", "is_min_kldiv"]
        _write_table(rows, args.table, columns)
    print(f"selected: {result.selected or 'none'}; min KL: {result.min_kldiv or 'none'}", file=sys.stderr)
    if result.none_passed and args.fail_if_none:
        return EXIT_NONE_PASSED
    return EXIT_OK


def cmd_metrics(args) -> int:
    g = read_graph(args.graph)
    d = load_csv(args.data)
    truth = read_graph(args.truth) if args.truth else None
    _write_json(metrics_row(g, d, truth).to_dict(), args.out)
    return EXIT_OK


def cmd_overlap(args) -> int:
    report = overlap_experiment(args.nodes, args.avg_degree, tuple(args.sample_sizes), args.reps,
                                args.seed, args.fraction)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_table(report.ecdf_rows(), str(out / "ecdf.csv"), ["kind", "N", "condition", "t", "ecdf"])
    _write_json(report.to_dict(), str(out / "ks_table.json"))
    for n, row in report.ks_table("pooled").items():
        cells = ", ".join(f"{k}={v:.4f}" for k, v in row.items())
        print(f"N={n}: {cells}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = load_config(args.config)
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    rows = run_pipeline(cfg, args.out_dir, Path(args.config).read_text())
    print(f"{len(rows)} summary rows written to {Path(args.out_dir) / 'summary.csv'}")
    return EXIT_OK


def cmd_plot_data(args) -> int:
    try:
        rows = plot_data(read_summary(args.summary), args.x, args.y)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    text = plot_rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="markov-gauge",
        description="Markov checks for causal graphs and cross-algorithm frugality search.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="random DAG plus train/test data from a linear-Gaussian SEM")
    p.add_argument("--nodes", type=int, default=25)
    p.add_argument("--avg-degree", type=float, default=5.0)
    p.add_argument("--n-train", type=int, default=500)
    p.add_argument("--n-test", type=int, default=500)
    p.add_argument("--coef-low", type=float, default=0.3)
    p.add_argument("--coef-high", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("learn", help="write one candidate graph per learner grid cell")
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--pc-alphas", type=float, nargs="*", default=list(PC_ALPHAS))
    p.add_argument("--hc-lambdas", type=float, nargs="*", default=list(HC_LAMBDAS))
    p.add_argument("--sp-alphas", type=float, nargs="*", default=[])
    p.add_argument("--restarts", type=int, default=5, help="hill-climb restarts")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("check", help="Markov check of one graph against data")
    p.add_argument("--graph", required=True)
    p.add_argument("--data", required=True)
    _add_check_args(p)
    p.add_argument("--out", default=None, help="report JSON (default: stdout)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("cafs", help="pick the sparsest candidate that passes the Markov check")
    p.add_argument("--data", required=True)
    p.add_argument("--candidates", nargs="+", required=True, help="graph files or directories")
    p.add_argument("--truth", default=None, help="true graph, adds F1 and SHD columns")
    p.add_argument("--metrics", action="store_true", help="add BIC/CFI/NFI columns without a truth")
    _add_check_args(p)
    p.add_argument("--out", default=None, help="result JSON (default: stdout)")
    p.add_argument("--table", default=None, help="per-candidate CSV")
    p.add_argument("--fail-if-none", action="store_true", help="exit 4 when no candidate passes")
    p.set_defaults(func=cmd_cafs)

    p = sub.add_parser("metrics", help="BIC, CFI, NFI and (with --truth) F1 and SHD")
    p.add_argument("--graph", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--truth", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("overlap-experiment", help="sub/orig/new data-overlap comparison")
    p.add_argument("--nodes", type=int, default=25)
    p.add_argument("--avg-degree", type=float, default=5.0)
    p.add_argument("--sample-sizes", type=int, nargs="+", default=[100, 1000])
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("pipeline", help="run a full simulation study from an INI config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("plot-data", help="tidy scatter table from a pipeline summary")
    p.add_argument("--summary", required=True)
    p.add_argument("--x", default="p_ad", help="p_ad | kl_div")
    p.add_argument("--y", default="edges", help="edges | bic | f1 | shd | cfi | nfi")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_plot_data)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, GraphError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
