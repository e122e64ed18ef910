"""Command-line harness: single runs, pairwise comparison, and sweeps.

Exit codes: 0 success, 1 configuration error, 2 runtime error,
3 tolerance violation (compare only).
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .directed_local import LocalBudget, run_directed_local
from .graphs import Graph, GraphError, generate, load_edge_list
from .oracle import OracleError, exact_solve, naive_monte_carlo, power_iteration, EXACT_SOLVE_CAP
from .simple import run_simple
from .stitch import default_lam, run_improved
from .walks import DEFAULT_C, WalkParams, error_report

ALGOS = ("simple", "improved", "directed-local", "oracle-power", "oracle-exact", "oracle-naive")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUN = 2
EXIT_TOLERANCE = 3

OUT_DIR_ENV = "PAGERANK_SIM_OUT"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; for this tool those are config errors
    def error(self, message):
        raise CliError(message, EXIT_CONFIG)


def parse_gen_spec(spec: str) -> tuple[str, int, float | None]:
    """'kind:n[:param]' -> (kind, n, p)."""
    parts = spec.split(":")
    if len(parts) not in (2, 3):
        raise CliError(f"bad generator spec {spec!r}; expected kind:n[:param]", EXIT_CONFIG)
    kind = parts[0]
    try:
        n = int(parts[1])
    except ValueError:
        raise CliError(f"bad node count in generator spec {spec!r}", EXIT_CONFIG) from None
    p = None
    if len(parts) == 3:
        try:
            p = float(parts[2])
        except ValueError:
            raise CliError(f"bad parameter in generator spec {spec!r}", EXIT_CONFIG) from None
    return kind, n, p


def _build_graph(args) -> tuple[Graph, str]:
    if getattr(args, "gen", None) and getattr(args, "graph", None):
        raise CliError("give either --gen or --graph, not both", EXIT_CONFIG)
    if getattr(args, "gen", None):
        kind, n, p = parse_gen_spec(args.gen)
        try:
            return generate(kind, n, seed=args.graph_seed, p=p), args.gen
        except GraphError as exc:
            raise CliError(str(exc), EXIT_CONFIG) from exc
    if getattr(args, "graph", None):
        try:
            with open(args.graph) as fh:
                graph = load_edge_list(fh, patch_dangling=args.patch_dangling)
            return graph, f"file:{args.graph}"
        except FileNotFoundError as exc:
            raise CliError(f"graph file not found: {args.graph}", EXIT_RUN) from exc
        except GraphError as exc:
            raise CliError(str(exc), EXIT_RUN) from exc
    raise CliError("one of --gen or --graph is required", EXIT_CONFIG)


def _params_for(args, graph: Graph) -> WalkParams:
    try:
        return WalkParams.for_graph(
            graph.n, args.epsilon, c=args.c, K=args.walks, ell=args.ell, log_base=args.log_base
        )
    except ValueError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from exc


def _check_algo_graph(algo: str, graph: Graph) -> None:
    if algo == "improved" and graph.directed:
        raise CliError("--algo improved needs an undirected graph", EXIT_CONFIG)
    if algo == "directed-local" and not graph.directed:
        raise CliError("--algo directed-local needs a directed graph", EXIT_CONFIG)


def _oracle_scores(graph, epsilon, which):
    if which == "auto":
        which = "exact" if graph.n <= EXACT_SOLVE_CAP else "power"
    if which == "exact":
        return exact_solve(graph, epsilon)
    return power_iteration(graph, epsilon)


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _execute(algo, graph, params, seed, args):
    """One run; returns (scores_doc_fields, metrics_or_none, score_vector_or_pi)."""
    t0 = time.perf_counter()
    zeta = None
    metrics = None
    extra = {}
    if algo == "simple":
        sv, metrics = run_simple(graph, params, seed, max_rounds=args.max_rounds)
        est, zeta = sv.estimates, sv.zeta
    elif algo == "improved":
        sv, metrics = run_improved(graph, params, seed, lam=args.lam, eta=args.eta)
        est, zeta = sv.estimates, sv.zeta
    elif algo == "directed-local":
        budget = LocalBudget.for_graph(
            graph.n, params.epsilon, c=params.c, log_base=params.log_base,
            scale=args.budget_scale,
        )
        sv, metrics = run_directed_local(graph, params, seed, budget=budget)
        est, zeta = sv.estimates, sv.zeta
        extra["budget"] = {"walks_per_node": budget.walks_per_node, "lam": budget.lam}
    elif algo == "oracle-naive":
        sv, _ = naive_monte_carlo(graph, params.epsilon, params.K, seed)
        est, zeta = sv.estimates, sv.zeta
    elif algo == "oracle-power":
        res = power_iteration(graph, params.epsilon)
        est = res.pi
        extra["oracle"] = {"method": res.method, "residual": res.residual,
                           "iterations": res.iterations}
    elif algo == "oracle-exact":
        res = exact_solve(graph, params.epsilon)
        est = res.pi
        extra["oracle"] = {"method": res.method, "residual": res.residual}
    else:
        raise CliError(f"unknown algo {algo!r}", EXIT_CONFIG)
    wall = time.perf_counter() - t0
    return est, zeta, metrics, extra, wall


def cmd_run(args) -> int:
    graph, graph_label = _build_graph(args)
    _check_algo_graph(args.algo, graph)
    params = _params_for(args, graph)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    oracle_pi = None
    if args.with_oracle != "none":
        try:
            oracle_pi = _oracle_scores(graph, params.epsilon, args.with_oracle).pi
        except OracleError as exc:
            raise CliError(str(exc), EXIT_RUN) from exc

    repeat_summaries = []
    for rep in range(args.repeats):
        seed = args.seed + rep
        try:
            est, zeta, metrics, extra, wall = _execute(args.algo, graph, params, seed, args)
        except (OracleError, ValueError, RuntimeError) as exc:
            raise CliError(str(exc), EXIT_RUN) from exc

        doc = {
            "algo": args.algo,
            "graph": {"label": graph_label, "n": graph.n, "directed": graph.directed},
            "epsilon": params.epsilon,
            "c": params.c,
            "K": params.K,
            "ell": params.ell,
            "log_base": params.log_base,
            "seed": seed,
            "zeta": None if zeta is None else [int(z) for z in zeta],
            "estimate": [float(x) for x in est],
            **extra,
        }
        errors = None
        if oracle_pi is not None:
            rel = np.abs(np.asarray(est) - oracle_pi) / oracle_pi
            errors = error_report(np.asarray(est), oracle_pi)
            doc["oracle_pi"] = [float(x) for x in oracle_pi]
            doc["rel_error"] = [float(x) for x in rel]
            doc["error_summary"] = errors

        suffix = f"_{rep:03d}" if args.repeats > 1 else ""
        _atomic_write(out_dir / f"scores{suffix}.json", _json_text(doc))
        csv_lines = ["node,zeta,estimate" + (",oracle_pi,rel_error" if oracle_pi is not None else "")]
        for v in range(graph.n):
            row = f"{v},{'' if zeta is None else int(zeta[v])},{float(est[v])!r}"
            if oracle_pi is not None:
                row += f",{float(oracle_pi[v])!r},{float(doc['rel_error'][v])!r}"
            csv_lines.append(row)
        _atomic_write(out_dir / f"scores{suffix}.csv", "\n".join(csv_lines) + "\n")

        if metrics is not None:
            mdoc = metrics.summary()
            mdoc["wall_time_s"] = wall
            _atomic_write(out_dir / f"metrics{suffix}.json", _json_text(mdoc))
            buf = io.StringIO()
            metrics.write_csv(buf)
            _atomic_write(out_dir / f"metrics{suffix}.csv", buf.getvalue())
        repeat_summaries.append(
            {"seed": seed, "wall_time_s": wall, "error_summary": errors,
             "rounds": None if metrics is None else metrics.rounds_elapsed}
        )

    if args.repeats > 1:
        agg: dict = {"repeats": args.repeats, "runs": repeat_summaries}
        if oracle_pi is not None:
            for key in ("max_rel", "mean_rel", "l1", "linf"):
                vals = [r["error_summary"][key] for r in repeat_summaries]
                agg[f"{key}_mean"] = float(np.mean(vals))
                agg[f"{key}_max"] = float(np.max(vals))
        _atomic_write(out_dir / "aggregate.json", _json_text(agg))

    print(f"wrote {out_dir}/scores*.json ({args.algo}, n={graph.n}, seed={args.seed}, "
          f"repeats={args.repeats})")
    return EXIT_OK


def _load_scores(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise CliError(f"scores file not found: {path}", EXIT_RUN) from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{path} is not valid JSON: {exc}", EXIT_RUN) from None


def cmd_compare(args) -> int:
    doc_a = _load_scores(args.a)
    doc_b = _load_scores(args.b)
    est_a = doc_a.get("estimate")
    est_b = doc_b.get("estimate")
    if est_a is None or est_b is None:
        raise CliError("both files need an 'estimate' array", EXIT_RUN)
    if len(est_a) != len(est_b):
        raise CliError(
            f"node sets differ: {len(est_a)} vs {len(est_b)} entries", EXIT_RUN
        )
    try:
        report = error_report(np.asarray(est_a), np.asarray(est_b))
    except ValueError as exc:
        raise CliError(str(exc), EXIT_RUN) from exc

    tolerances = {}
    for spec in args.tolerance or []:
        if "=" not in spec:
            raise CliError(f"bad tolerance {spec!r}; expected key=value", EXIT_CONFIG)
        key, _, val = spec.partition("=")
        if key not in report:
            raise CliError(f"unknown tolerance key {key!r}; have {sorted(report)}", EXIT_CONFIG)
        try:
            tolerances[key] = float(val)
        except ValueError:
            raise CliError(f"bad tolerance value in {spec!r}", EXIT_CONFIG) from None

    violations = sorted(k for k, lim in tolerances.items() if report[k] > lim)
    out = {
        "a": args.a,
        "b": args.b,
        "n": len(est_a),
        "report": report,
        "tolerances": tolerances,
        "violations": violations,
    }
    text = _json_text(out)
    if args.out:
        _atomic_write(Path(args.out), text)
    sys.stdout.write(text)
    return EXIT_TOLERANCE if violations else EXIT_OK


def cmd_bench(args) -> int:
    header = ("algo,gen,n,directed,epsilon,lam,seed,rounds,max_edge_bits_per_round,"
              "direct_bits,messages,wall_time_s,error")
    rows = [header]
    for spec in args.gens:
        for epsilon in args.epsilons:
            for seed in args.seeds:
                row = _bench_row(args, spec, epsilon, seed)
                rows.append(row)
    text = "\n".join(rows) + "\n"
    if args.out:
        _atomic_write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _bench_row(args, spec, epsilon, seed) -> str:
    kind, n, p = parse_gen_spec(spec)  # a malformed spec is a config error: abort
    try:
        graph = generate(kind, n, seed=args.graph_seed, p=p)
        _check_algo_graph(args.algo, graph)
        params = WalkParams.for_graph(
            n, epsilon, c=args.c, K=args.walks, log_base=args.log_base
        )
        t0 = time.perf_counter()
        lam = ""
        if args.algo == "simple":
            _, metrics = run_simple(graph, params, seed)
        elif args.algo == "improved":
            lam = args.lam if args.lam is not None else default_lam(n, params.log_base)
            _, metrics = run_improved(graph, params, seed, lam=args.lam, eta=args.eta)
        else:
            budget = LocalBudget.for_graph(
                n, epsilon, c=params.c, log_base=params.log_base, scale=args.budget_scale
            )
            lam = budget.lam
            _, metrics = run_directed_local(graph, params, seed, budget=budget)
        wall = time.perf_counter() - t0
        return (f"{args.algo},{spec},{n},{graph.directed},{epsilon},{lam},{seed},"
                f"{metrics.rounds_elapsed},{metrics.max_edge_bits_per_round},"
                f"{metrics.direct_bits_total},{metrics.message_count},{wall:.6f},")
    except (CliError, GraphError, ValueError, RuntimeError) as exc:
        # keep sweeping; the row records what went wrong
        note = f"{type(exc).__name__}: {exc}".replace(",", ";").replace('"', "'")
        return f'{args.algo},{spec},{n},,{epsilon},,{seed},,,,,,"{note}"'


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pagerank-sim",
                     description="Distributed random-walk score estimation sandbox")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--graph-seed", type=int, default=0,
                       help="seed for the generator itself (erdos-renyi sampling)")
        p.add_argument("--c", type=float, default=DEFAULT_C, help="walks-per-node multiplier")
        p.add_argument("--walks", type=int, default=None, metavar="K",
                       help="override the derived walks per node")
        p.add_argument("--ell", type=int, default=None, help="override the walk length cap")
        p.add_argument("--log-base", choices=["base2", "natural"], default="base2")

    p_run = sub.add_parser("run", help="run one algorithm and write score/metric artifacts")
    common(p_run)
    p_run.add_argument("--gen", help="generator spec kind:n[:param], e.g. erdos-renyi:64:0.1")
    p_run.add_argument("--graph", help="edge-list file to load instead of --gen")
    p_run.add_argument("--patch-dangling", choices=["self-loop"], default=None,
                       help="repair nodes without outgoing edges while loading")
    p_run.add_argument("--epsilon", type=float, default=0.2, help="reset probability")
    p_run.add_argument("--algo", choices=ALGOS, required=True)
    p_run.add_argument("--seed", type=int, default=1)
    p_run.add_argument("--repeats", type=int, default=1,
                       help="run N times with seeds seed..seed+N-1 and aggregate")
    p_run.add_argument("--out-dir", default=os.environ.get(OUT_DIR_ENV, "."),
                       help=f"output directory (default: ${OUT_DIR_ENV} or cwd)")
    p_run.add_argument("--with-oracle", choices=["none", "exact", "power", "auto"],
                       default="none", help="attach reference scores and error columns")
    p_run.add_argument("--max-rounds", type=int, default=None)
    p_run.add_argument("--lam", type=int, default=None, help="short-walk length override")
    p_run.add_argument("--eta", type=int, default=None, help="coupons-per-degree override")
    p_run.add_argument("--budget-scale", type=float, default=1.0,
                       help="scale the directed-local coupon budget")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="compare two score files")
    p_cmp.add_argument("a")
    p_cmp.add_argument("b")
    p_cmp.add_argument("--tolerance", action="append", metavar="KEY=VALUE",
                       help="fail (exit 3) if report[KEY] > VALUE; repeatable")
    p_cmp.add_argument("--out", default=None, help="also write the report here")
    p_cmp.set_defaults(func=cmd_compare)

    p_bench = sub.add_parser("bench", help="sweep configurations into a CSV")
    common(p_bench)
    p_bench.add_argument("--algo", choices=["simple", "improved", "directed-local"],
                         required=True)
    p_bench.add_argument("--gens", nargs="+", required=True, metavar="SPEC",
                         help="generator specs to sweep")
    p_bench.add_argument("--epsilons", nargs="+", type=float, default=[0.2])
    p_bench.add_argument("--seeds", nargs="+", type=int, default=[1])
    p_bench.add_argument("--lam", type=int, default=None)
    p_bench.add_argument("--eta", type=int, default=None)
    p_bench.add_argument("--budget-scale", type=float, default=1.0)
    p_bench.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        record = {"error": {"code": exc.code, "message": str(exc)}}
        sys.stderr.write(json.dumps(record) + "\n")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
