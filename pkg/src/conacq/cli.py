"""Command-line entry points: experiment runs, classifier evaluation,
benchmark export, and the interactive session service."""

from __future__ import annotations

import argparse
import sys

from conacq.benchmarks import BUILTIN_NAMES, generate_benchmark
from conacq.harness import METHODS, eval_classifiers, run_one, to_delimited


def _add_run(sub):
    p = sub.add_parser("run", help="run seeded acquisition experiments")
    p.add_argument("--benchmark", required=True, choices=BUILTIN_NAMES)
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--guide", default="qgen", choices=("qgen", "all"))
    p.add_argument("--seeds", type=int, default=10, help="number of seeds (0..N-1)")
    p.add_argument("--cutoff", type=float, default=1.0, help="query generation cutoff (seconds)")
    p.add_argument("--out", default="-", help="output file for run records ('-' = stdout)")
    p.add_argument("--no-verify", action="store_true",
                   help="skip the final equivalence check")
    p.add_argument("--dataset-out", default=None,
                   help="also export the labeled candidate dataset of the last seed")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="benchmark parameter override (repeatable)")


def _add_eval(sub):
    p = sub.add_parser("eval", help="cross-validate classifiers on an exported dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--kinds", default="rf,gnb", help="comma-separated: rf,gnb")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--prefix", action="store_true",
                   help="train on ordered prefixes instead of k-fold CV")
    p.add_argument("--seed", type=int, default=0)


def _add_export(sub):
    p = sub.add_parser("export", help="write a builtin benchmark as a problem definition")
    p.add_argument("--benchmark", required=True, choices=BUILTIN_NAMES)
    p.add_argument("--out", default="-")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")


def _add_serve(sub):
    p = sub.add_parser("serve", help="start the HTTP session service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")


def _parse_params(pairs):
    out = {}
    for item in pairs:
        if "=" not in item:
            raise SystemExit(f"bad --param {item!r}, expected KEY=VALUE")
        k, v = item.split("=", 1)
        try:
            out[k] = int(v)
        except ValueError:
            out[k] = v
    return out


def _write(path: str, text: str):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _cmd_run(args) -> int:
    bench = generate_benchmark(args.benchmark, **_parse_params(args.param))
    records = []
    last_session = None
    for seed in range(args.seeds):
        rec, sess = run_one(
            bench, args.method, args.guide, seed,
            cutoff=args.cutoff, verify=not args.no_verify,
        )
        records.append(rec)
        last_session = sess
        print(
            f"# seed {seed}: {rec.total_queries} queries, "
            f"converged={rec.converged}, max_wait={rec.max_wait_seconds:.3f}s",
            file=sys.stderr,
        )
    _write(args.out, to_delimited(records))
    if args.dataset_out and last_session is not None:
        _write(args.dataset_out, last_session.dataset.to_csv())
    return 0


def _cmd_eval(args) -> int:
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    rows = eval_classifiers(
        args.dataset, kinds, folds=args.folds, prefix_mode=args.prefix, seed=args.seed,
    )
    cols = list(rows[0].keys())
    print(",".join(cols))
    for row in rows:
        print(",".join(f"{row[c]:.6f}" if isinstance(row[c], float) else str(row[c])
                       for c in cols))
    return 0


def _cmd_export(args) -> int:
    from conacq.problem import serialize_problem

    bench = generate_benchmark(args.benchmark, **_parse_params(args.param))
    _write(args.out, serialize_problem(bench.voc, bench.language, bench.target))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from conacq.service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="conacq",
        description="Interactive constraint acquisition workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    _add_eval(sub)
    _add_export(sub)
    _add_serve(sub)
    args = parser.parse_args(argv)
    return {
        "run": _cmd_run,
        "eval": _cmd_eval,
        "export": _cmd_export,
        "serve": _cmd_serve,
    }[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
