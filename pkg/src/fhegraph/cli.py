"""Command-line harness: ``python -m fhegraph <subcommand> ...``.

Exit codes: 0 ok, 1 runtime error, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path


from . import graph as graphs
from .builders import BUILDERS
from .data import TEST, load_csv, make_blobs, make_series
from .errors import FheGraphError
from .nodes import set_data_kind
from .training import (TrainConfig, compare, load_parameters, parameterise_graph, predict,
                       save_parameters, train, write_metrics_csv)

log = logging.getLogger("fhegraph")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _non_negative(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _int_tuple(text):
    return tuple(int(v) for v in text.split(","))


def _resolve_graph(target: str, seed=None):
    """A builder name (``sphira``, ``constellation``) or a JSON graph document."""
    if target in BUILDERS:
        return BUILDERS[target](seed=seed or 0)
    return graphs.load(target)


def _dataset(args, g):
    meta = g.meta
    task = meta.get("task", "classification")
    shape = tuple(meta.get("input_shape", (28, 28)))
    if args.data:
        return load_csv(args.data, task=task, shape=shape, test_size=args.test_size,
                        seed=args.seed, limit=args.limit)
    n = args.limit or 200
    if args.synthetic == "blobs" or (args.synthetic is None and task == "classification"):
        return make_blobs(n=n, num_classes=meta.get("num_classes", 3), shape=shape,
                          test_size=args.test_size, seed=args.seed)
    window, features = shape
    return make_series(n=n, window=window, features=features, test_size=args.test_size, seed=args.seed)


def _trace_printer(node_id, receptor, event):
    print(f"{node_id}\t{receptor}\t{event}", file=sys.stderr)


def _add_graph_args(p):
    p.add_argument("graph", help="builder name (sphira, constellation) or graph JSON document")
    p.add_argument("--seed", type=int, default=0)


def _add_data_args(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--data", help="CSV dataset (label/target first, then features)")
    src.add_argument("--synthetic", choices=["blobs", "series"],
                     help="synthetic data instead of a CSV (default when --data is absent)")
    p.add_argument("--limit", type=_positive_int, help="read at most this many rows")
    p.add_argument("--test-size", type=float, default=0.2)


def _add_param_args(p):
    p.add_argument("--scale", type=int, default=40, help="scale power s (scale = 2^s)")
    p.add_argument("--special-multiplier", type=float, default=1.5, help="special prime multiplier p")


def _add_run_args(p):
    p.add_argument("--data-kind", choices=["plaintext", "ciphertext"], default="plaintext")
    p.add_argument("--noise", type=_non_negative, default=0.0, help="relative noise per multiplication")
    p.add_argument("--trace", action="store_true", help="print firing events to stderr")
    p.add_argument("--params", help="JSON parameter dump to load before running")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fhegraph", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="write a builder's graph as a JSON document")
    p.add_argument("name", choices=sorted(BUILDERS))
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-classes", type=_positive_int)
    p.add_argument("--input-shape", type=_int_tuple)
    p.add_argument("--kernel", type=_int_tuple)
    p.add_argument("--stride", type=_positive_int)
    p.add_argument("--window", type=_positive_int)
    p.add_argument("--features", type=_positive_int)

    p = sub.add_parser("params", help="autoFHE report: groups, costs and CKKS parameters")
    p.add_argument("graph")
    _add_param_args(p)

    p = sub.add_parser("train", help="train a graph and write per-epoch metrics")
    _add_graph_args(p)
    _add_data_args(p)
    _add_param_args(p)
    _add_run_args(p)
    p.add_argument("--epochs", type=_positive_int, default=5)
    p.add_argument("--lr", type=_non_negative, default=0.01)
    p.add_argument("--out", help="metrics CSV path (stdout when absent)")
    p.add_argument("--save-params", help="write trained parameters as JSON")

    p = sub.add_parser("infer", help="predict the test split")
    _add_graph_args(p)
    _add_data_args(p)
    _add_param_args(p)
    _add_run_args(p)
    p.add_argument("--out", help="predictions CSV path (stdout when absent)")

    p = sub.add_parser("compare", help="diff plaintext and ciphertext outputs on the test split")
    _add_graph_args(p)
    _add_data_args(p)
    _add_param_args(p)
    p.add_argument("--params", help="JSON parameter dump to load first")
    p.add_argument("--tolerance", type=_non_negative, default=1e-9)

    p = sub.add_parser("export-dot", help="write the graph in Graphviz DOT format")
    _add_graph_args(p)
    p.add_argument("-o", "--out", help="DOT path (stdout when absent)")
    return parser


def _cmd_build(args):
    kwargs = {"seed": args.seed}
    names = {"sphira": ["num_classes", "input_shape", "kernel", "stride"],
             "constellation": ["window", "features", "stride"]}[args.name]
    for key in names:
        if getattr(args, key) is not None:
            kwargs[key] = getattr(args, key)
    graphs.save(BUILDERS[args.name](**kwargs), args.out)
    print(args.out)
    return 0


def _cmd_params(args):
    g = _resolve_graph(args.graph)
    groups, params = parameterise_graph(g, args.scale, args.special_multiplier)
    report = groups.to_dict()
    report["params"] = {str(k): v.to_dict() for k, v in params.items()}
    print(json.dumps(report, indent=2))
    return 0


def _prepare(args):
    g = _resolve_graph(args.graph, args.seed)
    if getattr(args, "params", None):
        load_parameters(g, args.params)
    parameterise_graph(g, args.scale, args.special_multiplier)
    return g, _dataset(args, g)


def _cmd_train(args):
    g, ds = _prepare(args)
    cfg = TrainConfig(epochs=args.epochs, lr=args.lr, seed=args.seed, scale_power=args.scale,
                      special_multiplier=args.special_multiplier, data_kind=args.data_kind,
                      noise=args.noise)
    history = train(g, ds, cfg, trace=_trace_printer if args.trace else None)
    write_metrics_csv(history, args.out or sys.stdout)
    if args.save_params:
        save_parameters(g, args.save_params)
    return 0


def _cmd_infer(args):
    g, ds = _prepare(args)
    set_data_kind(g, args.data_kind, args.noise, args.seed)
    test = ds.subset(TEST)
    preds = predict(g, test.features, trace=_trace_printer if args.trace else None)
    lines = ["index,prediction,target"] + [
        f"{i},{p!r},{t!r}" for i, (p, t) in enumerate(zip(preds, test.labels.tolist()))]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_compare(args):
    g, ds = _prepare(args)
    result = compare(g, ds.subset(TEST))
    summary = {k: result[k] for k in ("examples", "max_abs_diff", "prediction_mismatches")}
    summary["tolerance"] = args.tolerance
    print(json.dumps(summary))
    return 0 if result["max_abs_diff"] < args.tolerance else 1


def _cmd_export_dot(args):
    dot = graphs.export_dot(_resolve_graph(args.graph, args.seed))
    if args.out:
        Path(args.out).write_text(dot)
    else:
        sys.stdout.write(dot)
    return 0


COMMANDS = {"build": _cmd_build, "params": _cmd_params, "train": _cmd_train,
            "infer": _cmd_infer, "compare": _cmd_compare, "export-dot": _cmd_export_dot}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (FheGraphError, OSError, ValueError, KeyError) as exc:
        where = f" at node {exc.node_id!r}" if getattr(exc, "node_id", None) is not None else ""
        print(f"fhegraph: error{where}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
