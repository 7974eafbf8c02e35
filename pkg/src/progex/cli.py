"""Command-line interface.

Subcommands:
    explain  induce a program explaining one instance of a model
    compile  translate a tree / linear / rule file into a program
    train    fit a baseline model and write it to a JSON model file
    oracle   exhaustively search small spaces (verification runs)
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .anneal import InducerConfig, anneal, exhaustive_search
from .compilers import (
    CompileError,
    compile_linear,
    compile_rule_list,
    compile_rule_set,
    compile_tree,
    load_linear_file,
    load_rules_file,
    load_tree_file,
    simplify_binary,
    RuleList,
)
from .data import DataError, Dataset, load_dataset
from .exprs import ExprError, node_count
from .loss import LossError, LOSSES
from .models import (
    ModelError,
    load_model,
    remote_model,
    save_model,
    train_forest,
    train_logistic,
    train_tree,
)
from .perturb import (
    KernelConfig,
    PerturbationError,
    binarize,
    default_kernel,
    make_batch,
    read_batch_csv,
    write_batch_csv,
)
from .report import build_report, render_trace_figure, report_json_bytes, report_text
from .schema import Instance, SchemaError
from .search_space import SearchSpaceError
from .syntax import ExprSyntaxError, pretty_print, render_block

_ERRORS = (
    SchemaError,
    ExprError,
    ExprSyntaxError,
    CompileError,
    DataError,
    ModelError,
    PerturbationError,
    LossError,
    SearchSpaceError,
    ValueError,
    OSError,
    json.JSONDecodeError,
)


def _add_data_args(p):
    p.add_argument("--data", required=True, help="CSV dataset")
    p.add_argument("--schema", required=True, help="schema sidecar JSON")


def _add_model_args(p):
    p.add_argument(
        "--model",
        default="tree",
        choices=["tree", "forest", "logistic", "remote"],
        help="black box to explain (default: tree)",
    )
    p.add_argument("--model-file", help="load a trained model instead of training")
    p.add_argument("--cmd", help="remote model: command to spawn (stdio protocol)")
    p.add_argument("--tcp", help="remote model: HOST:PORT")
    p.add_argument("--max-depth", type=int, default=4)
    p.add_argument("--n-trees", type=int, default=25)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--learning-rate", type=float, default=0.5)


def _add_inducer_args(p):
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--kernel-width", type=float, default=None)
    p.add_argument("--max-nodes", type=int, default=7)
    p.add_argument("--iterations", type=int, default=50_000)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loss", default="weighted-f1", choices=sorted(LOSSES))
    p.add_argument("--arith", action="store_true", help="allow arithmetic programs")


def _add_output_args(p):
    p.add_argument("--json-out", help="write the machine-readable report here")
    p.add_argument("--dump-batch", help="write the perturbation batch as CSV")
    p.add_argument("--plot", help="write the best-energy trace figure here")
    p.add_argument("--report-dir", help="write report.json, batch.csv, trace.png here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="progex",
        description="Explain black-box predictions with short induced programs.",
    )
    parser.add_argument("--version", action="version", version=f"progex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("explain", help="explain one instance of a model")
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument("--instance", type=int, default=0, help="row index to explain")
    _add_inducer_args(p)
    p.add_argument("--replay-batch", help="reuse a dumped batch instead of sampling")
    _add_output_args(p)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("compile", help="compile a representation file")
    p.add_argument("--schema", required=True)
    p.add_argument("--input", required=True, help="tree / linear / rules JSON file")
    p.add_argument(
        "--kind",
        required=True,
        choices=["tree", "linear", "rule-list", "rule-set"],
    )
    p.add_argument("--simplify", action="store_true", help="minimize over boolean schemas")
    p.add_argument("--max-nodes", type=int, default=7, help="simplification budget")
    p.add_argument("--positive-class", help="binarize multiclass rule labels against this")
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("train", help="train a baseline and write a model file")
    _add_data_args(p)
    p.add_argument("--model", required=True, choices=["tree", "forest", "logistic"])
    p.add_argument("--out", required=True, help="model file path")
    p.add_argument("--max-depth", type=int, default=4)
    p.add_argument("--n-trees", type=int, default=25)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("oracle", help="exhaustive search on a small space")
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument("--instance", type=int, default=0)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--kernel-width", type=float, default=None)
    p.add_argument("--max-nodes", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loss", default="weighted-f1", choices=sorted(LOSSES))
    _add_output_args(p)
    p.set_defaults(func=cmd_oracle)

    return parser


def _resolve_model(args, dataset: Dataset):
    if args.model == "remote":
        if args.cmd:
            return remote_model(command=args.cmd)
        if args.tcp:
            host, _, port = args.tcp.rpartition(":")
            return remote_model(tcp=(host, int(port)))
        raise ModelError("remote model needs --cmd or --tcp")
    if args.model_file:
        model = load_model(args.model_file)
        if model.kind != args.model:
            raise ModelError(
                f"model file holds a {model.kind!r} model, not {args.model!r}"
            )
        return model
    if args.model == "tree":
        return train_tree(dataset, max_depth=args.max_depth)
    if args.model == "forest":
        return train_forest(
            dataset, n_trees=args.n_trees, max_depth=args.max_depth, seed=args.seed
        )
    return train_logistic(dataset, epochs=args.epochs, learning_rate=args.learning_rate)


def _prepare_batch(args, dataset: Dataset):
    """Common front half of explain/oracle: view, kernel, labeled batch."""
    view = binarize(dataset.schema, dataset.X)
    kernel = (
        KernelConfig(args.kernel_width) if args.kernel_width else default_kernel(view)
    )
    if getattr(args, "replay_batch", None):
        batch = read_batch_csv(args.replay_batch, view.schema)
        return batch, kernel, 0
    model = _resolve_model(args, dataset)
    anchor = Instance(view.schema, dataset.instance(args.instance).values)
    batch = make_batch(anchor, view, model, args.samples, kernel, args.seed)
    if hasattr(model, "close"):
        model.close()
    return batch, kernel, args.instance


def _positive_means(dataset: Dataset, anchor_label: bool) -> str:
    cls = (
        dataset.positive_label
        if anchor_label
        else f"not {dataset.positive_label}"
    )
    return f"program true means the model predicts {cls!r}"


def _emit_outputs(args, report, result, batch) -> None:
    report_dir = getattr(args, "report_dir", None)
    json_out = getattr(args, "json_out", None)
    dump_batch = getattr(args, "dump_batch", None)
    plot = getattr(args, "plot", None)
    if report_dir:
        d = Path(report_dir)
        d.mkdir(parents=True, exist_ok=True)
        json_out = json_out or d / "report.json"
        dump_batch = dump_batch or d / "batch.csv"
        plot = plot or d / "trace.png"
    if json_out:
        Path(json_out).write_bytes(report_json_bytes(report))
    if dump_batch:
        write_batch_csv(batch, dump_batch)
    if plot:
        render_trace_figure(result, plot)


def cmd_explain(args) -> int:
    dataset = load_dataset(args.data, args.schema)
    batch, kernel, anchor_index = _prepare_batch(args, dataset)
    cfg = InducerConfig(
        max_nodes=args.max_nodes,
        iterations=args.iterations,
        restarts=args.restarts,
        seed=args.seed,
        arithmetic=args.arith,
        loss=args.loss,
    )
    start = time.perf_counter()
    result = anneal(batch, cfg)
    elapsed = time.perf_counter() - start
    config = {
        "model": args.model,
        "instance": anchor_index,
        "samples": len(batch),
        "kernel_width": kernel.width,
        "max_nodes": cfg.max_nodes,
        "iterations": cfg.iterations,
        "restarts": cfg.restarts,
        "seed": cfg.seed,
        "loss": cfg.loss,
        "arithmetic": cfg.arithmetic,
    }
    report = build_report(
        result,
        batch.anchor,
        batch.anchor_label,
        anchor_index,
        _positive_means(dataset, batch.anchor_label),
        config,
        elapsed,
    )
    _emit_outputs(args, report, result, batch)
    print(report_text(report))
    return 0


def cmd_oracle(args) -> int:
    dataset = load_dataset(args.data, args.schema)
    batch, kernel, anchor_index = _prepare_batch(args, dataset)
    start = time.perf_counter()
    result = exhaustive_search(batch, max_nodes=args.max_nodes, loss=args.loss)
    elapsed = time.perf_counter() - start
    config = {
        "model": args.model,
        "instance": anchor_index,
        "samples": len(batch),
        "kernel_width": kernel.width,
        "max_nodes": args.max_nodes,
        "seed": args.seed,
        "loss": args.loss,
        "search": "exhaustive",
    }
    report = build_report(
        result,
        batch.anchor,
        batch.anchor_label,
        anchor_index,
        _positive_means(dataset, batch.anchor_label),
        config,
        elapsed,
    )
    _emit_outputs(args, report, result, batch)
    print(report_text(report))
    return 0


def cmd_compile(args) -> int:
    from .schema import FeatureSchema

    schema = FeatureSchema.load(args.schema)
    if args.kind == "tree":
        expr = compile_tree(load_tree_file(args.input, schema), schema)
    elif args.kind == "linear":
        expr = compile_linear(load_linear_file(args.input), schema)
    else:
        rules = load_rules_file(args.input, schema, args.positive_class)
        if args.kind == "rule-list":
            if not isinstance(rules, RuleList):
                raise CompileError("file has no 'default' key; this is a rule set")
            expr = compile_rule_list(rules, schema)
        else:
            if isinstance(rules, RuleList):
                raise CompileError("file has a 'default' key; this is a rule list")
            expr = compile_rule_set(rules, schema)
    if args.simplify:
        expr = simplify_binary(expr, schema, args.max_nodes)
    text = render_block(expr)
    if args.json_out:
        obj = {"program": pretty_print(expr), "node_count": node_count(expr)}
        Path(args.json_out).write_bytes(
            (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode("utf-8")
        )
    print(text)
    return 0


def cmd_train(args) -> int:
    dataset = load_dataset(args.data, args.schema)
    if args.model == "tree":
        model = train_tree(dataset, max_depth=args.max_depth)
    elif args.model == "forest":
        model = train_forest(
            dataset, n_trees=args.n_trees, max_depth=args.max_depth, seed=args.seed
        )
    else:
        model = train_logistic(
            dataset, epochs=args.epochs, learning_rate=args.learning_rate
        )
    save_model(model, args.out)
    accuracy = float((model.predict_batch(dataset.X) == dataset.y).mean())
    if args.json_out:
        obj = {"model": args.model, "out": str(args.out), "train_accuracy": accuracy}
        Path(args.json_out).write_bytes(
            (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode("utf-8")
        )
    print(f"wrote {args.model} model to {args.out} (train accuracy {accuracy:.4f})")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
