"""Command-line interface.

Subcommands: gen-data, train, eval, extract, simplify, eval-formula,
trace, check-trace, selftest, bench.  Exit codes: 0 success, 1
verification/validation failure, 2 usage error (argparse's own).

Every training run writes a manifest next to its artifacts; re-running
with --manifest reproduces the outputs byte for byte.  Explicit flags
override manifest values.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, bench, dataset, formula, network, selftest, trace, training
from ._backend import NAME as BACKEND_NAME
from ._backend import forward_outputs


def _env_seed() -> int:
    raw = os.environ.get("LUKMLP_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        return 0


TRAIN_DEFAULTS = {
    "arch": "2,32,32,1",
    "eta": 1.0,
    "eps": 0.0,
    "epochs": 250,
    "batch": 128,
    "mode": "lukasiewicz",
    "eta_combine": "lukasiewicz_product",
    "norm_eps": 1e-8,
    "aggregator": "max",
}


class CliError(Exception):
    """Validation failure: reported on stderr, exit code 1."""


def _parse_arch(text: str) -> list[int]:
    try:
        arch = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise CliError(f"bad arch {text!r}: expected comma-separated integers")
    if len(arch) < 2 or any(w < 1 for w in arch):
        raise CliError(f"bad arch {text!r}: need positive widths, input plus layers")
    return arch


def _parse_vector(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise CliError(f"bad vector {text!r}: expected comma-separated numbers")


def _read_formula_source(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


# --- subcommands -------------------------------------------------------------

def cmd_gen_data(args) -> int:
    seed = args.seed if args.seed is not None else _env_seed()
    pool = dataset.gen_two_moons(args.n_per_class, args.noise, seed)
    if not args.raw_orientation:
        pool = dataset.mirror_vertical(pool)
    train_ds, test_ds = dataset.split(pool, args.train_frac, seed + 1)
    train_ds, rec = dataset.scale_unit(train_ds)
    test_ds = dataset.apply_scaling(test_ds, rec)
    os.makedirs(args.out_dir, exist_ok=True)
    train_path = os.path.join(args.out_dir, "train.csv")
    test_path = os.path.join(args.out_dir, "test.csv")
    dataset.write_csv(train_ds, train_path)
    dataset.write_csv(test_ds, test_path)
    print(f"wrote {train_path} ({len(train_ds)} rows), {test_path} ({len(test_ds)} rows)")
    return 0


def _resolve_train_settings(args) -> dict:
    manifest = {}
    if args.manifest:
        with open(args.manifest, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)

    def pick(flag_value, key, fallback):
        if flag_value is not None:
            return flag_value
        if key in manifest:
            return manifest[key]
        return fallback

    settings = {
        "data": pick(args.data, "data", None),
        "arch": pick(args.arch, "arch", TRAIN_DEFAULTS["arch"]),
        "eta": float(pick(args.eta, "eta", TRAIN_DEFAULTS["eta"])),
        "eps": float(pick(args.eps, "eps", TRAIN_DEFAULTS["eps"])),
        "epochs": int(pick(args.epochs, "epochs", TRAIN_DEFAULTS["epochs"])),
        "batch": int(pick(args.batch, "batch", TRAIN_DEFAULTS["batch"])),
        "mode": pick(args.mode, "mode", TRAIN_DEFAULTS["mode"]),
        "eta_combine": pick(args.eta_combine, "eta_combine", TRAIN_DEFAULTS["eta_combine"]),
        "norm_eps": float(pick(args.norm_eps, "norm_eps", TRAIN_DEFAULTS["norm_eps"])),
        "aggregator": pick(args.aggregator, "aggregator", TRAIN_DEFAULTS["aggregator"]),
        "seed": int(pick(args.seed, "seed", _env_seed())),
        "trace": pick(args.trace, "trace", None),
    }
    if not settings["data"]:
        raise CliError("no training data: pass --data or a manifest with one")
    if isinstance(settings["arch"], list):
        settings["arch"] = ",".join(str(w) for w in settings["arch"])
    return settings


def cmd_train(args) -> int:
    settings = _resolve_train_settings(args)
    arch = _parse_arch(settings["arch"])
    ds = dataset.read_csv(settings["data"])
    if len(ds) == 0:
        raise CliError(f"{settings['data']}: empty dataset")
    if arch[0] != ds.features.shape[1]:
        raise CliError(
            f"arch input width {arch[0]} does not match data width {ds.features.shape[1]}"
        )
    if arch[-1] != 1:
        raise CliError("dataset training expects a single output unit")

    cfg = training.TrainConfig(
        eta=settings["eta"],
        eps=settings["eps"],
        max_epochs=settings["epochs"],
        batch_size=settings["batch"],
        update_mode=settings["mode"],
        eta_combine=settings["eta_combine"],
        norm_eps=settings["norm_eps"],
        seed=settings["seed"],
        aggregator=settings["aggregator"],
    )
    net = network.random_network(arch, settings["seed"])

    hook = None
    trace_steps = None
    if settings["trace"]:
        hook, trace_steps = trace.dataset_epoch_recorder(cfg.eps, cfg.max_epochs)

    x = ds.features
    y = ds.labels.astype(np.float64).reshape(-1, 1)
    final, history = training.train(net, x, y, cfg, epoch_hook=hook)

    os.makedirs(args.out_dir, exist_ok=True)
    model_path = os.path.join(args.out_dir, "model.txt")
    history_path = os.path.join(args.out_dir, "history.csv")
    manifest_path = os.path.join(args.out_dir, "manifest.json")
    network.write_model(final, model_path)
    with open(history_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch,mean_loss,train_accuracy\n")
        for epoch, loss, acc in history:
            fh.write("%d,%.17g,%.17g\n" % (epoch, loss, acc))
    manifest = dict(settings)
    manifest["version"] = __version__
    manifest["artifacts"] = {"model": model_path, "history": history_path}
    if trace_steps is not None:
        trace.write_trace(trace_steps, settings["trace"])
        manifest["artifacts"]["trace"] = settings["trace"]
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    last = history[-1]
    print(
        f"trained {len(history)} epochs (backend {BACKEND_NAME}); "
        f"final mean loss {last[1]:.6f}, train accuracy {last[2]:.4f}"
    )
    print(f"wrote {model_path}, {history_path}, {manifest_path}")
    return 0


def _accuracy(net: network.NetworkState, ds: dataset.Dataset) -> float:
    ws = [l.weights for l in net.layers]
    bs = [l.bias for l in net.layers]
    outputs = forward_outputs(ws, bs, ds.features)
    yhat = outputs.max(axis=1)
    preds = (yhat >= 0.5).astype(np.int64)
    return float(np.mean(preds == ds.labels))


def cmd_eval(args) -> int:
    net = network.read_model(args.model)
    for path in args.data:
        ds = dataset.read_csv(path)
        if len(ds) == 0:
            raise CliError(f"{path}: empty dataset")
        if ds.features.shape[1] != net.input_width:
            raise CliError(
                f"{path}: width {ds.features.shape[1]} does not match model input "
                f"width {net.input_width}"
            )
        print(f"{path}: accuracy {_accuracy(net, ds):.4f}")
    return 0


def cmd_extract(args) -> int:
    net = network.read_model(args.model)
    if args.aggregate:
        formulas = [formula.extract_aggregate(net)]
    elif args.output is not None:
        formulas = [formula.extract(net, args.output)]
    else:
        formulas = [formula.extract(net, j) for j in range(net.output_width)]
    if args.simplify:
        formulas = [formula.simplify(phi) for phi in formulas]
    text = "\n".join(formula.to_text(phi) for phi in formulas) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_simplify(args) -> int:
    phi = formula.parse(_read_formula_source(args.formula).strip())
    print(formula.to_text(formula.simplify(phi)))
    return 0


def cmd_eval_formula(args) -> int:
    phi = formula.parse(_read_formula_source(args.formula).strip())
    env = _parse_vector(args.assign) if args.assign else []
    for v in env:
        if not 0.0 <= v <= 1.0:
            raise CliError(f"assignment value {v} outside [0, 1]")
    try:
        value = formula.evaluate(phi, env)
    except formula.UnboundVariable as e:
        raise CliError(str(e.args[0]))
    print("%.17g" % value)
    return 0


def _trace_cfg(args) -> training.TrainConfig:
    return training.TrainConfig(
        eta=args.eta,
        eps=args.eps,
        max_epochs=args.epochs,
        batch_size=1,
        update_mode=args.mode,
        eta_combine=args.eta_combine,
        norm_eps=args.norm_eps,
        seed=0,
        aggregator=args.aggregator,
    )


def cmd_trace(args) -> int:
    net = network.read_model(args.model)
    inputs = _parse_vector(args.input)
    cfg = _trace_cfg(args)
    init = trace.Configuration(epoch_r=0.0, net=net)
    states: list[str] | None = [] if args.states else None
    steps = trace.symbolic_train_loop(
        init, inputs, args.target, args.eps, args.epochs, cfg, collect_states=states
    )
    trace.write_trace(steps, args.out)
    if args.states:
        trace.write_states(states, args.states)
        print(f"wrote {args.out} ({len(steps)} steps), {args.states}")
    else:
        print(f"wrote {args.out} ({len(steps)} steps)")
    return 0


def cmd_check_trace(args) -> int:
    steps = trace.read_trace(args.trace_file)
    if steps and steps[0].axiom in ("N2", "N3", "N0E"):
        violations = trace.check_condensed_trace(steps, args.eps, args.epochs)
    else:
        if args.model is None or args.input is None or args.target is None:
            raise CliError("single-sample traces need --model, --input, and --target")
        net = network.read_model(args.model)
        inputs = _parse_vector(args.input)
        cfg = _trace_cfg(args)
        states = trace.read_states(args.states) if args.states else None
        violations = trace.check_trace(
            steps,
            trace.Configuration(epoch_r=0.0, net=net),
            inputs,
            args.target,
            args.eps,
            args.epochs,
            cfg,
            states=states,
        )
    if violations:
        for v in violations:
            print(str(v), file=sys.stderr)
        print(f"REJECTED: {len(violations)} violation(s)", file=sys.stderr)
        return 1
    print(f"accepted: {len(steps)} steps")
    return 0


def cmd_selftest(args) -> int:
    results = selftest.run_suite(n_samples=args.samples, seed=args.seed)
    print(selftest.format_report(results))
    return 0 if all(r.passed for r in results) else 1


def cmd_bench(args) -> int:
    report = bench.run_benchmark(
        arch=tuple(_parse_arch(args.arch)), n=args.n, steps=args.steps, seed=args.seed
    )
    print(bench.format_report(report))
    if report.get("bit_identical") is False:
        return 1
    return 0


# --- wiring -------------------------------------------------------------------

def _add_trace_flags(p: argparse.ArgumentParser):
    p.add_argument("--model", required=True, help="network file")
    p.add_argument("--input", required=True, help="comma-separated input vector")
    p.add_argument("--target", type=float, required=True, help="expected output in [0,1]")
    p.add_argument("--eps", type=float, default=0.1, help="stop tolerance (default 0.1)")
    p.add_argument("--epochs", type=int, default=10, help="epoch limit E (default 10)")
    p.add_argument("--eta", type=float, default=1.0, help="learning rate (default 1)")
    p.add_argument("--mode", choices=training.UPDATE_MODES, default="lukasiewicz")
    p.add_argument("--eta-combine", choices=training.ETA_COMBINE, default="lukasiewicz_product")
    p.add_argument("--norm-eps", type=float, default=1e-8)
    p.add_argument("--aggregator", choices=network.AGGREGATORS, default="max")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lukmlp",
        description="Train, extract, and check unit-interval logic networks",
    )
    parser.add_argument("--version", action="version", version=f"lukmlp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a scaled two-moons train/test pair")
    p.add_argument("--n-per-class", type=int, default=4000, help="points per class (default 4000)")
    p.add_argument("--noise", type=float, default=0.1, help="gaussian noise sd (default 0.1)")
    p.add_argument("--seed", type=int, default=None, help="seed (default LUKMLP_SEED or 0)")
    p.add_argument("--train-frac", type=float, default=0.75, help="train fraction (default 0.75)")
    p.add_argument(
        "--raw-orientation",
        action="store_true",
        help="skip the vertical mirror (unit-interval networks are monotone "
        "and cannot separate the raw orientation well)",
    )
    p.add_argument("--out-dir", default=".", help="output directory")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train a network on a CSV dataset")
    p.add_argument("--data", help="training CSV (x1,x2,label)")
    p.add_argument("--arch", help=f"widths, e.g. {TRAIN_DEFAULTS['arch']}")
    p.add_argument("--eta", type=float, help="learning rate in [0,1] (default 1)")
    p.add_argument("--eps", type=float, help="mean-loss stop tolerance (default 0: run all epochs)")
    p.add_argument("--epochs", type=int, help="max epochs (default 250)")
    p.add_argument("--batch", type=int, help="batch size (default 128)")
    p.add_argument("--mode", choices=training.UPDATE_MODES, help="update rule (default lukasiewicz)")
    p.add_argument(
        "--eta-combine",
        choices=training.ETA_COMBINE,
        help="how eta meets the normalized magnitude (default lukasiewicz_product)",
    )
    p.add_argument("--norm-eps", type=float, help="gradient max-norm epsilon (default 1e-8)")
    p.add_argument("--aggregator", choices=network.AGGREGATORS, help="output aggregator (default max)")
    p.add_argument("--seed", type=int, help="run seed (default LUKMLP_SEED or 0)")
    p.add_argument("--trace", help="write a condensed per-epoch trace to this JSONL file")
    p.add_argument("--manifest", help="load settings from a manifest; flags override")
    p.add_argument("--out-dir", default=".", help="where model/history/manifest go")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="report accuracy of a model on CSV datasets")
    p.add_argument("--model", required=True)
    p.add_argument("--data", action="append", required=True, help="CSV path (repeatable)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("extract", help="extract formulas from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--output", type=int, default=None, help="single output index")
    p.add_argument("--aggregate", action="store_true", help="one joined formula for all outputs")
    p.add_argument("--simplify", action="store_true")
    p.add_argument("-o", "--out", help="write to file instead of stdout")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("simplify", help="rewrite a formula to its simplified form")
    p.add_argument("formula", help="formula file, or - for stdin")
    p.set_defaults(func=cmd_simplify)

    p = sub.add_parser("eval-formula", help="evaluate a formula under an assignment")
    p.add_argument("formula", help="formula file, or - for stdin")
    p.add_argument("--assign", help="comma-separated values for x0,x1,...")
    p.set_defaults(func=cmd_eval_formula)

    p = sub.add_parser("trace", help="run the single-sample symbolic loop, write JSONL")
    _add_trace_flags(p)
    p.add_argument("-o", "--out", required=True, help="trace JSONL path")
    p.add_argument("--states", help="also write full per-step states here")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("check-trace", help="verify a trace; exit 1 with violations on reject")
    p.add_argument("trace_file")
    p.add_argument("--model", help="initial network (single-sample traces)")
    p.add_argument("--input", help="comma-separated input vector")
    p.add_argument("--target", type=float, help="expected output")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--mode", choices=training.UPDATE_MODES, default="lukasiewicz")
    p.add_argument("--eta-combine", choices=training.ETA_COMBINE, default="lukasiewicz_product")
    p.add_argument("--norm-eps", type=float, default=1e-8)
    p.add_argument("--aggregator", choices=network.AGGREGATORS, default="max")
    p.add_argument("--states", help="side file with full per-step states")
    p.set_defaults(func=cmd_check_trace)

    p = sub.add_parser("selftest", help="run the algebra equation suite")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=2024)
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("bench", help="compare compiled and pure backends")
    p.add_argument("--arch", default="2,32,32,1")
    p.add_argument("--n", type=int, default=512, help="batch size")
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
