"""Command line interface.

Subcommands cover training (train-reg, train-clf), exact verification
(oracle, certify), generalization audits (gap), the instability
demonstration, and synthetic data generation. Reports are JSON with sorted
keys and no volatile fields, so identical inputs produce identical bytes;
timing goes to stderr only.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .audit import certify, generalization_gap, instability_demo
from .classification import RandomizedClassifier, BaseClassifier, lexifair_clf
from .core import BudgetExceeded, DatasetError, GroupedDataset, GroupErrorVector, RunConfig
from .oracle import (
    LossMatrix,
    exact_lexifair_lp,
    loss_matrix_from_classifiers,
)
from .classification import induced_labelings
from .regression import ConvexLoss, ParamDomain, lexifair_reg
from .synth import gen_synth

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAILED_CHECK = 2


def _threads() -> int:
    """Thread cap from the environment; all computation here is serial, so any
    positive cap is honored trivially."""
    raw = os.environ.get("LEXIFAIR_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise SystemExit(f"LEXIFAIR_THREADS must be an integer, got {raw!r}")
    if value < 1:
        raise SystemExit("LEXIFAIR_THREADS must be >= 1")
    return value


def _emit(report: dict, output: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise SystemExit(f"{path}: config must be a JSON object")
    return cfg


def _setting(args, cfg: dict, name: str, default):
    """Flag beats config file beats default."""
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    if name in cfg:
        return cfg[name]
    return default


def _floats(arr) -> list:
    return [float(v) for v in np.asarray(arr).ravel()]


def _oracle_opts(path: str | None, ell: int):
    if not path:
        return None, None
    matrix = LossMatrix.from_csv(path)
    truth = exact_lexifair_lp(matrix, min(ell, matrix.K))
    return truth, list(truth.opt_sums)


def _classifier_to_json(h: BaseClassifier, weight: float) -> dict:
    return {
        "kind": h.kind,
        "feature": h.feature,
        "threshold": h.threshold,
        "polarity": h.polarity,
        "weight": weight,
    }


def _model_from_report(report: dict):
    """Rebuild a per-point loss evaluator from a training report."""
    model = report.get("model")
    if not isinstance(model, dict) or "task" not in model:
        raise SystemExit("report has no model section")
    if model["task"] == "reg":
        theta = np.array(model["theta"], dtype=float)
        kind = model["loss"]

        def point_losses(X, y):
            u = np.asarray(X, dtype=float) @ theta
            y = np.asarray(y, dtype=float)
            if kind == "squared":
                return (u - y) ** 2
            return np.logaddexp(0.0, u) - y * u

        return point_losses
    if model["task"] == "clf":
        support = []
        weights = []
        for entry in model["support"]:
            if entry["kind"] == "constant":
                support.append(BaseClassifier.constant(entry["polarity"]))
            else:
                support.append(
                    BaseClassifier.stump(
                        entry["feature"], entry["threshold"], entry["polarity"]
                    )
                )
            weights.append(entry["weight"])
        rc = RandomizedClassifier(tuple(support), np.array(weights))
        return rc.point_losses
    raise SystemExit(f"unknown model task {model['task']!r}")


def _add_common(parser, *, delta=False, oracle=False):
    parser.add_argument("--input", required=True, help="input CSV path")
    parser.add_argument("--output", help="JSON report path (default stdout)")
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--ell", type=int)
    parser.add_argument("--budget", type=int)
    if delta:
        parser.add_argument("--delta", type=float)
    if oracle:
        parser.add_argument("--oracle", help="loss-matrix CSV for exact verification")


def cmd_train_reg(args) -> int:
    cfg = _load_config(args.config)
    ell = int(_setting(args, cfg, "ell", 1))
    alpha = float(_setting(args, cfg, "alpha", 0.1))
    seed = int(_setting(args, cfg, "seed", 0))
    budget = int(_setting(args, cfg, "budget", 10_000_000))
    radius = float(_setting(args, cfg, "radius", 1.0))
    loss_kind = str(_setting(args, cfg, "loss", "squared"))
    threads = _threads()

    dataset = GroupedDataset.from_csv(args.input)
    domain = ParamDomain(np.zeros(dataset.d), radius)
    if loss_kind == "squared":
        loss = ConvexLoss.squared(dataset, domain)
    elif loss_kind == "logistic":
        loss = ConvexLoss.logistic(dataset, domain)
    else:
        raise SystemExit(f"unknown loss {loss_kind!r}")
    config = RunConfig(
        ell=ell, alpha=alpha, loss_bound=loss.loss_bound,
        grad_bound=loss.grad_bound, diameter=domain.diameter,
        seed=seed, budget=budget,
    )
    start = time.perf_counter()
    try:
        outcome = lexifair_reg(dataset, config, loss, domain)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED_CHECK
    elapsed = time.perf_counter() - start
    print(f"train-reg finished in {elapsed:.2f}s", file=sys.stderr)

    _, opts = _oracle_opts(args.oracle, ell)
    cert = certify(outcome.errors, outcome.eta_schedule, opts, alpha, ell)
    report = {
        "task": "train-reg",
        "config": {
            "ell": ell, "alpha": alpha, "seed": seed, "budget": budget,
            "radius": radius, "loss": loss_kind,
            "loss_bound": loss.loss_bound, "grad_bound": loss.grad_bound,
            "threads": threads,
            "rounds": [
                {"j": r.j, "T": r.T, "B": r.B, "nu": r.nu,
                 "zero_dual_rounds": r.zero_dual_rounds}
                for r in outcome.rounds
            ],
        },
        "model": {"task": "reg", "loss": loss_kind, "theta": _floats(outcome.theta)},
        "eta": _floats(outcome.eta_schedule.values),
        "group_errors": _floats(outcome.errors.errors),
        "certificate": cert.to_json(),
    }
    _emit(report, args.output)
    return EXIT_OK


def cmd_train_clf(args) -> int:
    cfg = _load_config(args.config)
    ell = int(_setting(args, cfg, "ell", 1))
    alpha = float(_setting(args, cfg, "alpha", 0.1))
    delta = float(_setting(args, cfg, "delta", 0.05))
    seed = int(_setting(args, cfg, "seed", 0))
    budget = int(_setting(args, cfg, "budget", 10_000_000))
    threads = _threads()

    dataset = GroupedDataset.from_csv(args.input, classification=True)
    config = RunConfig(ell=ell, alpha=alpha, delta=delta, seed=seed, budget=budget)
    start = time.perf_counter()
    outcome = lexifair_clf(dataset, config)
    elapsed = time.perf_counter() - start
    print(f"train-clf finished in {elapsed:.2f}s", file=sys.stderr)

    _, opts = _oracle_opts(args.oracle, ell)
    cert = certify(outcome.errors, outcome.eta_schedule, opts, alpha, ell)
    model = outcome.model
    report = {
        "task": "train-clf",
        "config": {
            "ell": ell, "alpha": alpha, "delta": delta, "seed": seed,
            "budget": budget, "threads": threads,
            "rounds": [
                {"j": r.j, "T": r.T, "B": r.B, "m": r.m, "clamped": r.clamped,
                 "zero_dual_rounds": r.zero_dual_rounds}
                for r in outcome.rounds
            ],
        },
        "model": {
            "task": "clf",
            "support": [
                _classifier_to_json(h, float(w))
                for h, w in zip(model.support, model.weights)
            ],
        },
        "eta": _floats(outcome.eta_schedule.values),
        "group_errors": _floats(outcome.errors.errors),
        "certificate": cert.to_json(),
    }
    _emit(report, args.output)
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = _load_config(args.config)
    ell = int(_setting(args, cfg, "ell", 1))
    if args.from_dataset:
        dataset = GroupedDataset.from_csv(args.input, classification=True)
        _, reps = induced_labelings(dataset)
        matrix = loss_matrix_from_classifiers(dataset, reps)
        if args.matrix_out:
            matrix.to_csv(args.matrix_out)
    else:
        matrix = LossMatrix.from_csv(args.input)
    truth = exact_lexifair_lp(matrix, min(ell, matrix.K))
    report = {
        "task": "oracle",
        "ell": min(ell, matrix.K),
        "groups": matrix.K,
        "cols": matrix.cols,
        "gamma": _floats(truth.gamma),
        "opt": _floats(truth.opt_sums),
        "witness": _floats(truth.witness),
    }
    _emit(report, args.output)
    return EXIT_OK


def cmd_certify(args) -> int:
    cfg = _load_config(args.config)
    with open(args.input) as fh:
        train_report = json.load(fh)
    ell = int(_setting(args, cfg, "ell", train_report["certificate"]["ell"]))
    alpha = float(_setting(args, cfg, "alpha", train_report["certificate"]["alpha"]))
    _, opts = _oracle_opts(args.oracle, ell)
    if opts is None:
        raise SystemExit("certify requires --oracle")
    from .core import EtaSchedule

    errors = GroupErrorVector(np.array(train_report["group_errors"], dtype=float))
    eta_vals = train_report["eta"]
    loss_bound = max(
        1.0, max(eta_vals, default=1.0), float(errors.errors.max())
    )
    schedule = EtaSchedule(tuple(eta_vals), loss_bound)
    cert = certify(errors, schedule, opts, alpha, ell)
    report = {"task": "certify", "certificate": cert.to_json()}
    _emit(report, args.output)
    return EXIT_OK if cert.verdict == "pass" else EXIT_FAILED_CHECK


def cmd_gap(args) -> int:
    cfg = _load_config(args.config)
    ell = int(_setting(args, cfg, "ell", 1))
    alpha = float(_setting(args, cfg, "alpha", 0.1))
    delta = float(_setting(args, cfg, "delta", 0.05))
    with open(args.model) as fh:
        train_report = json.load(fh)
    fn = _model_from_report(train_report)
    classification = train_report["model"]["task"] == "clf"
    train = GroupedDataset.from_csv(args.input, classification=classification)
    test = GroupedDataset.from_csv(args.test, classification=classification)
    gap = generalization_gap(fn, train, test, ell, alpha, delta)
    report = {"task": "gap", "report": gap.to_json()}
    _emit(report, args.output)
    return EXIT_OK


def cmd_demo_instability(args) -> int:
    alpha = args.alpha if args.alpha is not None else 0.05
    report = {"task": "demo-instability", **instability_demo(alpha)}
    _emit(report, args.output)
    return EXIT_OK


def cmd_gen_synth(args) -> int:
    dataset, params = gen_synth(
        task=args.task, K=args.groups, n_per_group=args.n, d=args.d,
        skew=args.skew, overlap=args.overlap, scale=args.scale,
        noise=args.noise, seed=args.seed if args.seed is not None else 0,
    )
    dataset.to_csv(args.output)
    with open(args.output + ".meta.json", "w") as fh:
        fh.write(json.dumps(params, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexifair",
        description="Lexicographically fair training over overlapping groups",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-reg", help="train a fair linear model")
    _add_common(p, oracle=True)
    p.add_argument("--radius", type=float, help="parameter ball radius")
    p.add_argument("--loss", choices=("squared", "logistic"))
    p.set_defaults(fn=cmd_train_reg)

    p = sub.add_parser("train-clf", help="train a fair randomized classifier")
    _add_common(p, delta=True, oracle=True)
    p.set_defaults(fn=cmd_train_clf)

    p = sub.add_parser("oracle", help="exact per-level optima of a loss matrix")
    _add_common(p)
    p.add_argument("--from-dataset", action="store_true",
                   help="treat --input as a dataset CSV and build the stump loss matrix")
    p.add_argument("--matrix-out", help="also write the built loss matrix CSV")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("certify", help="verify a training report against exact optima")
    _add_common(p, oracle=True)
    p.set_defaults(fn=cmd_certify)

    p = sub.add_parser("gap", help="train/test generalization audit")
    _add_common(p, delta=True)
    p.add_argument("--test", required=True, help="held-out dataset CSV")
    p.add_argument("--model", required=True, help="training report JSON")
    p.set_defaults(fn=cmd_gap)

    p = sub.add_parser("demo-instability",
                       help="show why pointwise value approximation is ill-posed")
    p.add_argument("--alpha", type=float)
    p.add_argument("--output")
    p.set_defaults(fn=cmd_demo_instability)

    p = sub.add_parser("gen-synth", help="generate a seeded synthetic dataset")
    p.add_argument("--task", choices=("reg", "clf"), required=True)
    p.add_argument("--groups", type=int, required=True)
    p.add_argument("--n", type=int, required=True, help="points per group")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--skew", type=float, default=0.0)
    p.add_argument("--overlap", type=float, default=0.0)
    p.add_argument("--scale", type=float, default=0.3)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", required=True, help="dataset CSV path")
    p.set_defaults(fn=cmd_gen_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (DatasetError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
