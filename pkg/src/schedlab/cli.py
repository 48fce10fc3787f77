"""Command-line harness for trace generation, model training and scheduling experiments.

Exit codes: 0 success, 1 validation error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import SchedLabError, ValidationError
from .evaluation import evaluate_predictions
from .experiment import ExperimentConfig, load_workload, train_test_split
from .predict.model import fit_runtime_model, load_model, save_model
from .sim import Platform, make_policy, simulate, to_sim_jobs
from .sim.metrics import METRIC_KEYS, WAIT_BUCKETS, format_outcomes
from .trace import split_window, write_trace

log = logging.getLogger("schedlab")


def _write_json(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return path


def _fit(cfg: ExperimentConfig, train):
    return fit_runtime_model(train, cfg.model, cfg.model_params(), augment_users=cfg.augment,
                             safety_margin=cfg.safety_margin,
                             walltime_cap=cfg.walltime_cap_minutes)


def cmd_generate(cfg: ExperimentConfig) -> Path:
    trace = load_workload(cfg.replace(trace=None))
    path = cfg.out_dir() / "trace.csv"
    try:
        write_trace(trace, path)
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc}") from None
    log.info("wrote %d jobs to %s", len(trace), path)
    return path


def prediction_report(model, test) -> dict:
    pred = model.predict_many(test.jobs)
    return evaluate_predictions(pred, test.column("run_time"), test.column("time_limit"))


def cmd_train(cfg: ExperimentConfig) -> dict:
    trace = load_workload(cfg)
    train, test = train_test_split(trace, cfg)
    model = _fit(cfg, train)
    out = cfg.out_dir()
    save_model(model, out / "model.json")
    doc = {"model": cfg.model, "split": cfg.split, "augment": cfg.augment,
           "n_train": len(train), "n_test": len(test)}
    doc.update(prediction_report(model, test))
    _write_json(out / "report.json", doc)
    return doc


def _require_model(cfg: ExperimentConfig):
    if not cfg.model_path:
        raise ValidationError("model_path must point to a trained model (see `schedlab train`)")
    if not Path(cfg.model_path).exists():
        raise ValidationError(f"model file not found: {cfg.model_path}")
    model = load_model(cfg.model_path)
    if cfg.safety_margin:
        model = model.with_margin(cfg.safety_margin)
    return model


def cmd_evaluate(cfg: ExperimentConfig) -> dict:
    model = _require_model(cfg)
    _, test = train_test_split(load_workload(cfg), cfg)
    doc = {"model": model.kind, "split": cfg.split, "n_test": len(test)}
    doc.update(prediction_report(model, test))
    _write_json(cfg.out_dir() / "evaluate.json", doc)
    return doc


def _run_policy(name: str, window, platform: Platform, model, cfg: ExperimentConfig):
    policy = make_policy(name, model)
    jobs = to_sim_jobs(window, platform, policy)
    return simulate(jobs, platform, policy, kill_at_walltime=cfg.kill_at_walltime)


def _write_outcome(out: Path, label: str, result) -> dict:
    doc = result.metrics.to_document()
    _write_json(out / f"metrics_{label}.json", doc)
    (out / f"outcomes_{label}.csv").write_text(format_outcomes(result.outcomes), encoding="utf-8")
    return doc


def cmd_simulate(cfg: ExperimentConfig) -> dict:
    _, window = split_window(load_workload(cfg), cfg.window_seconds)
    model = _require_model(cfg) if cfg.policy.lower() == "diws" else None
    result = _run_policy(cfg.policy, window, Platform(cfg.capacity), model, cfg)
    return _write_outcome(cfg.out_dir(), cfg.policy.lower(), result)


def improvement(candidate: float, baseline: float) -> float | None:
    """Relative change in percent; negative means the candidate is lower."""
    if baseline == 0:
        return 0.0 if candidate == 0 else None
    return 100.0 * (candidate - baseline) / baseline


def _labels(names: list[str]) -> list[str]:
    labels, seen = [], {}
    for name in names:
        base = name.lower()
        seen[base] = seen.get(base, 0) + 1
        labels.append(base if seen[base] == 1 else f"{base}_{seen[base]}")
    return labels


def format_comparison(labels, docs, improvements) -> str:
    baseline = labels[0]
    header = ["metric", *labels] + [f"improvement({lab} vs {baseline})" for lab in labels[1:]]
    rows = []
    for key in METRIC_KEYS:
        cells = [key] + [f"{docs[lab][key]:.4f}" for lab in labels]
        for lab in labels[1:]:
            value = improvements[lab][key]
            cells.append("n/a" if value is None else f"{value:+.2f}%")
        rows.append(cells)
    for label, _ in WAIT_BUCKETS:
        key = f"wait_lt_{label}"
        rows.append([key] + [str(docs[lab][key]) for lab in labels] + [""] * (len(labels) - 1))
    table = [header, *rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in table) + "\n"


def cmd_compare(cfg: ExperimentConfig) -> dict:
    names = cfg.policy_list()
    if len(names) < 2:
        raise ValidationError("compare needs at least two policies")
    history, window = split_window(load_workload(cfg), cfg.window_seconds)
    model = None
    if any(n.lower() == "diws" for n in names):
        if cfg.model_path:
            model = _require_model(cfg)
        else:
            if not history.jobs:
                raise ValidationError("no history before the scheduling window to train on")
            model = _fit(cfg, history)
    platform = Platform(cfg.capacity)
    out = cfg.out_dir()
    labels = _labels(names)
    docs, raw = {}, {}
    for name, label in zip(names, labels):
        result = _run_policy(name, window, platform, model, cfg)
        docs[label] = _write_outcome(out, label, result)
        raw[label] = result.metrics.to_document(digits=None)
    baseline = labels[0]
    # percentages come from unrounded metrics
    improvements = {
        lab: {key: improvement(raw[lab][key], raw[baseline][key]) for key in METRIC_KEYS}
        for lab in labels[1:]
    }
    for lab in improvements:
        improvements[lab] = {k: None if v is None else round(v, 4)
                             for k, v in improvements[lab].items()}
    doc = {
        "baseline": baseline,
        "n_jobs": len(window),
        "capacity": cfg.capacity,
        "metrics": docs,
        "improvement_percent": improvements,
        "wait_histogram_percent": {
            lab: {f"wait_lt_{b}": round(100.0 * docs[lab][f"wait_lt_{b}"] / len(window), 4)
                  for b, _ in WAIT_BUCKETS}
            for lab in labels
        },
    }
    _write_json(out / "compare.json", doc)
    text = format_comparison(labels, docs, improvements)
    (out / "compare.txt").write_text(text, encoding="utf-8")
    doc["table"] = text
    return doc


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "evaluate": cmd_evaluate,
            "simulate": cmd_simulate, "compare": cmd_compare}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _add_common(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="flat JSON or key=value config file")
    parser.add_argument("--seed", type=int, default=default)
    parser.add_argument("--out", default=default, help="output directory")
    parser.add_argument("--set", action="append", default=argparse.SUPPRESS if suppress else [],
                        metavar="KEY=VALUE", help="override a config key (repeatable)")
    parser.add_argument("-v", "--verbose", action="store_true",
                        default=argparse.SUPPRESS if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="schedlab", description=__doc__.splitlines()[0])
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        _add_common(sub.add_parser(name), suppress=True)
    return parser


def config_from_args(args) -> ExperimentConfig:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ValidationError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    return ExperimentConfig.build(args.config, overrides)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = config_from_args(args)
        result = COMMANDS[args.command](cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SchedLabError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    if isinstance(result, Path):
        print(result)
    elif isinstance(result, dict) and "table" in result:
        print(result["table"], end="")
    else:
        print(json.dumps(result, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
