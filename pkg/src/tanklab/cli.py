"""Command-line experiment driver.

Subcommands: train-advisors, run, aggregate, plot-data, eval, bench. Every
experiment field is settable by flag; --config loads a JSON document first
and explicit flags override it. TANKLAB_OUT_ROOT overrides the output root
unless --output-dir is given explicitly. Exit codes: 0 success, 1 bad
configuration, 2 missing artifact, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import harness
from .harness import (
    ConfigError,
    ExperimentConfig,
    MissingArtifactError,
    OUTPUT_ROOT_ENV,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def parse_seed_list(text: str) -> tuple[int, ...]:
    """Parse '1-16' / '1,2,7' / '1-4,9' into a seed tuple."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ConfigError(f"no seeds in {text!r}")
    return tuple(seeds)


_CONFIG_FLAGS = (
    # (flag, config key, converter)
    ("--condition", "condition", str),
    ("--advisee-seed", "advisee_seed", int),
    ("--advisor-seeds", "advisor_seeds", parse_seed_list),
    ("--n-advisors", "n_advisors", int),
    ("--lambda", "lam", float),
    ("--base-rho", "base_rho", float),
    ("--episodes", "episodes", int),
    ("--runs", "runs", int),
    ("--k", "k", int),
    ("--master-seed", "master_seed", int),
    ("--output-dir", "output_dir", str),
    ("--advisor-dir", "advisor_dir", str),
    ("--advisor-episodes", "advisor_episodes", int),
    ("--eval-episodes", "eval_episodes", int),
    ("--workers", "workers", int),
)

_SAC_FLAGS = (
    ("--gamma", "gamma", float),
    ("--tau", "tau", float),
    ("--lr", "lr", float),
    ("--batch-size", "batch_size", int),
    ("--buffer-capacity", "buffer_capacity", int),
    ("--warmup-steps", "warmup_steps", int),
    ("--updates-per-step", "updates_per_step", int),
    ("--target-entropy", "target_entropy", float),
    ("--alpha-init", "alpha_init", float),
    ("--reward-scale", "reward_scale", float),
    ("--hidden", "hidden", lambda s: tuple(int(x) for x in s.split(","))),
)


def _add_config_flags(parser):
    parser.add_argument("--config", help="JSON config file; flags override its fields")
    for flag, key, conv in _CONFIG_FLAGS:
        parser.add_argument(flag, dest=key, type=conv, default=None)
    for flag, key, conv in _SAC_FLAGS:
        parser.add_argument(flag, dest=f"sac_{key}", type=conv, default=None)
    parser.add_argument("--fixed-alpha", dest="sac_auto_alpha", action="store_const",
                        const=False, default=None,
                        help="disable automatic entropy-temperature tuning")


def build_config(args) -> ExperimentConfig:
    doc: dict = {}
    if args.config:
        try:
            doc.update(json.loads(Path(args.config).read_text()))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    sac_doc = dict(doc.get("sac", {}))
    for _, key, _ in _CONFIG_FLAGS:
        val = getattr(args, key, None)
        if val is not None:
            doc[key] = val
    for _, key, _ in _SAC_FLAGS:
        val = getattr(args, f"sac_{key}", None)
        if val is not None:
            sac_doc[key] = val
    if getattr(args, "sac_auto_alpha", None) is not None:
        sac_doc["auto_alpha"] = args.sac_auto_alpha
    if sac_doc:
        doc["sac"] = sac_doc
    if getattr(args, "output_dir", None) is None and OUTPUT_ROOT_ENV in os.environ:
        doc["output_dir"] = os.environ[OUTPUT_ROOT_ENV]
    if "advisor_seeds" in doc and not isinstance(doc["advisor_seeds"], tuple):
        doc["advisor_seeds"] = tuple(doc["advisor_seeds"])
    try:
        return ExperimentConfig.from_doc(doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def build_parser() -> _Parser:
    parser = _Parser(prog="tanklab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train-advisors", help="train advisor policies on their seeds")
    _add_config_flags(p_train)

    p_run = sub.add_parser("run", help="run one transfer condition")
    _add_config_flags(p_run)

    p_agg = sub.add_parser("aggregate", help="aggregate run curves into a summary table")
    _add_config_flags(p_agg)
    p_agg.add_argument("--runs-dir", default=None, help="default: <output-dir>/runs")
    p_agg.add_argument("--summary-out", default=None, help="default: <output-dir>/aggregate/summary.json")

    p_plot = sub.add_parser("plot-data", help="emit per-condition CSV plot data")
    _add_config_flags(p_plot)
    p_plot.add_argument("--runs-dir", default=None)
    p_plot.add_argument("--summary", default=None, help="existing summary.json to plot")
    p_plot.add_argument("--plot-out", default=None, help="default: <output-dir>/aggregate")

    p_eval = sub.add_parser("eval", help="evaluate an actor artifact on a variant")
    _add_config_flags(p_eval)
    p_eval.add_argument("--artifact", required=True)
    p_eval.add_argument("--eval-seed", type=int, default=1)

    p_bench = sub.add_parser("bench", help="benchmark the kernel backends")
    p_bench.add_argument("--repeats", type=int, default=200)
    p_bench.add_argument("--batch-size", type=int, default=256)
    return parser


def cmd_train_advisors(args) -> int:
    cfg = build_config(args)
    manifest = harness.train_advisors(cfg)
    print(f"trained {len(cfg.advisor_seeds)} advisors -> {manifest}")
    return harness.EXIT_OK


def cmd_run(args) -> int:
    cfg = build_config(args)
    if getattr(args, "condition", None) is None and cfg.condition is None:
        raise ConfigError("a condition is required (flag --condition or config field)")
    manifest = harness.run_condition(cfg)
    print(f"{cfg.condition_label()}: {cfg.runs} runs -> {manifest}")
    return harness.EXIT_OK


def cmd_aggregate(args) -> int:
    cfg = build_config(args)
    runs_dir = Path(args.runs_dir) if args.runs_dir else Path(cfg.output_dir) / "runs"
    curves = harness.collect_condition_curves(runs_dir)
    summary = harness.aggregate(curves)
    out = Path(args.summary_out) if args.summary_out else Path(cfg.output_dir) / "aggregate" / "summary.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(summary, sort_keys=True))
    for condition in sorted(summary):
        entry = summary[condition]
        tail = entry["mean"][-1] if entry["mean"] else float("nan")
        print(f"{condition}: runs={entry['runs']} episodes={entry['episodes']} "
              f"final_mean_return_kj={tail:.1f}")
    print(f"summary -> {out}")
    return harness.EXIT_OK


def cmd_plot_data(args) -> int:
    cfg = build_config(args)
    if args.summary:
        summary = json.loads(Path(args.summary).read_text())
    else:
        runs_dir = Path(args.runs_dir) if args.runs_dir else Path(cfg.output_dir) / "runs"
        summary = harness.aggregate(harness.collect_condition_curves(runs_dir))
    out_dir = Path(args.plot_out) if args.plot_out else Path(cfg.output_dir) / "aggregate"
    files = harness.emit_plot_data(summary, out_dir)
    harness.write_manifest(out_dir, files, cfg.to_doc())
    print(f"wrote {len(files)} plot files -> {out_dir}")
    return harness.EXIT_OK


def cmd_eval(args) -> int:
    from . import artifacts
    from .variants import make_variant

    cfg = build_config(args)
    path = Path(args.artifact)
    if not path.exists():
        raise MissingArtifactError(f"artifact not found: {path}")
    actor, meta = artifacts.load_actor_artifact(path)
    variant = make_variant(cfg.advisee_seed, cfg.lam, cfg.base_rho)
    returns = harness.evaluate_actor(actor, variant, cfg.eval_episodes, args.eval_seed)
    result = {
        "artifact": str(path),
        "trained_on_seed": meta["variant_seed"],
        "evaluated_on_seed": cfg.advisee_seed,
        "episodes": cfg.eval_episodes,
        "mean_return_kj": sum(returns) / len(returns) if returns else None,
        "returns_kj": returns,
    }
    print(json.dumps(result, sort_keys=True))
    return harness.EXIT_OK


def cmd_bench(args) -> int:
    from . import bench

    bench.run_benchmark(repeats=args.repeats, batch_size=args.batch_size)
    return harness.EXIT_OK


_COMMANDS = {
    "train-advisors": cmd_train_advisors,
    "run": cmd_run,
    "aggregate": cmd_aggregate,
    "plot-data": cmd_plot_data,
    "eval": cmd_eval,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return harness.EXIT_CONFIG
    except MissingArtifactError as exc:
        print(f"missing artifact: {exc}", file=sys.stderr)
        return harness.EXIT_MISSING_ARTIFACT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return harness.EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
