"""Experiment driver: advisor training, transfer conditions, aggregation.

A condition run is a pure function of (master seed, config): per-run seeds
are derived from the master seed and the run index, every file is written
with deterministic formatting, and a manifest records config hash plus a
checksum for each output file. Runs inside a condition are independent and
may execute in parallel worker processes without changing any output byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import artifacts, env as env_mod, shaping
from .env import OBS_DIM, CompressorEnv, DemandCurve
from .rng import SplitMix64, derive_seed
from .sac import SacAgent, SacConfig
from .variants import VariantSpec, make_variant

CONDITIONS = ("scratch", "load", "pi_single", "pi_multi")
ACTION_DIM = 3

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MISSING_ARTIFACT = 2
EXIT_IO = 3

OUTPUT_ROOT_ENV = "TANKLAB_OUT_ROOT"


class ConfigError(Exception):
    """Bad or inconsistent experiment configuration (exit code 1)."""


class MissingArtifactError(Exception):
    """A required policy artifact is absent (exit code 2)."""


@dataclass(frozen=True)
class ExperimentConfig:
    condition: str = "scratch"
    advisee_seed: int = 17
    advisor_seeds: tuple[int, ...] = tuple(range(1, 17))
    n_advisors: int | None = None  # pi_multi only; None -> all available
    lam: float = 0.5
    base_rho: float = 0.05
    episodes: int = 300
    runs: int = 10
    k: int = 64
    master_seed: int = 1
    output_dir: str = "out"
    advisor_dir: str | None = None  # default: <output_dir>/advisors
    advisor_episodes: int = 150
    eval_episodes: int = 20
    workers: int = 0  # 0 -> cpu count
    sac: SacConfig = field(default_factory=SacConfig)

    def to_doc(self) -> dict:
        doc = {k: v for k, v in self.__dict__.items() if k != "sac"}
        doc["advisor_seeds"] = list(self.advisor_seeds)
        doc["sac"] = self.sac.to_doc()
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        if "advisor_seeds" in doc:
            doc["advisor_seeds"] = tuple(doc["advisor_seeds"])
        if "sac" in doc:
            doc["sac"] = SacConfig.from_doc(doc["sac"])
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**doc)

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_doc(), sort_keys=True).encode()
        ).hexdigest()

    def advisors_root(self) -> Path:
        if self.advisor_dir is not None:
            return Path(self.advisor_dir)
        return Path(self.output_dir) / "advisors"

    def condition_label(self) -> str:
        if self.condition == "pi_multi":
            n = self.n_advisors if self.n_advisors is not None else len(self.available_advisors())
            return f"pi_multi_{n:02d}"
        return self.condition

    def available_advisors(self) -> tuple[int, ...]:
        """Advisor seeds usable for this advisee (collision excluded)."""
        return tuple(s for s in sorted(self.advisor_seeds) if s != self.advisee_seed)

    def validate(self):
        if self.condition not in CONDITIONS:
            raise ConfigError(f"condition must be one of {CONDITIONS}, got {self.condition!r}")
        if self.runs < 1 or self.episodes < 0:
            raise ConfigError("runs must be >= 1 and episodes >= 0")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lambda must be in [0, 1], got {self.lam}")
        if self.condition != "scratch":
            if not self.available_advisors():
                raise ConfigError(
                    "advisor set is empty after excluding the advisee seed "
                    f"{self.advisee_seed}"
                )
            if self.condition == "pi_multi" and self.n_advisors is not None:
                if self.n_advisors < 1 or self.n_advisors > len(self.available_advisors()):
                    raise ConfigError(
                        f"pi_multi needs 1..{len(self.available_advisors())} advisors, "
                        f"got {self.n_advisors}"
                    )


def seed_for_run(master_seed: int, run_index: int) -> int:
    """Per-run seed, shared across conditions so runs pair up by index."""
    return derive_seed(master_seed, "run", run_index)


def episode_seed(run_seed: int, episode: int) -> int:
    return derive_seed(run_seed, "episode", episode)


# ---------------------------------------------------------------------------
# training loops


def run_training(variant: VariantSpec, sac_cfg: SacConfig, episodes: int, run_seed: int,
                 shaping_cfg: shaping.IntersectionConfig | None = None,
                 agent: SacAgent | None = None,
                 demand: DemandCurve | None = None,
                 on_episode=None):
    """Train one agent for `episodes` episodes; returns (agent, per-episode returns).

    Shaping (when configured) only changes which action gets executed; the
    stored experience carries the executed action mapped back to action
    space, and updates are plain SAC either way.
    """
    env = CompressorEnv(variant, demand=demand)
    rng = SplitMix64(derive_seed(run_seed, "agent"))
    if agent is None:
        agent = SacAgent(OBS_DIM, ACTION_DIM, sac_cfg, rng)
    else:
        agent.rng = rng
    shaping_on = shaping_cfg is not None and bool(shaping_cfg.advisors)
    returns = []
    for ep in range(episodes):
        obs = env.reset(episode_seed(run_seed, ep))
        total = 0.0
        done = False
        while not done:
            act = shaping.shaped_act(agent.actor, shaping_cfg, obs, agent.rng, shaping_on)
            step = env.step(act.action)
            agent.observe(
                obs,
                np.asarray(step.info.executed_action),
                step.reward,
                step.observation,
                step.done,
            )
            agent.maybe_update()
            obs = step.observation
            total += step.reward
            done = step.done
        returns.append(total)
        if on_episode is not None:
            on_episode(ep, total)
    return agent, returns


def evaluate_actor(actor, variant: VariantSpec, episodes: int, eval_seed: int,
                   demand: DemandCurve | None = None) -> list[float]:
    """Deterministic-policy rollouts (no learning, no shaping); returns per-episode returns."""
    env = CompressorEnv(variant, demand=demand)
    returns = []
    for ep in range(episodes):
        obs = env.reset(derive_seed(eval_seed, "eval", ep))
        total = 0.0
        done = False
        while not done:
            step = env.step(actor.deterministic(obs))
            obs = step.observation
            total += step.reward
            done = step.done
        returns.append(total)
    return returns


# ---------------------------------------------------------------------------
# curves and manifests


def write_curve_header(path: Path):
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerow(("episode", "return_kj"))


def append_curve_row(path: Path, episode: int, value: float):
    with open(path, "a", newline="") as fh:
        csv.writer(fh).writerow((episode, repr(value)))


def load_curve(path) -> list[float]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return [float(row[1]) for row in reader]


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(root: Path, files, config_doc: dict, extra: dict | None = None):
    """Record every output file with its checksum; returns the manifest path."""
    root = Path(root)
    doc = {
        "config": config_doc,
        "config_sha256": hashlib.sha256(
            json.dumps(config_doc, sort_keys=True).encode()
        ).hexdigest(),
        "files": {
            str(Path(f).relative_to(root)): file_sha256(f)
            for f in sorted(files, key=lambda p: str(p))
        },
    }
    if extra:
        doc.update(extra)
    path = root / "manifest.json"
    path.write_text(json.dumps(doc, sort_keys=True, indent=1))
    return path


# ---------------------------------------------------------------------------
# advisor training


def train_advisor(seed: int, cfg: ExperimentConfig, out_dir: Path) -> list[Path]:
    """Train one advisor on its own variant; writes actor, trainer state, curve, meta."""
    variant = make_variant(seed, cfg.lam, cfg.base_rho)
    run_seed = derive_seed(cfg.master_seed, "advisor", seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    curve_path = out_dir / "curve.csv"
    write_curve_header(curve_path)
    agent, returns = run_training(
        variant, cfg.sac, cfg.advisor_episodes, run_seed,
        on_episode=lambda ep, val: append_curve_row(curve_path, ep, val),
    )
    actor_path = out_dir / "actor.json"
    trainer_path = out_dir / "trainer.json"
    artifacts.save_actor_artifact(actor_path, agent.actor, seed)
    artifacts.save_trainer_state(trainer_path, agent)
    meta_path = out_dir / "meta.json"
    meta_path.write_text(json.dumps({
        "variant_seed": seed,
        "variant": json.loads(variant.to_json()),
        "episodes": cfg.advisor_episodes,
        "run_seed": run_seed,
        "config_sha256": cfg.config_hash(),
    }, sort_keys=True))
    return [actor_path, trainer_path, curve_path, meta_path]


def _advisor_job(args):
    seed, cfg_doc, out_dir = args
    cfg = ExperimentConfig.from_doc(cfg_doc)
    files = train_advisor(seed, cfg, Path(out_dir))
    return [str(f) for f in files]


def train_advisors(cfg: ExperimentConfig) -> Path:
    """Train every advisor seed in the config; returns the manifest path."""
    if not cfg.advisor_seeds:
        raise ConfigError("no advisor seeds configured")
    root = cfg.advisors_root()
    root.mkdir(parents=True, exist_ok=True)
    jobs = [
        (seed, cfg.to_doc(), str(root / f"seed_{seed:03d}"))
        for seed in sorted(cfg.advisor_seeds)
    ]
    results = _run_jobs(_advisor_job, jobs, cfg.workers)
    files = [Path(f) for job_files in results for f in job_files]
    return write_manifest(root, files, cfg.to_doc(), {
        "advisor_seeds": sorted(cfg.advisor_seeds),
    })


def advisor_actor_path(root: Path, seed: int) -> Path:
    return Path(root) / f"seed_{seed:03d}" / "actor.json"


def advisor_trainer_path(root: Path, seed: int) -> Path:
    return Path(root) / f"seed_{seed:03d}" / "trainer.json"


# ---------------------------------------------------------------------------
# transfer conditions


def advisor_seed_for_run(cfg: ExperimentConfig, run_index: int) -> int:
    """Single-advisor conditions rotate through the available advisors."""
    available = cfg.available_advisors()
    return available[run_index % len(available)]


def advisors_for_run(cfg: ExperimentConfig, run_index: int) -> tuple[int, ...]:
    if cfg.condition == "scratch":
        return ()
    if cfg.condition in ("load", "pi_single"):
        return (advisor_seed_for_run(cfg, run_index),)
    available = cfg.available_advisors()
    n = cfg.n_advisors if cfg.n_advisors is not None else len(available)
    return available[:n]


def _check_artifacts(cfg: ExperimentConfig):
    root = cfg.advisors_root()
    needed = set()
    for r in range(cfg.runs):
        needed.update(advisors_for_run(cfg, r))
    for seed in sorted(needed):
        path = advisor_actor_path(root, seed)
        if not path.exists():
            raise MissingArtifactError(f"advisor artifact not found: {path}")
        if cfg.condition == "load" and not advisor_trainer_path(root, seed).exists():
            # actor-only restore is allowed; flagged per run in the manifest
            pass


def _execute_run(args) -> dict:
    """One condition run; executed possibly in a worker process."""
    cfg_doc, run_index, out_dir = args
    cfg = ExperimentConfig.from_doc(cfg_doc)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    variant = make_variant(cfg.advisee_seed, cfg.lam, cfg.base_rho)
    run_seed = seed_for_run(cfg.master_seed, run_index)
    advisor_seeds = advisors_for_run(cfg, run_index)
    root = cfg.advisors_root()

    agent = None
    shaping_cfg = None
    restored_full_state = None
    rng = SplitMix64(derive_seed(run_seed, "agent"))
    if cfg.condition == "load":
        actor, _ = artifacts.load_actor_artifact(advisor_actor_path(root, advisor_seeds[0]))
        agent = SacAgent(OBS_DIM, ACTION_DIM, cfg.sac, rng, actor=actor)
        trainer = advisor_trainer_path(root, advisor_seeds[0])
        restored_full_state = trainer.exists()
        if restored_full_state:
            artifacts.load_trainer_state(trainer, agent)
    elif cfg.condition in ("pi_single", "pi_multi"):
        advisors = tuple(
            shaping.Advisor.from_artifact(advisor_actor_path(root, s), OBS_DIM)
            for s in advisor_seeds
        )
        shaping_cfg = shaping.IntersectionConfig(k=cfg.k, advisors=advisors)

    curve_path = out_dir / "curve.csv"
    write_curve_header(curve_path)
    agent, returns = run_training(
        variant, cfg.sac, cfg.episodes, run_seed,
        shaping_cfg=shaping_cfg, agent=agent,
        on_episode=lambda ep, val: append_curve_row(curve_path, ep, val),
    )
    eval_returns = evaluate_actor(
        agent.actor, variant, cfg.eval_episodes, derive_seed(run_seed, "final-eval")
    )
    meta = {
        "condition": cfg.condition_label(),
        "run_index": run_index,
        "run_seed": run_seed,
        "advisor_seeds": list(advisor_seeds),
        "advisee_seed": cfg.advisee_seed,
        "advisee_excluded_from_advisors": cfg.advisee_seed in cfg.advisor_seeds,
        "episodes": cfg.episodes,
        "eval_mean_return_kj": float(np.mean(eval_returns)) if eval_returns else None,
        "config_sha256": cfg.config_hash(),
    }
    if restored_full_state is not None:
        meta["restored_full_state"] = restored_full_state
    meta_path = out_dir / "meta.json"
    meta_path.write_text(json.dumps(meta, sort_keys=True))
    return {"files": [str(curve_path), str(meta_path)], "meta": meta}


def run_condition(cfg: ExperimentConfig) -> Path:
    """Execute all runs of one condition; returns the condition manifest path."""
    cfg.validate()
    if cfg.condition != "scratch":
        _check_artifacts(cfg)
    label = cfg.condition_label()
    cond_root = Path(cfg.output_dir) / "runs" / label
    cond_root.mkdir(parents=True, exist_ok=True)
    jobs = [
        (cfg.to_doc(), r, str(cond_root / f"run_{r:02d}"))
        for r in range(cfg.runs)
    ]
    results = _run_jobs(_execute_run, jobs, cfg.workers)
    files = [Path(f) for res in results for f in res["files"]]
    return write_manifest(cond_root, files, cfg.to_doc(), {
        "condition": label,
        "runs": [res["meta"] for res in sorted(results, key=lambda m: m["meta"]["run_index"])],
    })


def _run_jobs(fn, jobs, workers: int):
    if workers == 0:
        workers = os.cpu_count() or 1
    workers = min(workers, len(jobs))
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    import multiprocessing as mp

    os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
    os.environ.setdefault("OMP_NUM_THREADS", "1")
    ctx = mp.get_context("spawn")
    with ctx.Pool(workers) as pool:
        return pool.map(fn, jobs)


# ---------------------------------------------------------------------------
# aggregation and plot data


def sliding_mean(values, window: int = 10) -> list[float]:
    """Trailing mean over up to `window` past values (plot smoothing only)."""
    out = []
    acc = 0.0
    vals = list(values)
    for i, v in enumerate(vals):
        acc += v
        if i >= window:
            acc -= vals[i - window]
        out.append(acc / min(i + 1, window))
    return out


def aggregate(curves_by_condition: dict[str, list[list[float]]]) -> dict:
    """Per-episode mean/std across runs per condition, plus smoothed means."""
    summary = {}
    for condition, curves in curves_by_condition.items():
        if not curves:
            raise ValueError(f"no curves for condition {condition!r}")
        lengths = {len(c) for c in curves}
        if len(lengths) != 1:
            raise ValueError(f"curves of unequal length for condition {condition!r}")
        arr = np.array(curves)
        mean = arr.mean(axis=0)
        std = arr.std(axis=0)  # population std: one run -> 0
        summary[condition] = {
            "runs": len(curves),
            "episodes": arr.shape[1],
            "mean": [float(x) for x in mean],
            "std": [float(x) for x in std],
            "smoothed_mean": sliding_mean(mean),
        }
    return summary


def collect_condition_curves(runs_root) -> dict[str, list[list[float]]]:
    """Read every runs/<condition>/run_*/curve.csv under a runs directory."""
    runs_root = Path(runs_root)
    out = {}
    for cond_dir in sorted(p for p in runs_root.iterdir() if p.is_dir()):
        curves = [
            load_curve(run_dir / "curve.csv")
            for run_dir in sorted(cond_dir.glob("run_*"))
            if (run_dir / "curve.csv").exists()
        ]
        if curves:
            out[cond_dir.name] = curves
    if not out:
        raise MissingArtifactError(f"no run curves found under {runs_root}")
    return out


def emit_plot_data(summary: dict, out_dir) -> list[Path]:
    """One CSV per condition, a combined CSV, and a plain-text series index."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    conditions = sorted(summary)
    files = []
    for condition in conditions:
        entry = summary[condition]
        path = out_dir / f"{condition}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("episode", "mean_return_kj", "std_return_kj", "smoothed_mean"))
            for ep in range(entry["episodes"]):
                writer.writerow((
                    ep,
                    repr(entry["mean"][ep]),
                    repr(entry["std"][ep]),
                    repr(entry["smoothed_mean"][ep]),
                ))
        files.append(path)

    episodes = {summary[c]["episodes"] for c in conditions}
    combined = out_dir / "combined.csv"
    with open(combined, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["episode"]
        for c in conditions:
            header += [f"{c}_mean", f"{c}_std", f"{c}_smoothed"]
        writer.writerow(header)
        for ep in range(max(episodes)):
            row = [ep]
            for c in conditions:
                entry = summary[c]
                if ep < entry["episodes"]:
                    row += [repr(entry["mean"][ep]), repr(entry["std"][ep]),
                            repr(entry["smoothed_mean"][ep])]
                else:
                    row += ["", "", ""]
            writer.writerow(row)
    files.append(combined)

    index = out_dir / "index.txt"
    with open(index, "w") as fh:
        for c in conditions:
            fh.write(f"{c}\t{c}.csv\n")
        fh.write(f"combined\tcombined.csv\n")
    files.append(index)
    return files
