"""On-disk policy artifacts.

An actor artifact is a JSON document with the network parameters, the seed of
the variant it was trained on, and the observation normalization constants.
Trainer state (critics, targets, optimizer moments, temperature) is a
separate file so a run can either load just the frozen actor (advisor use)
or fully resume learning.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import env as env_mod
from .nets import AdamState, Mlp
from .sac import SacAgent, SquashedGaussianActor

ARTIFACT_VERSION = 1

OBS_NORMALIZATION = {
    "pressure_center": env_mod.PRESSURE_CENTER,
    "pressure_scale": env_mod.PRESSURE_SCALE,
    "rpm_max": 600.0,
}


def actor_artifact_doc(actor: SquashedGaussianActor, variant_seed: int) -> dict:
    return {
        "format_version": ARTIFACT_VERSION,
        "kind": "actor",
        "variant_seed": variant_seed,
        "obs_dim": actor.obs_dim,
        "action_dim": actor.action_dim,
        "log_sigma_min": actor.log_sigma_min,
        "log_sigma_max": actor.log_sigma_max,
        "squash_eps": actor.squash_eps,
        "normalization": OBS_NORMALIZATION,
        "network": actor.net.to_doc(),
    }


def save_actor_artifact(path, actor: SquashedGaussianActor, variant_seed: int):
    Path(path).write_text(json.dumps(actor_artifact_doc(actor, variant_seed), sort_keys=True))


def load_actor_artifact(path):
    """Load an actor artifact; returns (actor, metadata dict)."""
    path = Path(path)
    doc = json.loads(path.read_text())
    if doc.get("format_version") != ARTIFACT_VERSION or doc.get("kind") != "actor":
        raise ValueError(f"{path}: not a version-{ARTIFACT_VERSION} actor artifact")
    actor = SquashedGaussianActor(
        Mlp.from_doc(doc["network"]),
        doc["action_dim"],
        log_sigma_min=doc["log_sigma_min"],
        log_sigma_max=doc["log_sigma_max"],
        squash_eps=doc["squash_eps"],
    )
    return actor, doc


def trainer_state_doc(agent: SacAgent) -> dict:
    return {
        "format_version": ARTIFACT_VERSION,
        "kind": "trainer_state",
        "q1": agent.q1.to_doc(),
        "q2": agent.q2.to_doc(),
        "q1_target": agent.q1_target.to_doc(),
        "q2_target": agent.q2_target.to_doc(),
        "opt_actor": agent.opt_actor.to_doc(),
        "opt_q1": agent.opt_q1.to_doc(),
        "opt_q2": agent.opt_q2.to_doc(),
        "opt_alpha": agent.opt_alpha.to_doc(),
        "log_alpha": float(agent.log_alpha[0]),
        "total_env_steps": agent.total_env_steps,
        "updates_done": agent.updates_done,
    }


def save_trainer_state(path, agent: SacAgent):
    Path(path).write_text(json.dumps(trainer_state_doc(agent), sort_keys=True))


def load_trainer_state(path, agent: SacAgent):
    """Restore critics, targets, optimizers and temperature into `agent`."""
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != ARTIFACT_VERSION or doc.get("kind") != "trainer_state":
        raise ValueError(f"{path}: not a version-{ARTIFACT_VERSION} trainer state")
    agent.q1 = Mlp.from_doc(doc["q1"])
    agent.q2 = Mlp.from_doc(doc["q2"])
    agent.q1_target = Mlp.from_doc(doc["q1_target"])
    agent.q2_target = Mlp.from_doc(doc["q2_target"])
    agent.opt_actor = _load_adam(doc["opt_actor"], agent.actor.net.parameters())
    agent.opt_q1 = _load_adam(doc["opt_q1"], agent.q1.parameters())
    agent.opt_q2 = _load_adam(doc["opt_q2"], agent.q2.parameters())
    agent.log_alpha = np.array([doc["log_alpha"]])
    agent.opt_alpha = _load_adam(doc["opt_alpha"], [agent.log_alpha])
    agent.total_env_steps = doc["total_env_steps"]
    agent.updates_done = doc["updates_done"]


def _load_adam(doc: dict, params) -> AdamState:
    state = AdamState(params, doc["lr"])
    state.load_doc(doc)
    return state
