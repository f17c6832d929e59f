"""Policy intersection: advisor-weighted action selection.

Discrete case: element-wise product of two probability vectors, normalized.
Continuous case: sample a set of candidate actions from the learning actor,
weight each by the advisor's density, and resample one from the induced
categorical distribution. Shaping alters behavior only; learning updates are
never touched. Densities are compared on the pre-squash Gaussians (both
policies share the same tanh squash, so the change-of-variables factor is
common to every candidate ranking except for its own tilt; the product of
the underlying Gaussians is the distribution the reweighting must converge
to, and is what the analytic oracle tests check).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .artifacts import load_actor_artifact
from .rng import SplitMix64
from .sac import SquashedGaussianActor

# smallest positive normal double: below this, a candidate-weight sum is
# treated as an empty intersection
DENSITY_FLOOR = 2.2250738585072014e-308


class EmptyIntersectionError(ValueError):
    """The two discrete policies put no common mass on any action."""


def intersect_discrete(pi_l: np.ndarray, pi_a: np.ndarray) -> np.ndarray:
    """Element-wise product of two discrete policies, renormalized.

    Raises EmptyIntersectionError when the product vanishes everywhere;
    precedence between the two policies is the caller's call.
    """
    pi_l = np.asarray(pi_l, dtype=np.float64)
    pi_a = np.asarray(pi_a, dtype=np.float64)
    if pi_l.shape != pi_a.shape:
        raise ValueError(f"policy lengths differ: {pi_l.shape} vs {pi_a.shape}")
    for name, vec in (("actor", pi_l), ("advisor", pi_a)):
        if np.any(vec < 0.0):
            raise ValueError(f"{name} policy has negative entries")
        if abs(float(vec.sum()) - 1.0) > 1e-9:
            raise ValueError(f"{name} policy does not sum to 1")
    product = pi_l * pi_a
    total = float(product.sum())
    if total == 0.0:
        raise EmptyIntersectionError("policies share no action with positive mass")
    return product / total


class Advisor:
    """A frozen actor used to weight the learner's candidate actions."""

    def __init__(self, actor: SquashedGaussianActor, advisor_id):
        self.actor = actor
        self.advisor_id = advisor_id

    @classmethod
    def from_artifact(cls, path, expected_obs_dim: int | None = None) -> "Advisor":
        actor, meta = load_actor_artifact(path)
        if expected_obs_dim is not None and actor.obs_dim != expected_obs_dim:
            raise ValueError(
                f"{path}: advisor observes {actor.obs_dim} values, "
                f"environment produces {expected_obs_dim}"
            )
        return cls(actor, meta["variant_seed"])

    def gaussian_log_density(self, obs, u):
        return self.actor.gaussian_log_density(obs, u)

    def checksum(self) -> str:
        """Digest of the frozen parameters; used to assert advisors stay unmodified."""
        h = hashlib.sha256()
        for p in self.actor.net.parameters():
            h.update(np.ascontiguousarray(p).tobytes())
        return h.hexdigest()


@dataclass
class IntersectionConfig:
    k: int = 64
    density_floor: float = DENSITY_FLOOR
    advisors: tuple = ()

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"candidate count must be >= 1, got {self.k}")
        if self.density_floor < 0.0:
            raise ValueError("density floor must be >= 0")


@dataclass
class ActResult:
    action: np.ndarray
    advisor_id: object = None
    fallback: bool = False
    candidate_index: int | None = None


def pick_advisor(advisors, rng: SplitMix64):
    """Uniform pick; one advisor per decision when several are available."""
    if not advisors:
        raise ValueError("advisor set is empty")
    return advisors[rng.randint(len(advisors))]


def intersect_continuous(actor: SquashedGaussianActor, advisor, obs,
                         cfg: IntersectionConfig, rng: SplitMix64) -> ActResult:
    """One shaped decision.

    Draw k candidates from the actor, weight them by the advisor's density,
    and resample. When the weights underflow to nothing (the continuous
    analogue of an empty intersection) the actor keeps the last word: the
    returned action is a fresh plain sample.
    """
    actions, pre_squash = actor.sample_candidates(obs, cfg.k, rng)
    log_d = advisor.gaussian_log_density(obs, pre_squash)
    m = float(np.max(log_d))
    log_floor = math.log(cfg.density_floor) if cfg.density_floor > 0.0 else -math.inf
    if math.isfinite(m):
        w = np.exp(log_d - m)
        total = float(w.sum())
        # total >= 1 by construction; the raw weight sum is exp(m)*total
        if m + math.log(total) >= log_floor:
            r = rng.uniform() * total
            idx = int(np.searchsorted(np.cumsum(w), r, side="right"))
            idx = min(idx, cfg.k - 1)
            return ActResult(actions[idx], getattr(advisor, "advisor_id", None), False, idx)
    a, _ = actor.sample(obs, rng)
    return ActResult(a, getattr(advisor, "advisor_id", None), True, None)


def shaped_act(actor: SquashedGaussianActor, cfg: IntersectionConfig | None, obs,
               rng: SplitMix64, shaping_enabled: bool = True) -> ActResult:
    """Acting-time entry point: plain actor sample, or advisor-shaped pick.

    With shaping disabled (or no advisors configured) this consumes exactly
    the draws of a plain stochastic sample, so unshaped runs are bit-identical
    to an agent acting on its own.
    """
    if not shaping_enabled or cfg is None or not cfg.advisors:
        a, _ = actor.sample(obs, rng)
        return ActResult(a)
    advisor = pick_advisor(cfg.advisors, rng)
    return intersect_continuous(actor, advisor, obs, cfg, rng)
