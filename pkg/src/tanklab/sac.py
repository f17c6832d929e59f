"""Soft actor-critic for continuous actions.

Tanh-squashed Gaussian actor, twin critics with target networks, entropy
temperature auto-tuned toward a target entropy. Off-policy by construction:
updates read only the replay buffer, never the identity of whatever policy
produced the behavior (which is what makes advisor-shaped acting legal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import backends
from .nets import AdamState, Mlp
from .rng import SplitMix64

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class SacConfig:
    hidden: tuple[int, ...] = (64, 64)
    gamma: float = 0.99
    tau: float = 0.005
    lr: float = 3e-4
    batch_size: int = 256
    buffer_capacity: int = 100_000
    warmup_steps: int = 1000
    updates_per_step: int = 1
    target_entropy: float | None = None  # None -> -action_dim
    alpha_init: float = 1.0
    auto_alpha: bool = True
    reward_scale: float = 0.01
    log_sigma_min: float = -20.0
    log_sigma_max: float = 2.0
    squash_eps: float = 1e-6

    def to_doc(self) -> dict:
        doc = self.__dict__.copy()
        doc["hidden"] = list(self.hidden)
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "SacConfig":
        doc = dict(doc)
        doc["hidden"] = tuple(doc["hidden"])
        return cls(**doc)


@dataclass
class Experience:
    observation: np.ndarray
    action: np.ndarray
    reward: float  # already scaled for learning
    next_observation: np.ndarray
    done: bool


class SquashedGaussianActor:
    """Gaussian policy squashed through tanh, with density evaluation."""

    def __init__(self, net: Mlp, action_dim: int,
                 log_sigma_min=-20.0, log_sigma_max=2.0, squash_eps=1e-6):
        if net.n_outputs != 2 * action_dim:
            raise ValueError("actor net must output mean and log-sigma per action dim")
        self.net = net
        self.action_dim = action_dim
        self.obs_dim = net.n_inputs
        self.log_sigma_min = log_sigma_min
        self.log_sigma_max = log_sigma_max
        self.squash_eps = squash_eps

    @classmethod
    def create(cls, obs_dim, action_dim, hidden, rng: SplitMix64, **kwargs):
        net = Mlp.initialized((obs_dim, *hidden, 2 * action_dim), rng)
        return cls(net, action_dim, **kwargs)

    def distribution_params(self, obs: np.ndarray):
        """Mean and clamped log-sigma at one observation (or a batch)."""
        out = self.net.forward(obs)
        mu = out[..., : self.action_dim]
        log_sigma = np.clip(out[..., self.action_dim:], self.log_sigma_min, self.log_sigma_max)
        return mu, log_sigma

    def sample(self, obs: np.ndarray, rng: SplitMix64):
        """Stochastic action and its corrected log density. Consumes action_dim normals."""
        mu, log_sigma = self.distribution_params(obs)
        eps = rng.normals(self.action_dim)
        u = mu + np.exp(log_sigma) * eps
        a = np.tanh(u)
        logp = float(
            np.sum(-0.5 * eps * eps - log_sigma - 0.5 * LOG_2PI)
            - np.sum(np.log(1.0 - a * a + self.squash_eps))
        )
        return a, logp

    def deterministic(self, obs: np.ndarray) -> np.ndarray:
        mu, _ = self.distribution_params(obs)
        return np.tanh(mu)

    def sample_candidates(self, obs: np.ndarray, k: int, rng: SplitMix64):
        """k stochastic actions at one observation: (actions, pre_squash), each (k, d)."""
        mu, log_sigma = self.distribution_params(obs)
        eps = rng.normals(k * self.action_dim).reshape(k, self.action_dim)
        u = mu + np.exp(log_sigma) * eps
        return np.tanh(u), u

    def log_prob(self, obs: np.ndarray, action: np.ndarray) -> float:
        """Corrected log density of a squashed action strictly inside (-1, 1)."""
        mu, log_sigma = self.distribution_params(obs)
        a = np.asarray(action, dtype=np.float64)
        u = np.arctanh(np.clip(a, -1.0 + 1e-12, 1.0 - 1e-12))
        z = (u - mu) / np.exp(log_sigma)
        return float(
            np.sum(-0.5 * z * z - log_sigma - 0.5 * LOG_2PI)
            - np.sum(np.log(1.0 - a * a + self.squash_eps))
        )

    def gaussian_log_density(self, obs: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Log density of pre-squash values under the policy's Gaussian.

        `u` is (k, action_dim); returns (k,). No tanh change-of-variables
        term: this is the density the intersection machinery reweights by.
        """
        mu, log_sigma = self.distribution_params(obs)
        z = (u - mu) / np.exp(log_sigma)
        return np.sum(-0.5 * z * z - log_sigma - 0.5 * LOG_2PI, axis=-1)

    def copy(self) -> "SquashedGaussianActor":
        return SquashedGaussianActor(
            self.net.copy(), self.action_dim,
            self.log_sigma_min, self.log_sigma_max, self.squash_eps,
        )


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform sampling."""

    def __init__(self, capacity: int, obs_dim: int, action_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.dones = np.zeros(capacity)
        self.size = 0
        self._head = 0

    def add(self, obs, action, reward, next_obs, done):
        i = self._head
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = 1.0 if done else 0.0
        self._head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def add_experience(self, exp: Experience):
        self.add(exp.observation, exp.action, exp.reward, exp.next_observation, exp.done)

    def sample(self, batch_size: int, rng: SplitMix64):
        if self.size < batch_size:
            raise ValueError(f"buffer holds {self.size} < batch size {batch_size}")
        idx = (rng.uniforms(batch_size) * self.size).astype(np.int64)
        return (
            self.obs[idx],
            self.actions[idx],
            self.rewards[idx],
            self.next_obs[idx],
            self.dones[idx],
        )


class SacAgent:
    """One learner: actor, twin critics + targets, temperature, replay buffer."""

    def __init__(self, obs_dim: int, action_dim: int, cfg: SacConfig, rng: SplitMix64,
                 actor: SquashedGaussianActor | None = None):
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.cfg = cfg
        self.rng = rng
        if cfg.target_entropy is None:
            cfg = replace(cfg, target_entropy=-float(action_dim))
            self.cfg = cfg

        if actor is None:
            actor = SquashedGaussianActor.create(
                obs_dim, action_dim, cfg.hidden, rng,
                log_sigma_min=cfg.log_sigma_min, log_sigma_max=cfg.log_sigma_max,
                squash_eps=cfg.squash_eps,
            )
        self.actor = actor
        q_sizes = (obs_dim + action_dim, *cfg.hidden, 1)
        self.q1 = Mlp.initialized(q_sizes, rng)
        self.q2 = Mlp.initialized(q_sizes, rng)
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()

        self.opt_actor = AdamState(self.actor.net.parameters(), cfg.lr)
        self.opt_q1 = AdamState(self.q1.parameters(), cfg.lr)
        self.opt_q2 = AdamState(self.q2.parameters(), cfg.lr)
        self.log_alpha = np.array([math.log(cfg.alpha_init)])
        self.opt_alpha = AdamState([self.log_alpha], cfg.lr)

        self.buffer = ReplayBuffer(cfg.buffer_capacity, obs_dim, action_dim)
        self.total_env_steps = 0
        self.updates_done = 0

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    def act(self, obs: np.ndarray, deterministic: bool = False) -> np.ndarray:
        if deterministic:
            return self.actor.deterministic(obs)
        a, _ = self.actor.sample(obs, self.rng)
        return a

    def observe(self, obs, executed_action, reward_kj, next_obs, done):
        """Store one transition; rewards are scaled down before entering the buffer."""
        self.buffer.add(obs, executed_action, reward_kj * self.cfg.reward_scale, next_obs, done)
        self.total_env_steps += 1

    def ready(self) -> bool:
        return (
            self.total_env_steps >= self.cfg.warmup_steps
            and self.buffer.size >= self.cfg.batch_size
        )

    def maybe_update(self):
        if self.ready():
            for _ in range(self.cfg.updates_per_step):
                self.update()

    def update(self, batch=None) -> dict:
        """One gradient update of critics, actor and temperature from a batch."""
        cfg = self.cfg
        if batch is None:
            batch = self.buffer.sample(cfg.batch_size, self.rng)
        o, a, r, o2, d = batch
        bsz = o.shape[0]
        if bsz < cfg.batch_size:
            raise ValueError(f"batch of {bsz} is smaller than configured {cfg.batch_size}")
        ad = self.action_dim
        alpha = self.alpha

        # fresh next actions for the critic targets
        out2 = self.actor.net.forward(o2)
        mu2 = out2[:, :ad]
        ls2 = np.clip(out2[:, ad:], cfg.log_sigma_min, cfg.log_sigma_max)
        eps2 = self.rng.normals(bsz * ad).reshape(bsz, ad)
        a2 = np.tanh(mu2 + np.exp(ls2) * eps2)
        logp2 = (
            np.sum(-0.5 * eps2 * eps2 - ls2, axis=1) - 0.5 * LOG_2PI * ad
            - np.sum(np.log(1.0 - a2 * a2 + cfg.squash_eps), axis=1)
        )
        x2 = np.concatenate([o2, a2], axis=1)
        q1t = self.q1_target.forward(x2).ravel()
        q2t = self.q2_target.forward(x2).ravel()
        y = r + cfg.gamma * (1.0 - d) * (np.minimum(q1t, q2t) - alpha * logp2)

        # critics regress to y
        x = np.concatenate([o, a], axis=1)
        critic_losses = []
        for net, opt in ((self.q1, self.opt_q1), (self.q2, self.opt_q2)):
            pred, cache = net.forward_cached(x)
            diff = pred.ravel() - y
            grads, _ = net.backward(cache, (2.0 / bsz) * diff.reshape(bsz, 1))
            opt.step(net.parameters(), grads)
            critic_losses.append(float(np.mean(diff * diff)))

        # actor ascends min(Q1,Q2) - alpha*logp via the reparameterized sample
        out, acache = self.actor.net.forward_cached(o)
        mu = out[:, :ad]
        raw_ls = out[:, ad:]
        ls = np.clip(raw_ls, cfg.log_sigma_min, cfg.log_sigma_max)
        sigma = np.exp(ls)
        eps = self.rng.normals(bsz * ad).reshape(bsz, ad)
        t = np.tanh(mu + sigma * eps)
        s = 1.0 - t * t + cfg.squash_eps
        logp = (
            np.sum(-0.5 * eps * eps - ls, axis=1) - 0.5 * LOG_2PI * ad
            - np.sum(np.log(s), axis=1)
        )
        xa = np.concatenate([o, t], axis=1)
        qa1, c1 = self.q1.forward_cached(xa)
        qa2, c2 = self.q2.forward_cached(xa)
        q1v = qa1.ravel()
        q2v = qa2.ravel()
        qmin = np.minimum(q1v, q2v)
        actor_loss = float(np.mean(alpha * logp - qmin))

        pick1 = (q1v <= q2v).reshape(bsz, 1)
        dq = -1.0 / bsz
        _, dx1 = self.q1.backward(c1, dq * pick1, need_input_grad=True, need_param_grads=False)
        _, dx2 = self.q2.backward(c2, dq * ~pick1, need_input_grad=True, need_param_grads=False)
        da = dx1[:, self.obs_dim:] + dx2[:, self.obs_dim:]

        dlogp_du = 2.0 * t * (1.0 - t * t) / s
        du = (alpha / bsz) * dlogp_du + da * (1.0 - t * t)
        in_range = (raw_ls >= cfg.log_sigma_min) & (raw_ls <= cfg.log_sigma_max)
        dls = (-(alpha / bsz) + du * sigma * eps) * in_range
        agrads, _ = self.actor.net.backward(acache, np.concatenate([du, dls], axis=1))
        self.opt_actor.step(self.actor.net.parameters(), agrads)

        # temperature toward the target entropy
        if cfg.auto_alpha:
            galpha = np.array([-(float(np.mean(logp)) + cfg.target_entropy)])
            self.opt_alpha.step([self.log_alpha], [galpha])

        backends.soft_update(self.q1_target.parameters(), self.q1.parameters(), cfg.tau)
        backends.soft_update(self.q2_target.parameters(), self.q2.parameters(), cfg.tau)

        self.updates_done += 1
        self._assert_finite()
        return {
            "critic_loss": 0.5 * (critic_losses[0] + critic_losses[1]),
            "critic_loss_1": critic_losses[0],
            "critic_loss_2": critic_losses[1],
            "actor_loss": actor_loss,
            "alpha": alpha,
            "entropy": -float(np.mean(logp)),
            "q_mean": float(np.mean(qmin)),
            "target_mean": float(np.mean(y)),
        }

    def _assert_finite(self):
        for net in (self.actor.net, self.q1, self.q2, self.q1_target, self.q2_target):
            for p in net.parameters():
                if not np.all(np.isfinite(p)):
                    raise FloatingPointError("non-finite network parameter after update")
        if not np.isfinite(self.log_alpha[0]):
            raise FloatingPointError("non-finite temperature after update")


def actor_loss_decomposition(agent: SacAgent, batch, alpha: float):
    """(entropy_term, q_term) of the actor loss on a fixed batch at a given alpha.

    Loss = entropy_term - q_term with entropy_term = alpha*E[logp]. Uses the
    agent's RNG, so callers comparing alphas should reseed between calls.
    """
    o = batch[0]
    ad = agent.action_dim
    cfg = agent.cfg
    out = agent.actor.net.forward(o)
    mu = out[:, :ad]
    ls = np.clip(out[:, ad:], cfg.log_sigma_min, cfg.log_sigma_max)
    eps = agent.rng.normals(o.shape[0] * ad).reshape(o.shape[0], ad)
    t = np.tanh(mu + np.exp(ls) * eps)
    logp = (
        np.sum(-0.5 * eps * eps - ls, axis=1) - 0.5 * LOG_2PI * ad
        - np.sum(np.log(1.0 - t * t + cfg.squash_eps), axis=1)
    )
    x = np.concatenate([o, t], axis=1)
    qmin = np.minimum(agent.q1.forward(x).ravel(), agent.q2.forward(x).ravel())
    return alpha * float(np.mean(logp)), float(np.mean(qmin))
