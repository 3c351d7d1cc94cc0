"""SFT and GRPO objectives on a tabular toy policy.

The policy is a table of logits indexed by (context, position, token).  Both
losses come with analytic gradients so they can be checked against finite
differences and used in a plain gradient loop.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class UnknownTokenError(ValueError):
    pass


class DivergenceError(FloatingPointError):
    pass


def _log_softmax(x: np.ndarray) -> np.ndarray:
    m = x.max(axis=-1, keepdims=True)
    z = x - m
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


class ToyPolicy:
    """Softmax policy over ``vocab`` tokens for each (context, position)."""

    def __init__(self, n_contexts: int, length: int, vocab: int, logits: np.ndarray | None = None) -> None:
        self.n_contexts, self.length, self.vocab = n_contexts, length, vocab
        if logits is None:
            logits = np.zeros((n_contexts, length, vocab))
        logits = np.asarray(logits, dtype=float)
        if logits.shape != (n_contexts, length, vocab):
            raise ValueError(f"logits shape {logits.shape} != {(n_contexts, length, vocab)}")
        self.logits = logits

    def copy(self) -> "ToyPolicy":
        return ToyPolicy(self.n_contexts, self.length, self.vocab, self.logits.copy())

    def log_probs(self) -> np.ndarray:
        return _log_softmax(self.logits)

    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs())

    def _check(self, context: int, tokens: Sequence[int]) -> None:
        if not 0 <= context < self.n_contexts:
            raise UnknownTokenError(f"context {context} out of range")
        if len(tokens) > self.length:
            raise UnknownTokenError(f"sequence of length {len(tokens)} exceeds {self.length}")
        for t in tokens:
            if not 0 <= t < self.vocab:
                raise UnknownTokenError(f"token {t} outside vocabulary of size {self.vocab}")

    def token_logprobs(self, context: int, tokens: Sequence[int], table: np.ndarray | None = None) -> np.ndarray:
        self._check(context, tokens)
        lp = self.log_probs() if table is None else table
        return lp[context, np.arange(len(tokens)), np.asarray(tokens, dtype=int)]

    def sample(self, context: int, rng: np.random.Generator, length: int | None = None) -> tuple[int, ...]:
        p = self.probs()[context]
        n = self.length if length is None else length
        return tuple(int(rng.choice(self.vocab, p=p[t])) for t in range(n))


def sft_loss(policy: ToyPolicy, batch: Sequence[tuple[int, Sequence[int]]]) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood of each completion given its context id."""
    lp = policy.log_probs()
    p = np.exp(lp)
    grad = np.zeros_like(policy.logits)
    loss = 0.0
    n = len(batch)
    for context, tokens in batch:
        policy._check(context, tokens)
        for t, y in enumerate(tokens):
            loss -= lp[context, t, y]
            grad[context, t] += p[context, t]
            grad[context, t, y] -= 1.0
    return loss / n, grad / n


def compute_advantages(rewards: Sequence[float], std_floor: float = 1e-6) -> np.ndarray:
    r = np.asarray(rewards, dtype=float)
    if r.size < 2:
        raise ValueError("a group needs at least two rewards")
    std = r.std()
    if std <= std_floor:
        return np.zeros_like(r)
    return (r - r.mean()) / std


@dataclass
class GrpoConfig:
    group_size: int = 8
    clip_eps: float = 0.2
    learning_rate: float = 0.5
    std_floor: float = 1e-6
    seed: int = 0
    inner_steps: int = 2
    pooled_tokens: bool = False

    def __post_init__(self) -> None:
        if self.group_size < 2:
            raise ValueError("group_size must be >= 2")
        if not 0 < self.clip_eps < 1:
            raise ValueError("clip_eps must lie in (0, 1)")


@dataclass
class GroupSample:
    context: int
    responses: list[tuple[int, ...]]
    rewards: np.ndarray
    old_logprobs: list[np.ndarray]
    advantages: np.ndarray = field(default=None)

    def token_advantages(self, i: int) -> np.ndarray:
        return np.full(len(self.responses[i]), self.advantages[i])


def sample_group(policy: ToyPolicy, context: int, reward_fn, config: GrpoConfig,
                 rng: np.random.Generator) -> GroupSample:
    table = policy.log_probs()
    responses = [policy.sample(context, rng) for _ in range(config.group_size)]
    rewards = np.array([reward_fn(context, y) for y in responses], dtype=float)
    return GroupSample(
        context=context,
        responses=responses,
        rewards=rewards,
        old_logprobs=[policy.token_logprobs(context, y, table) for y in responses],
        advantages=compute_advantages(rewards, config.std_floor),
    )


def grpo_objective(
    policy: ToyPolicy,
    groups: Sequence[GroupSample],
    config: GrpoConfig,
    old_policy: ToyPolicy | None = None,
) -> tuple[float, np.ndarray]:
    """Clipped group-relative surrogate and its gradient with respect to the logits.

    Each response is averaged over its tokens, then over the group, then over
    groups.  With ``config.pooled_tokens`` the token average is taken over the
    whole group instead.  Old log-probabilities come from ``old_policy`` when
    given, otherwise from the values recorded at sampling time.
    """
    lp = policy.log_probs()
    p = np.exp(lp)
    old_table = old_policy.log_probs() if old_policy is not None else None
    lo, hi = 1.0 - config.clip_eps, 1.0 + config.clip_eps
    grad = np.zeros_like(policy.logits)
    total = 0.0
    for g in groups:
        n_tokens = sum(len(y) for y in g.responses)
        for i, y in enumerate(g.responses):
            if not y:
                continue
            c = g.context
            cur = policy.token_logprobs(c, y, lp)
            old = old_policy.token_logprobs(c, y, old_table) if old_policy is not None else g.old_logprobs[i]
            w = np.exp(cur - old)
            a = g.advantages[i]
            unclipped = w * a
            clipped = np.clip(w, lo, hi) * a
            weight = 1.0 / (n_tokens if config.pooled_tokens else len(g.responses) * len(y))
            total += weight * np.minimum(unclipped, clipped).sum()
            active = unclipped <= clipped
            for t, tok in enumerate(y):
                if active[t] and a != 0.0:
                    coef = weight * a * w[t]
                    grad[c, t] -= coef * p[c, t]
                    grad[c, t, tok] += coef
    n = len(groups)
    return total / n, grad / n


# ---------------------------------------------------------------------------
# toy environment and training demo

MALFORMED = 3
SLOTS = ("transport", "meal-set", "lodging")


@dataclass
class ToyPlanEnv:
    """Three-slot plans over a 4-symbol vocabulary scored like the real reward.

    Symbol 3 is malformed and sends the reward to -1.  Otherwise the reward is
    the share of slots holding a valid symbol plus the share of imposed
    requirements met.
    """

    n_contexts: int = 4
    seed: int = 0
    valid: list[list[set[int]]] = field(init=False)
    required: list[dict[int, int]] = field(init=False)

    def __post_init__(self) -> None:
        rng = np.random.default_rng(self.seed)
        self.valid, self.required = [], []
        for _ in range(self.n_contexts):
            valid = [set(rng.choice(3, size=2, replace=False).tolist()) for _ in SLOTS]
            slots = rng.choice(len(SLOTS), size=int(rng.integers(1, 3)), replace=False)
            req = {int(s): int(rng.choice(sorted(valid[s]))) for s in slots}
            self.valid.append(valid)
            self.required.append(req)

    vocab = 4
    length = len(SLOTS)

    def reward(self, context: int, tokens: Sequence[int]) -> float:
        if MALFORMED in tokens:
            return -1.0
        valid, req = self.valid[context], self.required[context]
        cs = sum(tok in valid[s] for s, tok in enumerate(tokens)) / len(SLOTS)
        hard = sum(tokens[s] == v for s, v in req.items()) / len(req)
        return cs + hard


def grpo_train_demo(env: ToyPlanEnv, config: GrpoConfig, steps: int) -> list[dict]:
    """Sample, score, standardise and update for ``steps`` iterations; one log row per step."""
    rng = np.random.default_rng(config.seed)
    policy = ToyPolicy(env.n_contexts, env.length, env.vocab)
    log = []
    for step in range(steps):
        groups = [sample_group(policy, c, env.reward, config, rng) for c in range(env.n_contexts)]
        objective, grad_norm = math.nan, 0.0
        for k in range(config.inner_steps):
            obj, grad = grpo_objective(policy, groups, config)
            if not (np.isfinite(obj) and np.all(np.isfinite(grad))):
                raise DivergenceError(f"non-finite objective at step {step}")
            if k == 0:
                objective, grad_norm = float(obj), float(np.linalg.norm(grad))
            policy.logits = policy.logits + config.learning_rate * grad
        log.append({
            "step": step,
            "mean_reward": float(np.mean([g.rewards.mean() for g in groups])),
            "objective": objective,
            "grad_norm": grad_norm,
        })
    return log


def write_training_log(log: Sequence[dict], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["step", "mean_reward", "objective", "grad_norm"], lineterminator="\n")
        w.writeheader()
        for row in log:
            w.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in row.items()})
