"""Group-relative policy optimization shared by both training stages.

Rewards within a sampled group are normalized to advantages, the clipped
likelihood-ratio surrogate is averaged over the group, and a KL penalty
against a reference snapshot regularizes the update. One plain
gradient-ascent step is taken per group (strictly on-policy by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingError
from .policy import PolicyParams, grad_logprob_subset, logprob_subset


@dataclass
class GrpoConfig:
    clip_epsilon: float = 0.2
    kl_coeff: float = 0.001
    norm_epsilon: float = 1e-8
    learning_rate: float = 0.4
    group_size: int = 8
    ratio_cap: float = 1e6
    kl_estimator: str = "k3"          # "k3": exp(u)-u-1; "k1": logprob difference
    lr_schedule: str = "constant"     # "constant" or "cosine"
    warmup_frac: float = 0.02

    def __post_init__(self):
        if not 0.0 < self.clip_epsilon < 1.0:
            raise ValueError(f"clip_epsilon must lie in (0,1), got {self.clip_epsilon}")
        for name in ("kl_coeff", "norm_epsilon", "learning_rate", "warmup_frac"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.kl_estimator not in ("k3", "k1"):
            raise ValueError(f"unknown kl_estimator {self.kl_estimator!r}")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")


@dataclass
class GroupSample:
    """Everything needed to re-evaluate one group member under new weights."""

    features: np.ndarray
    indices: tuple[int, ...]
    logprob_old: float
    logprob_ref: float


@dataclass
class GroupBatch:
    rewards: np.ndarray
    logprob_old: np.ndarray
    logprob_ref: np.ndarray
    advantages: np.ndarray
    group_mean: float
    group_std: float
    logprob_new: np.ndarray = field(default=None)  # filled at step time

    def __post_init__(self):
        if self.logprob_new is None:
            self.logprob_new = self.logprob_old.copy()


def normalize_advantages(rewards, norm_epsilon: float = 1e-8) -> np.ndarray:
    """(r - mean) / (population std + epsilon); requires a group of >= 2."""
    r = np.asarray(list(rewards), dtype=np.float64)
    if r.shape[0] < 2:
        raise ValueError(f"advantage group needs >= 2 rewards, got {r.shape[0]}")
    mu = r.mean()
    sigma = r.std()
    return (r - mu) / (sigma + norm_epsilon)


def make_group_batch(
    rewards, logprob_old, logprob_ref, norm_epsilon: float = 1e-8
) -> GroupBatch:
    r = np.asarray(list(rewards), dtype=np.float64)
    lpo = np.asarray(list(logprob_old), dtype=np.float64)
    lpr = np.asarray(list(logprob_ref), dtype=np.float64)
    if not (r.shape == lpo.shape == lpr.shape):
        raise ValueError("rewards and log-prob lists must be aligned")
    adv = normalize_advantages(r, norm_epsilon)
    return GroupBatch(
        rewards=r, logprob_old=lpo, logprob_ref=lpr, advantages=adv,
        group_mean=float(r.mean()), group_std=float(r.std()),
    )


def _ratio(logprob_new: float, logprob_old: float, ratio_cap: float) -> tuple[float, bool]:
    delta = logprob_new - logprob_old
    if delta >= math.log(ratio_cap):
        return ratio_cap, True
    return math.exp(delta), False


def clipped_surrogate(
    logprob_new: float,
    logprob_old: float,
    advantage: float,
    clip_epsilon: float,
    ratio_cap: float = 1e6,
) -> float:
    """min(r*A, clip(r, 1-eps, 1+eps)*A) with r the likelihood ratio.

    The per-sample loss contribution is the negation of this value. Ratio
    overflow saturates at ``ratio_cap``.
    """
    r, _ = _ratio(logprob_new, logprob_old, ratio_cap)
    clipped = min(max(r, 1.0 - clip_epsilon), 1.0 + clip_epsilon)
    return min(r * advantage, clipped * advantage)


@dataclass
class StepDiagnostics:
    mean_reward: float
    group_mean: float
    group_std: float
    kl_estimate: float
    grad_norm: float
    objective: float
    n_clipped: int
    n_saturated: int
    learning_rate: float


def grpo_objective(
    params: PolicyParams,
    batch: GroupBatch,
    samples: list[GroupSample],
    cfg: GrpoConfig,
) -> tuple[float, np.ndarray, StepDiagnostics]:
    """Objective value and analytic gradient at ``params``.

    Objective: mean clipped surrogate minus ``kl_coeff`` times the mean KL
    penalty against the reference snapshot. The gradient of a clipped-out
    sample is zero, matching the piecewise definition.
    """
    m = len(samples)
    if m != batch.rewards.shape[0]:
        raise ValueError("samples and batch are misaligned")
    value = 0.0
    grad = np.zeros_like(params.weights)
    kl_sum = 0.0
    n_clipped = 0
    n_saturated = 0
    lp_new = np.empty(m, dtype=np.float64)
    for i, sample in enumerate(samples):
        lpn = logprob_subset(params, sample.features, sample.indices)
        lp_new[i] = lpn
        adv = batch.advantages[i]
        r, saturated = _ratio(lpn, sample.logprob_old, cfg.ratio_cap)
        n_saturated += int(saturated)
        clipped_r = min(max(r, 1.0 - cfg.clip_epsilon), 1.0 + cfg.clip_epsilon)
        unclipped_val = r * adv
        clipped_val = clipped_r * adv
        value += min(unclipped_val, clipped_val)
        glp = grad_logprob_subset(params, sample.features, sample.indices)
        if unclipped_val <= clipped_val and not saturated:
            grad += r * adv * glp
        else:
            n_clipped += 1
        u = sample.logprob_ref - lpn
        if cfg.kl_estimator == "k3":
            value -= cfg.kl_coeff * (math.exp(u) - u - 1.0)
            grad -= cfg.kl_coeff * (1.0 - math.exp(u)) * glp
        else:
            value -= cfg.kl_coeff * (lpn - sample.logprob_ref)
            grad -= cfg.kl_coeff * glp
        kl_sum += lpn - sample.logprob_ref
    value /= m
    grad /= m
    batch.logprob_new = lp_new
    diag = StepDiagnostics(
        mean_reward=float(batch.rewards.mean()),
        group_mean=batch.group_mean,
        group_std=batch.group_std,
        kl_estimate=kl_sum / m,
        grad_norm=float(np.linalg.norm(grad)),
        objective=value,
        n_clipped=n_clipped,
        n_saturated=n_saturated,
        learning_rate=cfg.learning_rate,
    )
    return value, grad, diag


def grpo_step(
    params: PolicyParams,
    batch: GroupBatch,
    samples: list[GroupSample],
    cfg: GrpoConfig,
    learning_rate: float | None = None,
) -> tuple[PolicyParams, StepDiagnostics]:
    """One gradient-ascent step on the group objective.

    Returns a new parameter snapshot with version + 1. Raises
    :class:`TrainingError` with a diagnostic dump if the gradient is not
    finite.
    """
    lr = cfg.learning_rate if learning_rate is None else learning_rate
    _, grad, diag = grpo_objective(params, batch, samples, cfg)
    if not np.all(np.isfinite(grad)):
        raise TrainingError(
            "non-finite gradient in policy update",
            diagnostics={
                "weights": params.weights.tolist(),
                "rewards": batch.rewards.tolist(),
                "advantages": batch.advantages.tolist(),
                "grad": [float(g) for g in grad],
            },
        )
    diag.learning_rate = lr
    new_params = params.with_weights(params.weights + lr * grad)
    return new_params, diag


def cosine_lr(step: int, total_steps: int, base_lr: float, warmup_frac: float = 0.02) -> float:
    """Cosine decay to zero with a linear warmup over the first fraction."""
    if total_steps <= 0:
        return base_lr
    warmup_steps = max(1, int(round(warmup_frac * total_steps)))
    if step < warmup_steps:
        return base_lr * (step + 1) / warmup_steps
    progress = (step - warmup_steps) / max(1, total_steps - warmup_steps)
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * min(progress, 1.0)))


def schedule_lr(cfg: GrpoConfig, step: int, total_steps: int) -> float:
    if cfg.lr_schedule == "cosine":
        return cosine_lr(step, total_steps, cfg.learning_rate, cfg.warmup_frac)
    return cfg.learning_rate
