"""Reward components for selector and generator training.

The selector reward targets evidence whose empirical solvability sits near
a configured correctness level, gated by output well-formedness. The
generator reward combines answer accuracy (token F1 + exact match) with a
peaked citation-count reward under the same format gate.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import RolloutError
from .text import ParsedGeneration, ParsedSelection, exact_match, token_f1

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, types only
    from .backends import EvidenceSet, GeneratorBackend
    from .config import TrainConfig


@dataclass(frozen=True)
class SelectorRewardBreakdown:
    r_bdy: float
    r_rel: float
    r_fmt: int
    p_cnt: float
    total: float


@dataclass(frozen=True)
class GeneratorRewardBreakdown:
    r_fmt: int
    f1: float
    em: int
    r_acc: float
    n_cite: int
    r_cite: float
    total: float


@dataclass(frozen=True)
class SolvabilityEstimate:
    """Empirical correctness over K rollouts: p_hat = sum(z) / K."""

    p_hat: float
    k_rollouts: int
    z: tuple[int, ...]


def boundary_reward(p_hat: float, c: float) -> float:
    """Triangular reward peaking at p_hat == c, zero at both endpoints."""
    if not 0.0 < c < 1.0:
        raise ValueError(f"target correctness must lie in (0,1), got {c}")
    if not 0.0 <= p_hat <= 1.0:
        raise ValueError(f"p_hat must lie in [0,1], got {p_hat}")
    return min(p_hat / c, (1.0 - p_hat) / (1.0 - c))


def relevance_reward(scores, tau: float = 10.0) -> float:
    """Logistic rescaling of the mean retrieval score into (0,1)."""
    scores = list(scores)
    if not scores:
        raise ValueError("relevance reward needs at least one score")
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    mean = sum(scores) / len(scores)
    return 1.0 / (1.0 + math.exp(-mean / tau))


def relevance_reward_minmax(scores, pool_scores) -> float:
    """Per-pool min-max alternative rescaling (config switch)."""
    scores = list(scores)
    pool_scores = list(pool_scores)
    if not scores or not pool_scores:
        raise ValueError("relevance reward needs at least one score")
    lo, hi = min(pool_scores), max(pool_scores)
    mean = sum(scores) / len(scores)
    if hi <= lo:
        return 0.5
    frac = (mean - lo) / (hi - lo)
    # Squeeze into the open interval so downstream logs stay finite.
    return min(max(frac, 1e-9), 1.0 - 1e-9)


def count_penalty(size: int, k_star: int, alpha: float, p_max: float) -> float:
    """Capped linear penalty on deviation from the target selection size."""
    if size < 0:
        raise ValueError(f"size must be nonnegative, got {size}")
    return min(alpha * abs(size - k_star), p_max)


def selector_reward(
    selection: ParsedSelection,
    p_hat: float,
    scores,
    cfg: "TrainConfig",
    pool_scores=None,
) -> SelectorRewardBreakdown:
    """Gated combination of boundary, relevance and count terms.

    Malformed selections get total 0; component values are still reported
    for diagnostics when they are computable.
    """
    scores = list(scores)
    r_fmt = int(selection.well_formed)
    r_bdy = boundary_reward(p_hat, cfg.c)
    if scores:
        if cfg.rel_rescale == "minmax":
            r_rel = relevance_reward_minmax(scores, pool_scores if pool_scores else scores)
        else:
            r_rel = relevance_reward(scores, cfg.tau)
    else:
        r_rel = 0.0
    p_cnt = count_penalty(len(selection.indices), cfg.k_star, cfg.alpha, cfg.p_max)
    total = r_fmt * (cfg.lambda_bdy * r_bdy + cfg.lambda_rel * r_rel - p_cnt)
    return SelectorRewardBreakdown(
        r_bdy=r_bdy, r_rel=r_rel, r_fmt=r_fmt, p_cnt=p_cnt, total=total
    )


def citation_reward(n_cite: int, n_star: int) -> float:
    """Peaked reward: 1 at the target count, 0.5 one off, else 0."""
    gap = abs(n_cite - n_star)
    if gap == 0:
        return 1.0
    if gap == 1:
        return 0.5
    return 0.0


def generator_reward(
    gen: ParsedGeneration, gold_answers, cfg: "TrainConfig"
) -> GeneratorRewardBreakdown:
    """Format-gated accuracy plus citation reward against the gold set.

    F1 and EM are maximized independently over the gold answers.
    """
    golds = list(gold_answers)
    if not golds:
        raise ValueError("gold_answers must be nonempty")
    answer = gen.answer or ""
    f1 = max(token_f1(answer, g) for g in golds)
    em = max(exact_match(answer, g) for g in golds)
    r_acc = cfg.beta1 * f1 + cfg.beta2 * em
    n_cite = len(gen.citations)
    r_cite = citation_reward(n_cite, cfg.n_star)
    r_fmt = int(gen.well_formed)
    total = r_fmt * (cfg.lambda_acc * r_acc + cfg.lambda_cite * r_cite)
    return GeneratorRewardBreakdown(
        r_fmt=r_fmt, f1=f1, em=em, r_acc=r_acc,
        n_cite=n_cite, r_cite=r_cite, total=total,
    )


def rollout_correct(reward_total: float, delta: float) -> int:
    """1 iff the rollout's total reward reaches the threshold (inclusive)."""
    return int(reward_total >= delta)


def estimate_solvability(
    query,
    evidence: "EvidenceSet",
    backend: "GeneratorBackend",
    k_rollouts: int,
    delta: float,
    rng: np.random.Generator,
) -> SolvabilityEstimate:
    """Empirical correctness probability from K generator rollouts.

    Rollouts use independent substreams spawned from ``rng``, so the
    estimate is reproducible and independent of scheduling.
    """
    from .backends import collect_rollouts

    rollouts = collect_rollouts(backend, query, evidence, k_rollouts, rng)
    z = tuple(rollout_correct(r.reward.total, delta) for r in rollouts)
    return SolvabilityEstimate(p_hat=sum(z) / k_rollouts, k_rollouts=k_rollouts, z=z)


def reward_log_line(kind: str, query_id: str, breakdown) -> str:
    """One JSONL line per rollout with every component field."""
    rec = {"kind": kind, "query_id": query_id}
    rec.update(asdict(breakdown))
    return json.dumps(rec, ensure_ascii=False)
