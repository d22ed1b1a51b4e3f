"""Trainable feature policies over ordered document subsets.

Both the evidence selector and the simulated generator's grounding choice
are sequential-softmax policies: an ordered subset of k items is drawn by
repeatedly taking a softmax over the remaining items' linear feature
logits. This keeps sampling, exact log-probabilities and exact gradients
all available in closed form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import CandidatePool, Corpus, EvidenceSet, Query
from .errors import ParseError, UnsupportedModeError
from .text import tokenize

FEATURE_NAMES = ("score", "overlap", "log_rank", "bias")

CHECKPOINT_MAGIC = "evsel-policy-v1"


@dataclass(frozen=True)
class PolicyParams:
    """Immutable snapshot of a linear policy's weights."""

    weights: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES
    version: int = 0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).copy()
        if w.ndim != 1 or w.shape[0] != len(self.feature_names):
            raise ValueError(
                f"weights must be a vector of length {len(self.feature_names)}"
            )
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def with_weights(self, weights: np.ndarray) -> "PolicyParams":
        return PolicyParams(
            weights=weights, feature_names=self.feature_names,
            version=self.version + 1,
        )


def _minmax_rescale(scores: np.ndarray) -> np.ndarray:
    lo, hi = scores.min(), scores.max()
    if hi > lo:
        return (scores - lo) / (hi - lo)
    return np.full_like(scores, 0.5)


def _feature_matrix(query: Query, doc_ids, rescaled: np.ndarray, corpus: Corpus) -> np.ndarray:
    q_tokens = frozenset(tokenize(query.text))
    rows = []
    for rank0, (doc_id, s) in enumerate(zip(doc_ids, rescaled)):
        if q_tokens:
            overlap = len(q_tokens & corpus.doc_token_set(doc_id)) / len(q_tokens)
        else:
            overlap = 0.0
        rows.append([s, overlap, np.log(2.0 + rank0), 1.0])
    return np.array(rows, dtype=np.float64)


def featurize(query: Query, pool: CandidatePool, corpus: Corpus) -> np.ndarray:
    """One feature row per pool entry, aligned with the pool's order.

    Features: retrieval score min-max rescaled within the pool, query-token
    overlap fraction, log(1 + rank) with 1-based rank, and a constant 1.
    """
    if len(pool) == 0:
        raise ValueError("pool is empty")
    scores = np.asarray(pool.scores, dtype=np.float64)
    return _feature_matrix(query, pool.doc_ids, _minmax_rescale(scores), corpus)


def featurize_evidence(query: Query, evidence: EvidenceSet, corpus: Corpus) -> np.ndarray:
    """Features for the documents of an evidence set, in presentation order.

    Same basis as :func:`featurize`, but rank is the 1-based position inside
    the evidence and scores rescale against the evidence's pool-level
    ``score_scale``: an evidence set can be any slice of a pool (or a
    counterfactually edited one), so the score feature must not depend on
    which other documents happen to be present. The simulated generator and
    the exact solvability oracle share this featurization.
    """
    if len(evidence) == 0:
        raise ValueError("evidence is empty")
    scores = np.asarray(evidence.scores, dtype=np.float64)
    rescaled = np.clip(scores / evidence.score_scale, 0.0, None)
    return _feature_matrix(query, evidence.doc_ids, rescaled, corpus)


def _logsumexp(values: np.ndarray) -> float:
    m = values.max()
    return float(m + np.log(np.exp(values - m).sum()))


def sample_subset(
    params: PolicyParams, features: np.ndarray, k: int, rng: np.random.Generator
) -> list[int]:
    """Draw k distinct 0-based indices sequentially without replacement.

    At each step the next index is drawn from a softmax over the remaining
    items' logits. Deterministic for a fixed rng state.
    """
    n = features.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    logits = features @ params.weights
    remaining = list(range(n))
    picked: list[int] = []
    for _ in range(k):
        sub = logits[remaining]
        sub = sub - sub.max()
        probs = np.exp(sub)
        probs /= probs.sum()
        r = rng.random()
        cum = np.cumsum(probs)
        slot = int(np.searchsorted(cum, r, side="right"))
        slot = min(slot, len(remaining) - 1)
        picked.append(remaining.pop(slot))
    return picked


def argmax_subset(params: PolicyParams, features: np.ndarray, k: int) -> list[int]:
    """Deterministic top-k by logit, ties broken by lower index."""
    n = features.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    logits = features @ params.weights
    order = np.argsort(-logits, kind="stable")
    return [int(i) for i in order[:k]]


def _check_indices(indices, n: int) -> list[int]:
    idx = [int(i) for i in indices]
    if len(set(idx)) != len(idx):
        raise ValueError(f"duplicate index in selection {idx}")
    if any(i < 0 or i >= n for i in idx):
        raise ValueError(f"index out of range in selection {idx}")
    return idx


def logprob_subset(params: PolicyParams, features: np.ndarray, indices) -> float:
    """Exact log-probability of an ordered selection under the policy."""
    n = features.shape[0]
    idx = _check_indices(indices, n)
    logits = features @ params.weights
    remaining = list(range(n))
    total = 0.0
    for i in idx:
        sub = logits[remaining]
        total += logits[i] - _logsumexp(sub)
        remaining.remove(i)
    return total


def grad_logprob_subset(params: PolicyParams, features: np.ndarray, indices) -> np.ndarray:
    """Gradient of :func:`logprob_subset` with respect to the weights.

    Each step contributes the chosen item's features minus the
    softmax-weighted mean of the remaining items' features.
    """
    n = features.shape[0]
    idx = _check_indices(indices, n)
    logits = features @ params.weights
    remaining = list(range(n))
    grad = np.zeros_like(params.weights)
    for i in idx:
        sub = logits[remaining]
        sub = sub - sub.max()
        probs = np.exp(sub)
        probs /= probs.sum()
        grad += features[i] - probs @ features[remaining]
        remaining.remove(i)
    return grad


def exact_solvability(
    query: Query,
    evidence: EvidenceSet,
    gen_params: PolicyParams,
    n_ground: int,
    corpus: Corpus,
) -> float:
    """Exact probability that a sampled grounding yields a correct rollout.

    Enumerates every ordered n_ground-subset of the evidence with its
    sequential-softmax probability and sums the mass of groundings covering
    all required golden documents. Only defined for labeled queries.
    """
    if not query.required_golden_ids:
        raise UnsupportedModeError(
            f"query {query.id!r} declares no required golden documents"
        )
    doc_ids = list(evidence.doc_ids)
    n = len(doc_ids)
    if n_ground > n:
        raise ValueError(f"n_ground={n_ground} exceeds evidence size {n}")
    required = set(query.required_golden_ids)
    if not required.issubset(doc_ids):
        return 0.0
    required_pos = {doc_ids.index(d) for d in required}
    if len(required_pos) > n_ground:
        return 0.0
    features = featurize_evidence(query, evidence, corpus)
    logits = features @ gen_params.weights
    total = 0.0
    for perm in itertools.permutations(range(n), n_ground):
        if not required_pos.issubset(perm):
            continue
        remaining = list(range(n))
        logp = 0.0
        for i in perm:
            logp += logits[i] - _logsumexp(logits[remaining])
            remaining.remove(i)
        total += np.exp(logp)
    return float(min(total, 1.0))


# --- Checkpoints -------------------------------------------------------------


def save_params(params: PolicyParams, path: str | Path) -> None:
    """Write a diffable, bit-exact text checkpoint."""
    lines = [CHECKPOINT_MAGIC, str(params.version), ",".join(params.feature_names)]
    lines += [repr(float(w)) for w in params.weights]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_params(path: str | Path) -> PolicyParams:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if len(lines) < 3 or lines[0] != CHECKPOINT_MAGIC:
        raise ParseError("not a policy checkpoint", path=str(path), line=1)
    try:
        version = int(lines[1])
    except ValueError:
        raise ParseError("bad version line", path=str(path), line=2) from None
    names = tuple(lines[2].split(","))
    try:
        weights = np.array([float(s) for s in lines[3:] if s], dtype=np.float64)
    except ValueError:
        raise ParseError("bad weight line", path=str(path)) from None
    if weights.shape[0] != len(names):
        raise ParseError("weight count does not match feature names", path=str(path))
    return PolicyParams(weights=weights, feature_names=names, version=version)
