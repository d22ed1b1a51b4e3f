"""Training-time removal of trivially solvable and unanswerable queries.

For each query, N evidence sets are sampled from the current selector and
each is scored for empirical correctness over K generator rollouts. Queries
whose mean correctness is too high (trivial), too low (unanswerable), or
whose variance is too small are dropped from selector training. Evaluation
and generator training always see the full dataset.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .backends import GeneratorBackend, evidence_from_pool, top_k_evidence
from .corpus import CandidatePool, Query
from .parallel import parallel_map
from .policy import PolicyParams, sample_subset
from .rewards import estimate_solvability
from .rngs import derive_rng


class FilterDecision(str, Enum):
    KEEP = "keep"
    DROP_TRIVIAL = "drop_trivial"
    DROP_UNANSWERABLE = "drop_unanswerable"
    DROP_LOW_VARIANCE = "drop_low_variance"


@dataclass(frozen=True)
class FilterStats:
    query_id: str
    per_selection_phat: tuple[float, ...]
    mu_q: float
    var_q: float
    decision: FilterDecision

    def to_json_line(self) -> str:
        rec = asdict(self)
        rec["decision"] = self.decision.value
        return json.dumps(rec, ensure_ascii=False)


def decide(mu_q: float, var_q: float, m_min: float, m_max: float, v_min: float) -> FilterDecision:
    """Keep iff m_min <= mu <= m_max (inclusive) and var > v_min (strict)."""
    if mu_q > m_max:
        return FilterDecision.DROP_TRIVIAL
    if mu_q < m_min:
        return FilterDecision.DROP_UNANSWERABLE
    if var_q <= v_min:
        return FilterDecision.DROP_LOW_VARIANCE
    return FilterDecision.KEEP


def filter_stats(
    query: Query,
    pool: CandidatePool,
    features: np.ndarray,
    selector_params: PolicyParams,
    backend: GeneratorBackend,
    cfg,
    rng: np.random.Generator,
) -> FilterStats:
    """Mean/variance of empirical correctness over N selector rollouts.

    With ``cfg.filter_source == "topk"`` the N evidence sets are all the raw
    top-k pool prefix instead of selector samples (variance then comes from
    generator stochasticity alone).
    """
    k = min(cfg.k_select, len(pool))
    phats = []
    for stream in rng.spawn(cfg.n_filter_selections):
        if cfg.filter_source == "topk":
            evidence = top_k_evidence(pool, k)
        else:
            indices = sample_subset(selector_params, features, k, stream)
            evidence = evidence_from_pool(pool, sorted(indices))
        est = estimate_solvability(
            query, evidence, backend, cfg.K, cfg.delta_filter, stream
        )
        phats.append(est.p_hat)
    arr = np.asarray(phats, dtype=np.float64)
    mu = float(arr.mean())
    var = float(arr.var())
    return FilterStats(
        query_id=query.id,
        per_selection_phat=tuple(float(p) for p in phats),
        mu_q=mu,
        var_q=var,
        decision=decide(mu, var, cfg.m_min, cfg.m_max, cfg.v_min),
    )


def apply_filter(
    queries: list[Query],
    pools: dict[str, CandidatePool],
    features: dict[str, np.ndarray],
    selector_params: PolicyParams,
    backend: GeneratorBackend,
    cfg,
    seed: int | None = None,
    threads: int = 1,
) -> tuple[list[Query], list[FilterStats]]:
    """Split a dataset into kept queries plus per-query filter statistics.

    Per-query rng streams are derived from the seed and the query id, so the
    decision set is reproducible for any thread count.
    """
    seed_val = cfg.seed if seed is None else seed

    def one(query: Query) -> FilterStats:
        rng = derive_rng(seed_val, "filter", query.id)
        return filter_stats(
            query, pools[query.id], features[query.id],
            selector_params, backend, cfg, rng,
        )

    stats = parallel_map(one, queries, threads)
    kept = [q for q, st in zip(queries, stats) if st.decision is FilterDecision.KEEP]
    return kept, stats
