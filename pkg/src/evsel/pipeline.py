"""The alternating two-stage training loop and the evaluation analyses.

Stage 1 trains the evidence selector against a frozen generator using
solvability-targeted rewards; stage 2 freezes the selector and fine-tunes
the generator on the induced evidence distribution. At inference the
selector is discarded: evaluation always feeds the generator raw top-k
pools.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .backends import GeneratorBackend, SimulatorBackend, ensure_trainable
from .config import TrainConfig
from .corpus import (
    CandidatePool,
    Corpus,
    EvidenceSet,
    Query,
    build_candidate_pool,
    build_corpus_stats,
    build_pool_from_scores,
    evidence_from_pool,
    top_k_evidence,
)
from .errors import EvselError, RolloutError
from .filtering import FilterStats, apply_filter
from .parallel import parallel_map
from .grpo import GroupSample, grpo_step, make_group_batch, schedule_lr
from .policy import (
    FEATURE_NAMES,
    PolicyParams,
    featurize,
    featurize_evidence,
    logprob_subset,
    sample_subset,
    save_params,
)
from .rewards import estimate_solvability, selector_reward
from .rngs import derive_rng
from .text import (
    ParsedSelection,
    exact_match,
    normalize_answer,
    render_selection,
    token_f1,
)

logger = logging.getLogger("evsel")


# --- Dataset preparation -----------------------------------------------------


@dataclass
class PreparedDataset:
    corpus: Corpus
    queries: list[Query]
    pools: dict[str, CandidatePool]
    features: dict[str, np.ndarray]


def prepare_dataset(
    corpus: Corpus,
    cfg: TrainConfig,
    dense_scores: dict[str, dict[str, float]] | None = None,
) -> PreparedDataset:
    """Build per-query candidate pools and selector features once."""
    stats = build_corpus_stats(corpus)
    pools: dict[str, CandidatePool] = {}
    features: dict[str, np.ndarray] = {}
    queries: list[Query] = []
    for query in corpus.queries:
        if cfg.score_source == "dense":
            if dense_scores is None:
                raise EvselError("dense score source configured but no scores loaded")
            pool = build_pool_from_scores(query, dense_scores, corpus, n=cfg.n_pool)
        else:
            pool = build_candidate_pool(
                query, corpus, n=cfg.n_pool, stats=stats,
                k1=cfg.bm25_k1, b=cfg.bm25_b,
            )
        if len(pool) == 0:
            logger.warning("query %s retrieved nothing; skipped", query.id)
            continue
        pools[query.id] = pool
        features[query.id] = featurize(query, pool, corpus)
        queries.append(query)
    return PreparedDataset(corpus=corpus, queries=queries, pools=pools, features=features)


def initial_selector_params(cfg: TrainConfig) -> PolicyParams:
    return PolicyParams(weights=np.array(cfg.selector_init, dtype=np.float64),
                        feature_names=FEATURE_NAMES, version=0)


def initial_generator_params(cfg: TrainConfig) -> PolicyParams:
    return PolicyParams(weights=np.array(cfg.generator_init, dtype=np.float64),
                        feature_names=FEATURE_NAMES, version=0)


# --- Training ----------------------------------------------------------------


@dataclass
class UpdateRecord:
    stage: str
    iteration: int
    query_id: str
    group_mean: float
    group_std: float
    mean_reward: float
    kl_estimate: float
    grad_norm: float
    learning_rate: float

    def to_json_line(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False)


@dataclass
class EpochLog:
    stage: str
    iteration: int
    records: list[UpdateRecord] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    reward_breakdowns: list[dict] = field(default_factory=list)

    @property
    def mean_rewards(self) -> list[float]:
        return [r.mean_reward for r in self.records]


def train_selector_epoch(
    ds: PreparedDataset,
    selector_params: PolicyParams,
    gen_backend: GeneratorBackend,
    cfg: TrainConfig,
    iteration: int = 1,
) -> tuple[PolicyParams, EpochLog]:
    """One epoch of selector training against a frozen generator.

    Per query: sample M evidence sets, estimate solvability of each with K
    rollouts, convert selector rewards to group advantages, take one policy
    step. A query that fails is skipped with a warning, never silently.
    """
    log = EpochLog(stage="selector", iteration=iteration)
    params = selector_params
    ref_params = selector_params  # KL anchor: snapshot at epoch start
    total_steps = len(ds.queries)
    for step, query in enumerate(ds.queries):
        pool = ds.pools[query.id]
        features = ds.features[query.id]
        k = min(cfg.k_select, len(pool))
        rng = derive_rng(cfg.seed, "stage1", iteration, query.id)
        try:
            rewards, lp_old, lp_ref, samples = [], [], [], []
            for m_stream in rng.spawn(cfg.M):
                indices = sample_subset(params, features, k, m_stream)
                # The generator always sees documents in retrieval-rank
                # order; the sampled order stays with the policy terms.
                evidence = evidence_from_pool(pool, sorted(indices))
                est = estimate_solvability(
                    query, evidence, gen_backend, cfg.K, cfg.delta_stage1, m_stream
                )
                selection = ParsedSelection(
                    raw=render_selection(evidence.pool_positions),
                    indices=evidence.pool_positions,
                    well_formed=True,
                )
                breakdown = selector_reward(
                    selection, est.p_hat, evidence.scores, cfg,
                    pool_scores=pool.scores,
                )
                rewards.append(breakdown.total)
                lp_old.append(logprob_subset(params, features, indices))
                lp_ref.append(logprob_subset(ref_params, features, indices))
                samples.append(GroupSample(
                    features=features, indices=tuple(indices),
                    logprob_old=lp_old[-1], logprob_ref=lp_ref[-1],
                ))
                log.reward_breakdowns.append({
                    "kind": "selector", "query_id": query.id,
                    "p_hat": est.p_hat, **asdict(breakdown),
                })
            batch = make_group_batch(rewards, lp_old, lp_ref, cfg.grpo.norm_epsilon)
            lr = schedule_lr(cfg.grpo, step, total_steps)
            params, diag = grpo_step(params, batch, samples, cfg.grpo, learning_rate=lr)
        except (RolloutError, EvselError) as exc:
            logger.warning("stage1 skipped query %s: %s", query.id, exc)
            log.skipped.append(query.id)
            continue
        log.records.append(UpdateRecord(
            stage="selector", iteration=iteration, query_id=query.id,
            group_mean=diag.group_mean, group_std=diag.group_std,
            mean_reward=diag.mean_reward, kl_estimate=diag.kl_estimate,
            grad_norm=diag.grad_norm, learning_rate=diag.learning_rate,
        ))
    return params, log


def train_generator_epoch(
    ds: PreparedDataset,
    selector_params: PolicyParams,
    gen_params: PolicyParams,
    cfg: TrainConfig,
    iteration: int = 1,
    backend: GeneratorBackend | None = None,
) -> tuple[PolicyParams, EpochLog]:
    """One epoch of generator training under the frozen selector.

    Per query: draw one evidence set from the selector, collect K generator
    rollouts as the group, take one policy step on the grounding policy.
    """
    if backend is not None:
        ensure_trainable(backend)
    if cfg.K < 2:
        raise ValueError("generator training needs K >= 2 for group advantages")
    log = EpochLog(stage="generator", iteration=iteration)
    params = gen_params
    ref_params = gen_params
    total_steps = len(ds.queries)
    for step, query in enumerate(ds.queries):
        pool = ds.pools[query.id]
        features = ds.features[query.id]
        k = min(cfg.k_select, len(pool))
        rng = derive_rng(cfg.seed, "stage2", iteration, query.id)
        try:
            indices = sample_subset(selector_params, features, k, rng)
            evidence = evidence_from_pool(pool, sorted(indices))
            sim = SimulatorBackend(ds.corpus, params, cfg)
            ev_features = None
            rewards, lp_old, lp_ref, samples = [], [], [], []
            for stream in rng.spawn(cfg.K):
                rollout = sim.rollout(query, evidence, stream)
                if ev_features is None:
                    ev_features = featurize_evidence(query, evidence, ds.corpus)
                grounded0 = tuple(p - 1 for p in rollout.grounded_positions)
                rewards.append(rollout.reward.total)
                lp_old.append(rollout.logprob)
                lp_ref.append(logprob_subset(ref_params, ev_features, grounded0))
                samples.append(GroupSample(
                    features=ev_features, indices=grounded0,
                    logprob_old=rollout.logprob, logprob_ref=lp_ref[-1],
                ))
                log.reward_breakdowns.append({
                    "kind": "generator", "query_id": query.id,
                    **asdict(rollout.reward),
                })
            batch = make_group_batch(rewards, lp_old, lp_ref, cfg.grpo.norm_epsilon)
            lr = schedule_lr(cfg.grpo, step, total_steps)
            params, diag = grpo_step(params, batch, samples, cfg.grpo, learning_rate=lr)
        except (RolloutError, EvselError) as exc:
            logger.warning("stage2 skipped query %s: %s", query.id, exc)
            log.skipped.append(query.id)
            continue
        log.records.append(UpdateRecord(
            stage="generator", iteration=iteration, query_id=query.id,
            group_mean=diag.group_mean, group_std=diag.group_std,
            mean_reward=diag.mean_reward, kl_estimate=diag.kl_estimate,
            grad_norm=diag.grad_norm, learning_rate=diag.learning_rate,
        ))
    return params, log


# --- Evaluation --------------------------------------------------------------


@dataclass
class QueryResult:
    query_id: str
    em: int
    f1: float
    answer: str | None
    citations: tuple[int, ...]
    cited_doc_ids: tuple[str, ...]
    evidence_doc_ids: tuple[str, ...]


@dataclass
class EvalReport:
    em: float                                   # percentage in [0, 100]
    f1: float                                   # percentage in [0, 100]
    n_queries: int
    per_query: list[QueryResult] = field(default_factory=list)
    k_curve: dict[int, float] | None = None
    k_flags: dict[int, bool] | None = None
    recall_at_k: dict[int, float] | None = None
    phat_histogram: list[int] | None = None
    counterfactual: dict[str, float] | None = None


def _cited_doc_ids(evidence: EvidenceSet, citations) -> tuple[str, ...]:
    return tuple(
        evidence.doc_ids[p - 1] for p in citations if 1 <= p <= len(evidence)
    )


def _best_em_f1(answer: str | None, gold_answers) -> tuple[int, float]:
    if answer is None:
        return 0, 0.0
    em = max(exact_match(answer, g) for g in gold_answers)
    f1 = max(token_f1(answer, g) for g in gold_answers)
    return em, f1


def evaluate_em(
    ds: PreparedDataset,
    gen_backend: GeneratorBackend,
    k: int,
    cfg: TrainConfig,
    rng_tag: object = "eval",
    threads: int = 1,
) -> EvalReport:
    """EM/F1 over all queries on the raw top-k pool prefix."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")

    def one(query: Query) -> QueryResult:
        pool = ds.pools[query.id]
        evidence = top_k_evidence(pool, k)
        rng = derive_rng(cfg.seed, rng_tag, k, query.id)
        rollout = gen_backend.rollout(query, evidence, rng)
        em, f1 = _best_em_f1(rollout.generation.answer, query.gold_answers)
        return QueryResult(
            query_id=query.id, em=em, f1=f1,
            answer=rollout.generation.answer,
            citations=rollout.generation.citations,
            cited_doc_ids=_cited_doc_ids(evidence, rollout.generation.citations),
            evidence_doc_ids=evidence.doc_ids,
        )

    results = parallel_map(one, ds.queries, threads)
    n = len(results)
    em_pct = 100.0 * sum(r.em for r in results) / n if n else 0.0
    f1_pct = 100.0 * sum(r.f1 for r in results) / n if n else 0.0
    return EvalReport(em=em_pct, f1=f1_pct, n_queries=n, per_query=results)


def k_curve(
    ds: PreparedDataset,
    gen_backend: GeneratorBackend,
    ks,
    cfg: TrainConfig,
    threads: int = 1,
) -> tuple[dict[int, float], dict[int, bool]]:
    """EM at each evidence budget; budgets beyond the pool are flagged."""
    ks = list(ks)
    if not ks:
        raise ValueError("ks must be nonempty")
    curve: dict[int, float] = {}
    flags: dict[int, bool] = {}
    max_pool = max((len(p) for p in ds.pools.values()), default=0)
    for k in ks:
        report = evaluate_em(ds, gen_backend, k, cfg, rng_tag=("kcurve", k), threads=threads)
        curve[k] = report.em
        flags[k] = k > max_pool
    return curve, flags


@dataclass
class DifficultyReport:
    method: str
    phats: list[float]
    histogram: list[int]
    bin_edges: list[float]
    mean_gap: float           # mean |p_hat - c|
    central_mass: float       # fraction of queries with p_hat in [0.25, 0.75]


def difficulty_distribution(
    ds: PreparedDataset,
    selection_method: str,
    gen_backend: GeneratorBackend,
    cfg: TrainConfig,
    selector_params: PolicyParams | None = None,
) -> DifficultyReport:
    """Histogram of per-query solvability under an evidence-selection method.

    Methods: ``topk`` (pool prefix), ``selector`` (sampled from the trained
    selector), ``random`` (uniform subset).
    """
    method = selection_method.lower()
    if method not in ("topk", "selector", "random"):
        raise ValueError(f"unknown selection method {selection_method!r}")
    if method == "selector" and selector_params is None:
        raise ValueError("selector method needs selector_params")
    uniform = PolicyParams(weights=np.zeros(len(FEATURE_NAMES)))
    phats: list[float] = []
    for query in ds.queries:
        pool = ds.pools[query.id]
        features = ds.features[query.id]
        k = min(cfg.k_select, len(pool))
        rng = derive_rng(cfg.seed, "difficulty", method, query.id)
        if method == "topk":
            evidence = top_k_evidence(pool, k)
        elif method == "selector":
            evidence = evidence_from_pool(
                pool, sorted(sample_subset(selector_params, features, k, rng))
            )
        else:
            evidence = evidence_from_pool(
                pool, sorted(sample_subset(uniform, features, k, rng))
            )
        est = estimate_solvability(query, evidence, gen_backend, cfg.K, cfg.delta_stage1, rng)
        phats.append(est.p_hat)
    counts, edges = np.histogram(np.asarray(phats), bins=10, range=(0.0, 1.0))
    gaps = [abs(p - cfg.c) for p in phats]
    central = [1 for p in phats if 0.25 <= p <= 0.75]
    n = len(phats)
    return DifficultyReport(
        method=method,
        phats=phats,
        histogram=[int(c) for c in counts],
        bin_edges=[float(e) for e in edges],
        mean_gap=sum(gaps) / n if n else 0.0,
        central_mass=sum(central) / n if n else 0.0,
    )


@dataclass
class CounterfactualReport:
    full: float
    remove_cited: float
    keep_only_cited: float
    delta_rm: float
    per_query: list[dict] = field(default_factory=list)


def counterfactual_analysis(
    ds: PreparedDataset,
    gen_backend: GeneratorBackend,
    k: int,
    cfg: TrainConfig,
) -> CounterfactualReport:
    """Evidence-dependence probe: Full vs Remove-Cited vs Keep-Only-Cited.

    The cited set always comes from the Full pass. Remove-Cited excises the
    cited documents and (by default) refills from the next-ranked pool
    documents to hold the evidence budget constant; Keep-Only-Cited retains
    only the cited documents. A generation citing nothing contributes the
    same evidence to all three conditions.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    rows = []
    em_full = em_remove = em_keep = 0
    for query in ds.queries:
        pool = ds.pools[query.id]
        k_eff = min(k, len(pool))
        full_evidence = top_k_evidence(pool, k_eff)

        def fresh_rng():
            return derive_rng(cfg.seed, "counterfactual", k, query.id)

        full_rollout = gen_backend.rollout(query, full_evidence, fresh_rng())
        cited = _cited_doc_ids(full_evidence, full_rollout.generation.citations)
        cited_set = set(cited)

        if cited_set:
            survivors = [i for i, d in enumerate(full_evidence.doc_ids) if d not in cited_set]
            kept_ids = [full_evidence.doc_ids[i] for i in survivors]
            kept_scores = [full_evidence.scores[i] for i in survivors]
            if cfg.refill_removed:
                for doc_id, score in pool.entries[k_eff:]:
                    if len(kept_ids) >= k_eff:
                        break
                    if doc_id not in cited_set:
                        kept_ids.append(doc_id)
                        kept_scores.append(score)
            remove_evidence = EvidenceSet(
                query_id=query.id, doc_ids=tuple(kept_ids), scores=tuple(kept_scores),
                score_scale=full_evidence.score_scale,
            ) if kept_ids else full_evidence
            keep_evidence = EvidenceSet(
                query_id=query.id,
                doc_ids=cited,
                scores=tuple(
                    full_evidence.scores[full_evidence.doc_ids.index(d)] for d in cited
                ),
                score_scale=full_evidence.score_scale,
            )
        else:
            remove_evidence = full_evidence
            keep_evidence = full_evidence

        remove_rollout = gen_backend.rollout(query, remove_evidence, fresh_rng())
        keep_rollout = gen_backend.rollout(query, keep_evidence, fresh_rng())

        row = {"query_id": query.id}
        for name, rollout in (
            ("full", full_rollout), ("remove_cited", remove_rollout),
            ("keep_only_cited", keep_rollout),
        ):
            em, _ = _best_em_f1(rollout.generation.answer, query.gold_answers)
            row[name] = em
        em_full += row["full"]
        em_remove += row["remove_cited"]
        em_keep += row["keep_only_cited"]
        rows.append(row)
    n = max(len(rows), 1)
    full_pct = 100.0 * em_full / n
    remove_pct = 100.0 * em_remove / n
    keep_pct = 100.0 * em_keep / n
    return CounterfactualReport(
        full=full_pct, remove_cited=remove_pct, keep_only_cited=keep_pct,
        delta_rm=full_pct - remove_pct, per_query=rows,
    )


def recall_at_k(ds: PreparedDataset, ks) -> dict[int, float]:
    """Fraction (as a percentage) of queries whose top-K pool is sufficient.

    Labeled multi-hop queries need every required golden document in the
    top-K; unlabeled queries need any gold answer string to appear in a
    top-K document after normalization.
    """
    ks = list(ks)
    if not ks or any(k < 1 for k in ks):
        raise ValueError("every K must be >= 1")
    out: dict[int, float] = {}
    norm_cache: dict[str, str] = {}
    for k in ks:
        hits = 0
        for query in ds.queries:
            pool = ds.pools[query.id]
            top_ids = pool.doc_ids[: min(k, len(pool))]
            if query.required_golden_ids:
                hit = set(query.required_golden_ids).issubset(top_ids)
            else:
                golds = [normalize_answer(g) for g in query.gold_answers]
                hit = False
                for doc_id in top_ids:
                    text = norm_cache.get(doc_id)
                    if text is None:
                        text = normalize_answer(ds.corpus.doc(doc_id).text)
                        norm_cache[doc_id] = text
                    if any(g and g in text for g in golds):
                        hit = True
                        break
            hits += int(hit)
        out[k] = 100.0 * hits / len(ds.queries) if ds.queries else 0.0
    return out


# --- Iterative loop ----------------------------------------------------------


@dataclass
class IterationResult:
    iteration: int
    selector_params: PolicyParams
    generator_params: PolicyParams
    stage1_log: EpochLog
    stage2_log: EpochLog
    report: EvalReport


@dataclass
class RunResult:
    selector_params: PolicyParams
    generator_params: PolicyParams
    filter_stats: list[FilterStats]
    iterations: list[IterationResult]


def _iteration_report(
    eval_ds: PreparedDataset, backend: GeneratorBackend, cfg: TrainConfig,
    threads: int = 1,
) -> EvalReport:
    report = evaluate_em(eval_ds, backend, cfg.k_select, cfg, threads=threads)
    curve, flags = k_curve(eval_ds, backend, cfg.eval_ks, cfg, threads=threads)
    report.k_curve = curve
    report.k_flags = flags
    report.recall_at_k = recall_at_k(eval_ds, cfg.eval_ks)
    return report


def run_iterative(
    corpus: Corpus,
    cfg: TrainConfig,
    eval_corpus: Corpus | None = None,
    output_dir: str | Path | None = None,
    threads: int = 1,
) -> RunResult:
    """Filter once, then alternate selector and generator epochs T times.

    Evaluation reports use the raw top-k pools of the (held-out when given)
    evaluation corpus with the selector discarded. Policy updates are always
    applied in query order; ``threads`` parallelizes only the query-level
    work that has no parameter state, so results are identical for any
    thread count.
    """
    ds = prepare_dataset(corpus, cfg)
    eval_ds = prepare_dataset(eval_corpus, cfg) if eval_corpus is not None else ds
    selector = initial_selector_params(cfg)
    generator = initial_generator_params(cfg)

    filter_backend = SimulatorBackend(corpus, generator, cfg)
    kept, stats = apply_filter(
        ds.queries, ds.pools, ds.features, selector, filter_backend, cfg,
        threads=threads,
    )
    filtered_ds = PreparedDataset(
        corpus=ds.corpus, queries=kept, pools=ds.pools, features=ds.features
    )
    out = Path(output_dir) if output_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        with (out / "filter_report.jsonl").open("w", encoding="utf-8") as fh:
            for st in stats:
                fh.write(st.to_json_line() + "\n")

    iterations: list[IterationResult] = []
    for t in range(1, cfg.T + 1):
        if cfg.refilter_each_iteration and t > 1:
            backend = SimulatorBackend(corpus, generator, cfg)
            kept, _ = apply_filter(
                ds.queries, ds.pools, ds.features, selector, backend, cfg,
                seed=cfg.seed + t, threads=threads,
            )
            filtered_ds = PreparedDataset(
                corpus=ds.corpus, queries=kept, pools=ds.pools, features=ds.features
            )
        frozen_gen = SimulatorBackend(corpus, generator, cfg)
        selector, log1 = train_selector_epoch(filtered_ds, selector, frozen_gen, cfg, iteration=t)
        generator, log2 = train_generator_epoch(ds, selector, generator, cfg, iteration=t)
        eval_backend = SimulatorBackend(eval_ds.corpus, generator, cfg)
        report = _iteration_report(eval_ds, eval_backend, cfg, threads=threads)
        iterations.append(IterationResult(
            iteration=t, selector_params=selector, generator_params=generator,
            stage1_log=log1, stage2_log=log2, report=report,
        ))
        if out is not None:
            iter_dir = out / f"iter_{t}"
            iter_dir.mkdir(parents=True, exist_ok=True)
            save_params(selector, iter_dir / "selector.ckpt")
            save_params(generator, iter_dir / "generator.ckpt")
            write_eval_report(report, iter_dir)
            with (out / "train_log.jsonl").open("a", encoding="utf-8") as fh:
                for rec in log1.records + log2.records:
                    fh.write(rec.to_json_line() + "\n")
    return RunResult(
        selector_params=selector, generator_params=generator,
        filter_stats=stats, iterations=iterations,
    )


# --- Report serialization ----------------------------------------------------


def _fmt(x: float) -> str:
    return repr(round(float(x), 10))


def write_eval_report(report: EvalReport, directory: str | Path) -> None:
    """report.json plus flat tabular files suitable for external plotting."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    summary = {
        "em": report.em, "f1": report.f1, "n_queries": report.n_queries,
        "k_curve": {str(k): v for k, v in (report.k_curve or {}).items()},
        "k_flags": {str(k): v for k, v in (report.k_flags or {}).items()},
        "recall_at_k": {str(k): v for k, v in (report.recall_at_k or {}).items()},
        "phat_histogram": report.phat_histogram,
        "counterfactual": report.counterfactual,
    }
    (directory / "report.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    with (directory / "report_queries.tsv").open("w", encoding="utf-8") as fh:
        fh.write("query_id\tem\tf1\tanswer\tcitations\n")
        for row in report.per_query:
            cites = ",".join(str(c) for c in row.citations)
            fh.write(f"{row.query_id}\t{row.em}\t{_fmt(row.f1)}\t{row.answer or ''}\t{cites}\n")
    if report.k_curve:
        with (directory / "report_curves.tsv").open("w", encoding="utf-8") as fh:
            fh.write("k\tem\trecall\n")
            for k in sorted(report.k_curve):
                recall = (report.recall_at_k or {}).get(k, "")
                recall_txt = _fmt(recall) if recall != "" else ""
                fh.write(f"{k}\t{_fmt(report.k_curve[k])}\t{recall_txt}\n")
