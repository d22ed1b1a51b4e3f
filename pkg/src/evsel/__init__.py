"""Desk-scale laboratory for boundary-targeted evidence selection training.

A BM25-backed retrieval pool feeds a trainable evidence selector; a
simulated (or remote) generator answers from the selected evidence; both
policies are optimized with group-relative advantages and a clipped
likelihood-ratio objective.
"""

from .backends import (
    EndpointConfig,
    EvidenceSet,
    GeneratorBackend,
    RemoteBackend,
    Rollout,
    SimulatorBackend,
    collect_rollouts,
    evidence_from_pool,
    remote_rollout,
    simulate_rollout,
    top_k_evidence,
)
from .config import RunConfig, RunMode, TrainConfig, load_config, load_train_config
from .corpus import (
    CandidatePool,
    Corpus,
    DocLabel,
    Document,
    Query,
    SyntheticSpec,
    bm25_score,
    build_candidate_pool,
    build_corpus_stats,
    build_pool_from_scores,
    generate_synthetic_benchmark,
    load_corpus,
    load_dense_scores,
    write_corpus,
)
from .filtering import FilterDecision, FilterStats, apply_filter, filter_stats
from .grpo import (
    GroupBatch,
    GroupSample,
    GrpoConfig,
    clipped_surrogate,
    cosine_lr,
    grpo_objective,
    grpo_step,
    make_group_batch,
    normalize_advantages,
)
from .pipeline import (
    EvalReport,
    PreparedDataset,
    counterfactual_analysis,
    difficulty_distribution,
    evaluate_em,
    initial_generator_params,
    initial_selector_params,
    k_curve,
    prepare_dataset,
    recall_at_k,
    run_iterative,
    train_generator_epoch,
    train_selector_epoch,
)
from .policy import (
    FEATURE_NAMES,
    PolicyParams,
    argmax_subset,
    exact_solvability,
    featurize,
    featurize_evidence,
    grad_logprob_subset,
    load_params,
    logprob_subset,
    sample_subset,
    save_params,
)
from .rewards import (
    GeneratorRewardBreakdown,
    SelectorRewardBreakdown,
    SolvabilityEstimate,
    boundary_reward,
    count_penalty,
    estimate_solvability,
    generator_reward,
    relevance_reward,
    relevance_reward_minmax,
    rollout_correct,
    selector_reward,
)
from .text import (
    ParsedGeneration,
    ParsedSelection,
    exact_match,
    normalize_answer,
    parse_generation,
    parse_selection,
    render_generation,
    render_selection,
    token_f1,
    tokenize,
)

__version__ = "0.1.0"
