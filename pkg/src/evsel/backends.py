"""Generator backends: a parametric simulator and a remote endpoint client.

The simulator grounds on a sampled subset of the evidence documents via the
generator feature policy; its answer is correct exactly when every required
golden document is in the evidence and all of them were grounded. The
remote backend speaks a chat-completion-style HTTP API and is evaluation
only (no log-prob access, not trainable).
"""

from __future__ import annotations

import abc
import os
import threading
import time
from dataclasses import dataclass

import numpy as np

from .corpus import (
    CandidatePool,
    Corpus,
    DocLabel,
    EvidenceSet,
    Query,
    evidence_from_pool,
    top_k_evidence,
)
from .errors import (
    EndpointError,
    EndpointTimeoutError,
    RolloutError,
    UnsupportedModeError,
    UnsupportedTrainingError,
)
from .policy import (
    PolicyParams,
    argmax_subset,
    featurize_evidence,
    logprob_subset,
    sample_subset,
)
from .prompts import GENERATOR_PROMPT, generator_user_message
from .rewards import GeneratorRewardBreakdown, generator_reward
from .text import ParsedGeneration, parse_generation, render_generation


@dataclass
class Rollout:
    generation: ParsedGeneration
    reward: GeneratorRewardBreakdown
    grounded_positions: tuple[int, ...] | None = None  # 1-based within evidence
    logprob: float | None = None


class GeneratorBackend(abc.ABC):
    """Interface every generator implementation satisfies."""

    trainable: bool = False
    deterministic_mode: bool = False

    @abc.abstractmethod
    def rollout(self, query: Query, evidence: EvidenceSet, rng: np.random.Generator) -> Rollout:
        """Produce one scored rollout for (query, evidence)."""


def ensure_trainable(backend: GeneratorBackend) -> None:
    if not backend.trainable:
        raise UnsupportedTrainingError(
            f"{type(backend).__name__} does not expose log-probs; it cannot be trained"
        )


def _simulated_answer(
    query: Query, evidence: EvidenceSet, grounded_positions_0: list[int], corpus: Corpus
) -> str:
    required = set(query.required_golden_ids)
    grounded_ids = [evidence.doc_ids[i] for i in grounded_positions_0]
    if required and required.issubset(evidence.doc_ids) and required.issubset(grounded_ids):
        return query.gold_answers[0]
    for doc_id in grounded_ids:
        doc = corpus.doc(doc_id)
        if doc.label is DocLabel.MISLEADING and doc.answer_span:
            return doc.answer_span
    return "unknown"


def simulate_rollout(
    gen_params: PolicyParams,
    query: Query,
    evidence: EvidenceSet,
    rng: np.random.Generator,
    corpus: Corpus,
    cfg,
    n_ground: int | None = None,
    deterministic: bool = False,
) -> Rollout:
    """One simulated rollout grounding exactly ``n_ground`` documents.

    Raises ValueError when the evidence is smaller than the grounding size;
    callers that evaluate sub-sized evidence cap the grounding themselves.
    """
    if not query.required_golden_ids:
        raise UnsupportedModeError(
            f"query {query.id!r} is not simulator-capable (no required golden docs)"
        )
    n_ground = cfg.n_ground if n_ground is None else n_ground
    if len(evidence) < n_ground:
        raise ValueError(
            f"evidence size {len(evidence)} is below grounding size {n_ground}"
        )
    features = featurize_evidence(query, evidence, corpus)
    if deterministic:
        grounded0 = argmax_subset(gen_params, features, n_ground)
    else:
        grounded0 = sample_subset(gen_params, features, n_ground, rng)
    answer = _simulated_answer(query, evidence, grounded0, corpus)
    positions1 = tuple(i + 1 for i in grounded0)
    raw = render_generation(positions1, answer)
    gen = parse_generation(raw, n_docs=len(evidence))
    reward = generator_reward(gen, query.gold_answers, cfg)
    logprob = logprob_subset(gen_params, features, grounded0)
    return Rollout(
        generation=gen, reward=reward,
        grounded_positions=positions1, logprob=logprob,
    )


class SimulatorBackend(GeneratorBackend):
    """Parametric generator whose correctness depends on grounded documents."""

    trainable = True

    def __init__(
        self,
        corpus: Corpus,
        gen_params: PolicyParams,
        cfg,
        deterministic: bool = False,
    ):
        self.corpus = corpus
        self.params = gen_params
        self.cfg = cfg
        self.deterministic_mode = deterministic

    def rollout(self, query: Query, evidence: EvidenceSet, rng: np.random.Generator) -> Rollout:
        n_ground = min(self.cfg.n_ground, len(evidence))
        return simulate_rollout(
            self.params, query, evidence, rng, self.corpus, self.cfg,
            n_ground=n_ground, deterministic=self.deterministic_mode,
        )


@dataclass
class EndpointConfig:
    base_url: str = ""
    model: str = ""
    auth_env: str = "EVSEL_API_KEY"
    timeout: float = 30.0
    max_retries: int = 3
    concurrency: int = 4
    temperature: float = 1.0
    max_tokens: int = 256


class RemoteBackend(GeneratorBackend):
    """Chat-completion endpoint client with bounded retries and backoff."""

    trainable = False

    def __init__(
        self,
        endpoint: EndpointConfig,
        corpus: Corpus,
        cfg,
        backoff_base: float = 0.5,
    ):
        self.endpoint = endpoint
        self.corpus = corpus
        self.cfg = cfg
        self.backoff_base = backoff_base
        self._semaphore = threading.Semaphore(max(1, endpoint.concurrency))

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.endpoint.auth_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _request(self, payload: dict) -> str:
        import requests

        url = self.endpoint.base_url.rstrip("/") + "/chat/completions"
        last_error: Exception | None = None
        timed_out = False
        attempts = max(1, self.endpoint.max_retries)
        for attempt in range(attempts):
            if attempt:
                time.sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                with self._semaphore:
                    resp = requests.post(
                        url, json=payload, headers=self._headers(),
                        timeout=self.endpoint.timeout,
                    )
            except requests.Timeout as exc:
                last_error, timed_out = exc, True
                continue
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code // 100 != 2:
                last_error = EndpointError(
                    f"endpoint returned status {resp.status_code}"
                )
                continue
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise EndpointError(f"malformed endpoint response: {exc}") from exc
        if timed_out:
            raise EndpointTimeoutError(
                f"endpoint timed out after {attempts} attempts: {last_error}"
            )
        raise EndpointError(
            f"endpoint failed after {attempts} attempts: {last_error}"
        )

    def rollout(self, query: Query, evidence: EvidenceSet, rng: np.random.Generator) -> Rollout:
        return remote_rollout(
            self.endpoint, query, evidence, self.corpus, self.cfg,
            temperature=self.endpoint.temperature,
            max_tokens=self.endpoint.max_tokens,
            rng_seed=int(rng.integers(0, 2**31 - 1)),
            client=self,
        )


def remote_rollout(
    endpoint: EndpointConfig,
    query: Query,
    evidence: EvidenceSet,
    corpus: Corpus,
    cfg,
    temperature: float = 1.0,
    max_tokens: int = 256,
    rng_seed: int | None = None,
    client: RemoteBackend | None = None,
) -> Rollout:
    """One rollout against a chat-completion endpoint; parsed and scored."""
    client = client or RemoteBackend(endpoint, corpus, cfg)
    payload = {
        "model": endpoint.model,
        "messages": [
            {"role": "system", "content": GENERATOR_PROMPT},
            {"role": "user", "content": generator_user_message(query, evidence.doc_ids, corpus)},
        ],
        "temperature": temperature,
        "max_tokens": max_tokens,
    }
    if rng_seed is not None:
        payload["seed"] = rng_seed
    raw = client._request(payload)
    gen = parse_generation(raw, n_docs=len(evidence))
    reward = generator_reward(gen, query.gold_answers, cfg)
    return Rollout(generation=gen, reward=reward)


def collect_rollouts(
    backend: GeneratorBackend,
    query: Query,
    evidence: EvidenceSet,
    k_rollouts: int,
    rng: np.random.Generator,
) -> list[Rollout]:
    """Exactly K rollouts on independent substreams, ordered by index.

    Backend failures are re-raised as :class:`RolloutError` carrying the
    failing index.
    """
    if k_rollouts < 1:
        raise ValueError(f"k_rollouts must be >= 1, got {k_rollouts}")
    streams = rng.spawn(k_rollouts)
    rollouts: list[Rollout] = []
    for i, stream in enumerate(streams):
        try:
            rollouts.append(backend.rollout(query, evidence, stream))
        except (UnsupportedModeError, ValueError):
            raise
        except Exception as exc:
            raise RolloutError(i, str(exc)) from exc
    return rollouts
