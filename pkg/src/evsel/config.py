"""Layered run configuration.

Defaults cover every training hyperparameter; a JSON config file with
sections {retrieval, selector_reward, generator_reward, grpo, filtering,
pipeline, endpoint} overrides defaults, and command-line ``--set
section.key=value`` flags override the file. Unknown sections or keys are
hard errors so a typo can never silently fall back to a default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from enum import Enum
from pathlib import Path

from .backends import EndpointConfig
from .errors import ConfigError
from .grpo import GrpoConfig


@dataclass
class TrainConfig:
    """All hyperparameters, with the documented defaults."""

    # retrieval
    n_pool: int = 25
    bm25_k1: float = 1.2
    bm25_b: float = 0.75
    score_source: str = "bm25"            # "bm25" or "dense"
    # selector reward
    c: float = 0.5
    delta_stage1: float = 0.8
    lambda_bdy: float = 1.0
    lambda_rel: float = 0.2
    tau: float = 10.0
    alpha: float = 0.5
    k_star: int = 5
    p_max: float = 1.0
    rel_rescale: str = "logistic"          # "logistic" or "minmax"
    # generator reward
    lambda_acc: float = 0.8
    lambda_cite: float = 0.2
    beta1: float = 0.7
    beta2: float = 0.3
    n_star: int = 2
    n_ground: int = 2
    # filtering
    n_filter_selections: int = 8
    delta_filter: float = 0.5
    m_min: float = 0.25
    m_max: float = 0.85
    v_min: float = 0.02
    filter_source: str = "selector"        # "selector" or "topk"
    # pipeline
    M: int = 8
    K: int = 10
    T: int = 3
    k_select: int = 5
    seed: int = 0
    selector_init: tuple[float, ...] = (5.0, -4.0, 0.0, 0.0)
    generator_init: tuple[float, ...] = (1.0, 3.5, 0.0, 0.0)
    refill_removed: bool = True
    refilter_each_iteration: bool = False
    eval_ks: tuple[int, ...] = (1, 3, 5, 10, 15, 30)
    # nested
    grpo: GrpoConfig = field(default_factory=GrpoConfig)
    endpoint: EndpointConfig = field(default_factory=EndpointConfig)

    def validate(self) -> None:
        checks = [
            (0.0 < self.c < 1.0, "selector_reward.c must lie in (0,1)"),
            (0.0 < self.bm25_b <= 1.0, "retrieval.bm25_b must lie in (0,1]"),
            (self.bm25_k1 > 0, "retrieval.bm25_k1 must be positive"),
            (self.tau > 0, "selector_reward.tau must be positive"),
            (self.alpha >= 0, "selector_reward.alpha must be nonnegative"),
            (self.p_max >= 0, "selector_reward.p_max must be nonnegative"),
            (self.k_star >= 1, "selector_reward.k_star must be >= 1"),
            (min(self.lambda_bdy, self.lambda_rel) >= 0, "selector weights must be nonnegative"),
            (min(self.lambda_acc, self.lambda_cite) >= 0, "generator weights must be nonnegative"),
            (min(self.beta1, self.beta2) >= 0, "accuracy weights must be nonnegative"),
            (self.n_star >= 0, "generator_reward.n_star must be nonnegative"),
            (self.n_ground >= 1, "generator_reward.n_ground must be >= 1"),
            (self.n_pool >= 1, "retrieval.n_pool must be >= 1"),
            (1 <= self.k_select <= self.n_pool, "pipeline.k_select must lie in [1, n_pool]"),
            (self.M >= 2, "pipeline.M must be >= 2"),
            (self.K >= 1, "pipeline.K must be >= 1"),
            (self.T >= 1, "pipeline.T must be >= 1"),
            (self.n_filter_selections >= 1, "filtering.n_selections must be >= 1"),
            (0 <= self.m_min <= self.m_max <= 1, "filtering mean bounds must satisfy 0<=m_min<=m_max<=1"),
            (self.v_min >= 0, "filtering.v_min must be nonnegative"),
            (0 <= self.delta_stage1 <= 1 and 0 <= self.delta_filter <= 1,
             "correctness thresholds must lie in [0,1]"),
            (self.score_source in ("bm25", "dense"), "retrieval.score_source must be bm25 or dense"),
            (self.rel_rescale in ("logistic", "minmax"),
             "selector_reward.rel_rescale must be logistic or minmax"),
            (self.filter_source in ("selector", "topk"),
             "filtering.source must be selector or topk"),
            (len(self.selector_init) == 4 and len(self.generator_init) == 4,
             "policy init vectors must have 4 entries"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)


class RunMode(str, Enum):
    SIMULATOR = "simulator"
    REMOTE = "remote"


@dataclass
class RunConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    corpus_path: str | None = None
    queries_path: str | None = None
    dense_scores_path: str | None = None
    output_dir: str | None = None
    mode: RunMode = RunMode.SIMULATOR
    thread_count: int = 1
    log_level: str = "INFO"

    def validate(self) -> None:
        self.train.validate()
        if self.thread_count < 1:
            raise ConfigError("thread count must be >= 1")
        if self.mode is RunMode.REMOTE and not self.train.endpoint.base_url:
            raise ConfigError("remote mode requires endpoint.base_url")
        if self.train.score_source == "dense" and not self.dense_scores_path:
            raise ConfigError("dense score source requires a dense-scores file")


# --- Section <-> field mapping ----------------------------------------------

_SECTIONS: dict[str, dict[str, str]] = {
    "retrieval": {
        "n_pool": "n_pool", "bm25_k1": "bm25_k1", "bm25_b": "bm25_b",
        "score_source": "score_source",
    },
    "selector_reward": {
        "c": "c", "delta_stage1": "delta_stage1", "lambda_bdy": "lambda_bdy",
        "lambda_rel": "lambda_rel", "tau": "tau", "alpha": "alpha",
        "k_star": "k_star", "p_max": "p_max", "rel_rescale": "rel_rescale",
    },
    "generator_reward": {
        "lambda_acc": "lambda_acc", "lambda_cite": "lambda_cite",
        "beta1": "beta1", "beta2": "beta2", "n_star": "n_star",
        "n_ground": "n_ground",
    },
    "grpo": {
        "clip_epsilon": "clip_epsilon", "kl_coeff": "kl_coeff",
        "norm_epsilon": "norm_epsilon", "learning_rate": "learning_rate",
        "group_size": "group_size", "ratio_cap": "ratio_cap",
        "kl_estimator": "kl_estimator", "lr_schedule": "lr_schedule",
        "warmup_frac": "warmup_frac",
    },
    "filtering": {
        "n_selections": "n_filter_selections", "delta_filter": "delta_filter",
        "m_min": "m_min", "m_max": "m_max", "v_min": "v_min",
        "source": "filter_source",
    },
    "pipeline": {
        "M": "M", "K": "K", "T": "T", "k_select": "k_select", "seed": "seed",
        "selector_init": "selector_init", "generator_init": "generator_init",
        "refill_removed": "refill_removed",
        "refilter_each_iteration": "refilter_each_iteration",
        "eval_ks": "eval_ks",
    },
    "endpoint": {
        "base_url": "base_url", "model": "model", "auth_env": "auth_env",
        "timeout": "timeout", "max_retries": "max_retries",
        "concurrency": "concurrency", "temperature": "temperature",
        "max_tokens": "max_tokens",
    },
}

_NESTED_TARGET = {"grpo": "grpo", "endpoint": "endpoint"}


def _field_types(obj) -> dict[str, type]:
    return {f.name: f.type for f in fields(obj)}


def _coerce(value, target_example, where: str):
    """Coerce a raw JSON/string value to the type of the current default."""
    if isinstance(target_example, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false"):
            return value.lower() == "true"
        raise ConfigError(f"{where}: expected a boolean, got {value!r}")
    if isinstance(target_example, int) and not isinstance(target_example, bool):
        if isinstance(value, bool) or isinstance(value, float) and not float(value).is_integer():
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: expected an integer, got {value!r}") from None
    if isinstance(target_example, float):
        if isinstance(value, bool):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: expected a number, got {value!r}") from None
    if isinstance(target_example, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if isinstance(target_example, tuple):
        if isinstance(value, str):
            try:
                value = json.loads(value)
            except json.JSONDecodeError:
                raise ConfigError(f"{where}: expected a list, got {value!r}") from None
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        element = target_example[0] if target_example else 0.0
        return tuple(_coerce(v, element, where) for v in value)
    raise ConfigError(f"{where}: unsupported value {value!r}")


def _apply(cfg: TrainConfig, section: str, key: str, value) -> None:
    if section not in _SECTIONS:
        raise ConfigError(f"unknown section {section!r}")
    mapping = _SECTIONS[section]
    if key not in mapping:
        raise ConfigError(f"unknown key {section}.{key}")
    attr = mapping[key]
    target = getattr(cfg, _NESTED_TARGET[section]) if section in _NESTED_TARGET else cfg
    current = getattr(target, attr)
    setattr(target, attr, _coerce(value, current, f"{section}.{key}"))


def config_sections(cfg: TrainConfig) -> dict:
    """Resolved config as the sectioned tree that the file format uses."""
    out: dict[str, dict] = {}
    for section, mapping in _SECTIONS.items():
        target = getattr(cfg, _NESTED_TARGET[section]) if section in _NESTED_TARGET else cfg
        sec = {}
        for key, attr in mapping.items():
            value = getattr(target, attr)
            sec[key] = list(value) if isinstance(value, tuple) else value
        out[section] = sec
    return out


def load_train_config(
    path: str | Path | None = None,
    overrides: dict[str, object] | None = None,
) -> TrainConfig:
    """Defaults, overridden by the config file, overridden by flags."""
    cfg = TrainConfig()
    cfg.grpo = GrpoConfig()
    cfg.endpoint = EndpointConfig()
    if path is not None:
        raw = Path(path).read_text(encoding="utf-8").strip()
        if raw:
            try:
                tree = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {path}: invalid JSON ({exc.msg})") from None
            if not isinstance(tree, dict):
                raise ConfigError(f"config file {path}: top level must be an object")
            for section, body in tree.items():
                if section not in _SECTIONS:
                    raise ConfigError(f"unknown section {section!r}")
                if not isinstance(body, dict):
                    raise ConfigError(f"section {section!r} must be an object")
                for key, value in body.items():
                    _apply(cfg, section, key, value)
    for dotted, value in (overrides or {}).items():
        if dotted.count(".") != 1:
            raise ConfigError(f"override {dotted!r} must look like section.key")
        section, key = dotted.split(".")
        _apply(cfg, section, key, value)
    try:
        cfg.grpo.__post_init__()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg.validate()
    return cfg


def load_config(
    path: str | Path | None = None,
    overrides: dict[str, object] | None = None,
    **run_kwargs,
) -> RunConfig:
    """Full run configuration: hyperparameters plus paths and mode."""
    cfg = RunConfig(train=load_train_config(path, overrides), **run_kwargs)
    cfg.validate()
    return cfg


def echo_config(cfg: TrainConfig, path: str | Path) -> None:
    """Write the fully resolved config; reloading it reproduces ``cfg``."""
    Path(path).write_text(
        json.dumps(config_sections(cfg), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
