"""Command-line entry points.

Exit codes: 0 success, 2 config error, 3 data error, 4 endpoint error,
5 training divergence, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .backends import RemoteBackend, SimulatorBackend
from .config import RunConfig, RunMode, echo_config, load_train_config
from .corpus import (
    SyntheticSpec,
    generate_synthetic_benchmark,
    load_corpus,
    load_dense_scores,
    write_corpus,
)
from .errors import ConfigError, EvselError, UnsupportedTrainingError
from .filtering import apply_filter
from .pipeline import (
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
    write_eval_report,
)
from .policy import load_params, save_params

COMMANDS = (
    "gen-corpus", "retrieve", "filter", "train-selector", "train-generator",
    "train", "eval", "k-curve", "difficulty", "counterfactual", "recall",
    "reward-debug",
)


def _parse_overrides(pairs: list[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"--set expects section.key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _add_common(parser: argparse.ArgumentParser, needs_corpus: bool = True) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a single config value (repeatable)")
    if needs_corpus:
        parser.add_argument("--corpus", required=True, help="corpus JSONL file")
        parser.add_argument("--queries", help="separate queries JSONL file")
        parser.add_argument("--dense-scores", help="precomputed retrieval scores JSONL")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--mode", choices=["simulator", "remote"], default="simulator")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--log-level", default="INFO")
    parser.add_argument("--selector-ckpt", help="selector checkpoint to start from")
    parser.add_argument("--generator-ckpt", help="generator checkpoint to start from")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evsel", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("gen-corpus", help="generate a synthetic labeled benchmark")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-queries", type=int, required=True)
    p.add_argument("--golden", type=int, default=2)
    p.add_argument("--misleading", type=int, default=3)
    p.add_argument("--irrelevant", type=int, default=20)
    p.add_argument("--out", required=True, help="output JSONL file")

    for name in ("retrieve", "filter", "train-selector", "train-generator",
                 "train", "eval", "k-curve", "difficulty", "counterfactual",
                 "recall"):
        p = sub.add_parser(name)
        _add_common(p)
        if name == "train":
            p.add_argument("--eval-corpus", help="held-out corpus for reports")
        if name in ("eval", "counterfactual"):
            p.add_argument("--k", type=int, default=None, help="evidence budget")
        if name == "difficulty":
            p.add_argument("--method", choices=["topk", "selector", "random"],
                           default="topk")

    p = sub.add_parser("reward-debug", help="print a component table for a rollout log")
    p.add_argument("--rollout-log", required=True, help="JSONL reward log")
    return parser


def _load_run_config(args) -> RunConfig:
    cfg = RunConfig(
        train=load_train_config(args.config, _parse_overrides(args.set)),
        corpus_path=getattr(args, "corpus", None),
        queries_path=getattr(args, "queries", None),
        dense_scores_path=getattr(args, "dense_scores", None),
        output_dir=args.out,
        mode=RunMode(args.mode),
        thread_count=args.threads,
        log_level=args.log_level,
    )
    cfg.validate()
    logging.basicConfig(level=getattr(logging, cfg.log_level.upper(), logging.INFO))
    return cfg


def _prepared(run: RunConfig):
    corpus = load_corpus(run.corpus_path, run.queries_path)
    dense = load_dense_scores(run.dense_scores_path) if run.dense_scores_path else None
    return corpus, prepare_dataset(corpus, run.train, dense_scores=dense)


def _load_or_init(path: str | None, factory, cfg) -> "PolicyParams":
    return load_params(path) if path else factory(cfg)


def _backend(run: RunConfig, corpus, gen_params):
    if run.mode is RunMode.REMOTE:
        return RemoteBackend(run.train.endpoint, corpus, run.train)
    return SimulatorBackend(corpus, gen_params, run.train)


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _cmd_gen_corpus(args) -> int:
    spec = SyntheticSpec(n_golden=args.golden, n_misleading=args.misleading,
                         n_irrelevant=args.irrelevant)
    corpus = generate_synthetic_benchmark(args.seed, args.n_queries, spec)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_corpus(corpus, args.out)
    print(f"wrote {len(corpus.documents)} documents, {len(corpus.queries)} queries to {args.out}")
    return 0


def _cmd_retrieve(args) -> int:
    run = _load_run_config(args)
    corpus, ds = _prepared(run)
    out = Path(run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    echo_config(run.train, out / "config.json")
    with (out / "pools.jsonl").open("w", encoding="utf-8") as fh:
        for query in ds.queries:
            pool = ds.pools[query.id]
            fh.write(json.dumps({
                "query_id": query.id,
                "entries": [[d, s] for d, s in pool.entries],
            }) + "\n")
    print(f"wrote pools for {len(ds.queries)} queries to {out / 'pools.jsonl'}")
    return 0


def _cmd_filter(args) -> int:
    run = _load_run_config(args)
    corpus, ds = _prepared(run)
    selector = _load_or_init(args.selector_ckpt, initial_selector_params, run.train)
    generator = _load_or_init(args.generator_ckpt, initial_generator_params, run.train)
    backend = _backend(run, corpus, generator)
    kept, stats = apply_filter(ds.queries, ds.pools, ds.features, selector,
                               backend, run.train, threads=run.thread_count)
    out = Path(run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    echo_config(run.train, out / "config.json")
    with (out / "filter_report.jsonl").open("w", encoding="utf-8") as fh:
        for st in stats:
            fh.write(st.to_json_line() + "\n")
    (out / "kept_queries.txt").write_text(
        "".join(q.id + "\n" for q in kept), encoding="utf-8")
    print(f"kept {len(kept)}/{len(ds.queries)} queries")
    return 0


def _cmd_train(args) -> int:
    run = _load_run_config(args)
    if run.mode is RunMode.REMOTE:
        raise UnsupportedTrainingError("remote backends cannot be trained")
    corpus = load_corpus(run.corpus_path, run.queries_path)
    eval_corpus = load_corpus(args.eval_corpus) if args.eval_corpus else None
    out = Path(run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    echo_config(run.train, out / "config.json")
    result = run_iterative(corpus, run.train, eval_corpus=eval_corpus,
                           output_dir=out, threads=run.thread_count)
    final = result.iterations[-1].report
    print(f"finished {run.train.T} iterations; final EM {final.em:.2f}, F1 {final.f1:.2f}")
    return 0


def _cmd_train_selector(args) -> int:
    run = _load_run_config(args)
    if run.mode is RunMode.REMOTE:
        raise UnsupportedTrainingError("remote backends cannot be trained")
    corpus, ds = _prepared(run)
    selector = _load_or_init(args.selector_ckpt, initial_selector_params, run.train)
    generator = _load_or_init(args.generator_ckpt, initial_generator_params, run.train)
    backend = SimulatorBackend(corpus, generator, run.train)
    selector, log = train_selector_epoch(ds, selector, backend, run.train)
    out = Path(run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    echo_config(run.train, out / "config.json")
    save_params(selector, out / "selector.ckpt")
    with (out / "train_log.jsonl").open("w", encoding="utf-8") as fh:
        for rec in log.records:
            fh.write(rec.to_json_line() + "\n")
    print(f"selector epoch done: {len(log.records)} updates, {len(log.skipped)} skipped")
    return 0


def _cmd_train_generator(args) -> int:
    run = _load_run_config(args)
    if run.mode is RunMode.REMOTE:
        raise UnsupportedTrainingError("remote backends cannot be trained")
    corpus, ds = _prepared(run)
    selector = _load_or_init(args.selector_ckpt, initial_selector_params, run.train)
    generator = _load_or_init(args.generator_ckpt, initial_generator_params, run.train)
    generator, log = train_generator_epoch(ds, selector, generator, run.train)
    out = Path(run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    echo_config(run.train, out / "config.json")
    save_params(generator, out / "generator.ckpt")
    with (out / "train_log.jsonl").open("w", encoding="utf-8") as fh:
        for rec in log.records:
            fh.write(rec.to_json_line() + "\n")
    print(f"generator epoch done: {len(log.records)} updates, {len(log.skipped)} skipped")
    return 0


def _cmd_eval(args) -> int:
    run = _load_run_config(args)
    corpus, ds = _prepared(run)
    generator = _load_or_init(args.generator_ckpt, initial_generator_params, run.train)
    backend = _backend(run, corpus, generator)
    k = args.k if args.k else run.train.k_select
    report = evaluate_em(ds, backend, k, run.train, threads=run.thread_count)
    out = Path(run.output_dir)
    write_eval_report(report, out)
    echo_config(run.train, out / "config.json")
    print(f"EM {report.em:.2f}  F1 {report.f1:.2f}  over {report.n_queries} queries at k={k}")
    return 0


def _cmd_k_curve(args) -> int:
    run = _load_run_config(args)
    corpus, ds = _prepared(run)
    generator = _load_or_init(args.generator_ckpt, initial_generator_params, run.train)
    backend = _backend(run, corpus, generator)
    curve, flags = k_curve(ds, backend, run.train.eval_ks, run.train,
                           threads=run.thread_count)
    out = Path(run.output_dir)
    _write_json(out / "k_curve.json", {
        "em": {str(k): v for k, v in curve.items()},
        "exceeds_pool": {str(k): v for k, v in flags.items()},
    })
    echo_config(run.train, out / "config.json")
    for k in sorted(curve):
        suffix = "  (budget exceeds pool)" if flags[k] else ""
        print(f"k={k:3d}  EM {curve[k]:.2f}{suffix}")
    return 0


def _cmd_difficulty(args) -> int:
    run = _load_run_config(args)
    corpus, ds = _prepared(run)
    generator = _load_or_init(args.generator_ckpt, initial_generator_params, run.train)
    selector = load_params(args.selector_ckpt) if args.selector_ckpt else None
    backend = _backend(run, corpus, generator)
    report = difficulty_distribution(ds, args.method, backend, run.train,
                                     selector_params=selector)
    out = Path(run.output_dir)
    _write_json(out / f"difficulty_{args.method}.json", {
        "method": report.method,
        "histogram": report.histogram,
        "bin_edges": report.bin_edges,
        "mean_gap": report.mean_gap,
        "central_mass": report.central_mass,
        "phats": report.phats,
    })
    echo_config(run.train, out / "config.json")
    print(f"{args.method}: mean |p-c| {report.mean_gap:.4f}, "
          f"mass in [0.25,0.75] {report.central_mass:.3f}")
    return 0


def _cmd_counterfactual(args) -> int:
    run = _load_run_config(args)
    corpus, ds = _prepared(run)
    generator = _load_or_init(args.generator_ckpt, initial_generator_params, run.train)
    backend = _backend(run, corpus, generator)
    k = args.k if args.k else run.train.k_select
    report = counterfactual_analysis(ds, backend, k, run.train)
    out = Path(run.output_dir)
    _write_json(out / "counterfactual.json", {
        "full": report.full, "remove_cited": report.remove_cited,
        "keep_only_cited": report.keep_only_cited, "delta_rm": report.delta_rm,
    })
    echo_config(run.train, out / "config.json")
    print(f"Full {report.full:.2f}  Remove-Cited {report.remove_cited:.2f}  "
          f"Keep-Only-Cited {report.keep_only_cited:.2f}  Delta {report.delta_rm:.2f}")
    return 0


def _cmd_recall(args) -> int:
    run = _load_run_config(args)
    corpus, ds = _prepared(run)
    table = recall_at_k(ds, run.train.eval_ks)
    out = Path(run.output_dir)
    _write_json(out / "recall.json", {str(k): v for k, v in table.items()})
    echo_config(run.train, out / "config.json")
    for k in sorted(table):
        print(f"recall@{k} = {table[k]:.2f}")
    return 0


def _cmd_reward_debug(args) -> int:
    path = Path(args.rollout_log)
    if not path.exists():
        raise EvselError(f"rollout log {path} does not exist")
    rows = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    if not rows:
        print("empty rollout log")
        return 0
    columns = sorted({key for row in rows for key in row})
    print("\t".join(columns))
    for row in rows:
        print("\t".join(str(row.get(c, "")) for c in columns))
    return 0


_HANDLERS = {
    "gen-corpus": _cmd_gen_corpus,
    "retrieve": _cmd_retrieve,
    "filter": _cmd_filter,
    "train-selector": _cmd_train_selector,
    "train-generator": _cmd_train_generator,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "k-curve": _cmd_k_curve,
    "difficulty": _cmd_difficulty,
    "counterfactual": _cmd_counterfactual,
    "recall": _cmd_recall,
    "reward-debug": _cmd_reward_debug,
}


def _exit_code(exc: BaseException | None) -> int:
    # Walk the cause chain so e.g. a rollout error wrapping an endpoint
    # failure still exits with the endpoint code.
    node = exc
    while node is not None:
        if isinstance(node, EvselError) and node.exit_code != 1:
            return node.exit_code
        node = node.__cause__
    return 1


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return _HANDLERS[args.command](args)
    except EvselError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except (ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
