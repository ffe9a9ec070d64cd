"""Command-line entry point: recipnn <command> [flags].

Commands: rerank, smooth, eval, sweep, bench, convert, selftest. Every
command takes --config FILE (flat key=value lines) and --preset NAME, with
explicit flags overriding both. Exit codes: 0 ok, 1 configuration error,
2 data error, 3 internal error. Output files begin with a '#' provenance
header carrying the tool version and a hash of the effective parameters;
thread count and file paths never influence output bytes.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import __version__
from .config import (COMMAND_KEYS, REQUIRED_KEYS, display_key, effective_config,
                     header_line, key_type, parse_config_file, rerank_params_from,
                     rnn_params_from, smooth_params_from)
from .embeddings import load_embeddings, write_embeddings
from .errors import ConfigError, DataError
from .ir_eval import map_at_k, mrr_at_k, ndcg_at_k, parse_qrels, parse_run, recall_at_k, write_run
from .neighbors import RnnParams, extended_reciprocal_set, rnn_scores
from .oracle import extended_oracle, mixed_scores_oracle
from .rerank import bench_latency, rerank_context, rerank_run, sweep_context_size
from .smoothing import smooth_dataset, write_soft_labels
from .synthetic import random_context

_BENCH_SIZES = [50, 100, 200, 400]


class _Parser(argparse.ArgumentParser):
    """argparse reports usage errors via ConfigError so they exit with code 1."""

    def error(self, message):
        raise ConfigError(message)


def _parse_sizes(raw: str) -> list[int]:
    try:
        return [int(p) for p in raw.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"sizes must be a comma-separated integer list, got {raw!r}") from None


def _add_key_flags(sub: argparse.ArgumentParser, command: str) -> None:
    for key in sorted(COMMAND_KEYS[command]):
        flag = "--" + display_key(key)
        required_note = " (required)" if key in REQUIRED_KEYS[command] else ""
        tag = key_type(key)
        if tag == "bool":
            sub.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction,
                             default=None, help=f"{key}{required_note}")
        elif tag == "int":
            sub.add_argument(flag, dest=key, type=int, default=None, help=f"{key}{required_note}")
        elif tag == "float":
            sub.add_argument(flag, dest=key, type=float, default=None, help=f"{key}{required_note}")
        elif tag == "ints":
            sub.add_argument(flag, dest=key, type=_parse_sizes, default=None,
                             metavar="N,N,...", help=f"{key}{required_note}")
        else:
            sub.add_argument(flag, dest=key, type=str, default=None, help=f"{key}{required_note}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="recipnn",
                     description="Reciprocal nearest-neighbor reranking, label smoothing "
                                 "and IR evaluation over precomputed embeddings.")
    parser.add_argument("--version", action="version", version=f"recipnn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "rerank": "rerank a run file by mixed reciprocal-NN similarity",
        "smooth": "produce evidence-based soft-label targets (JSONL)",
        "eval": "print MRR/nDCG/Recall/MAP for a run against qrels",
        "sweep": "evaluate reranking across context sizes (CSV)",
        "bench": "time reranking on synthetic contexts (CSV)",
        "convert": "transcode embedding files between binary and tsv",
        "selftest": "cross-check the vectorized pipeline against the naive oracle",
    }
    for command, help_text in helps.items():
        p = sub.add_parser(command, help=help_text)
        p.add_argument("--config", default=None, help="flat key=value config file")
        p.add_argument("--preset", default=None, help="named parameter preset")
        p.add_argument("--verbose", action="store_true", help="log per-query details")
        _add_key_flags(p, command)
    return parser


def _metric_table(rows: list[tuple[str, list[float]]], columns: list[str]) -> str:
    header = f"{'metric':<12}" + "".join(f" {c:>12}" for c in columns)
    lines = [header]
    for name, values in rows:
        lines.append(f"{name:<12}" + "".join(f" {v:>12.6f}" for v in values))
    return "\n".join(lines)


def _standard_metrics(run, qrels, cutoff: int, rel_threshold: int) -> list[tuple[str, float]]:
    return [
        (f"mrr@{cutoff}", mrr_at_k(run, qrels, cutoff, rel_threshold)),
        (f"ndcg@{cutoff}", ndcg_at_k(run, qrels, cutoff)),
        (f"recall@{cutoff}", recall_at_k(run, qrels, cutoff, rel_threshold)),
        (f"map@{cutoff}", map_at_k(run, qrels, cutoff, rel_threshold)),
    ]


def cmd_rerank(cfg: dict) -> None:
    embeddings = load_embeddings(cfg["embeddings"])
    run = parse_run(cfg["run"])
    reranked = rerank_run(run, embeddings, rerank_params_from(cfg), top_k=cfg.get("top_k"),
                          strict=cfg["strict"], threads=cfg["threads"])
    write_run(reranked, cfg["output"], tag=cfg["tag"], header=header_line(cfg, __version__))
    print(f"reranked {len(reranked)} queries -> {cfg['output']}")
    if cfg.get("qrels"):
        qrels = parse_qrels(cfg["qrels"])
        before = _standard_metrics(run, qrels, cfg["cutoff"], cfg["rel_threshold"])
        after = _standard_metrics(reranked, qrels, cfg["cutoff"], cfg["rel_threshold"])
        rows = [(name, [b, a]) for (name, b), (_, a) in zip(before, after)]
        print(_metric_table(rows, ["before", "after"]))


def cmd_smooth(cfg: dict) -> None:
    embeddings = load_embeddings(cfg["embeddings"])
    run = parse_run(cfg["run"])
    qrels = parse_qrels(cfg["qrels"])
    result = smooth_dataset(run, qrels, embeddings, smooth_params_from(cfg),
                            n_context=cfg["n_context"], mode=cfg["mode"],
                            epsilon=cfg["epsilon"], rel_threshold=cfg["rel_threshold"],
                            strict=cfg["strict"], threads=cfg["threads"])
    write_soft_labels(result.label_sets, cfg["output"], header=header_line(cfg, __version__))
    print(f"smoothed {len(result.label_sets)} queries "
          f"({len(result.skipped)} skipped) -> {cfg['output']}")
    print(f"mean ground-truth mass: {result.mean_gt_mass:.6f}")


def cmd_eval(cfg: dict) -> None:
    run = parse_run(cfg["run"])
    qrels = parse_qrels(cfg["qrels"])
    rows = [(name, [value]) for name, value
            in _standard_metrics(run, qrels, cfg["cutoff"], cfg["rel_threshold"])]
    print(_metric_table(rows, ["value"]))


def cmd_sweep(cfg: dict) -> None:
    embeddings = load_embeddings(cfg["embeddings"])
    run = parse_run(cfg["run"])
    qrels = parse_qrels(cfg["qrels"])
    rows = sweep_context_size(run, embeddings, qrels, rnn_params_from(cfg), cfg["sizes"],
                              metric=cfg["metric"], rel_threshold=cfg["rel_threshold"],
                              threads=cfg["threads"])
    lines = [f"# {header_line(cfg, __version__)}", f"n,{cfg['metric']}"]
    lines += [f"{n},{value!r}" for n, value in rows]
    with open(cfg["output"], "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"swept {len(rows)} context sizes -> {cfg['output']}")


def cmd_bench(cfg: dict) -> None:
    sizes = cfg.get("sizes") or _BENCH_SIZES
    rows = bench_latency(sizes, cfg["trials"], rnn_params_from(cfg),
                         dim=cfg["dim"], seed=cfg["seed"])
    lines = [f"# {header_line(cfg, __version__)}", "n,mean_ms,p95_ms"]
    lines += [f"{n},{mean:.3f},{p95:.3f}" for n, mean, p95 in rows]
    text = "\n".join(lines) + "\n"
    if cfg.get("output"):
        with open(cfg["output"], "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"benchmarked {len(rows)} context sizes -> {cfg['output']}")
    else:
        print(text, end="")


def cmd_convert(cfg: dict) -> None:
    fmt = cfg["to"]
    if fmt not in ("binary", "tsv"):
        raise ConfigError(f"--to must be binary or tsv, got {fmt!r}")
    matrix = load_embeddings(cfg["input"])
    write_embeddings(matrix, cfg["output"], fmt=fmt)
    print(f"wrote {len(matrix)} vectors (dim {matrix.dim}) as {fmt} -> {cfg['output']}")


def cmd_selftest(cfg: dict) -> None:
    """Random cross-checks of the fast pipeline against the naive oracle."""
    rng = np.random.default_rng([abs(int(cfg["seed"])), 4242])
    trials = max(int(cfg["trials"]), 1)
    for trial in range(trials):
        n = int(rng.integers(4, 40))
        dim = int(rng.integers(2, 9))
        ctx = random_context(rng, n, dim, query_id=f"selftest-{trial}")
        k = int(rng.integers(1, ctx.size + 1))
        lam = float(rng.uniform())
        tau = float(rng.uniform())

        fast = rnn_scores(ctx, RnnParams(k=k, k_exp=1, tau=0.0, lam=lam, weight_fn="binary"))
        slow = mixed_scores_oracle(ctx, k, lam)
        worst = float(np.max(np.abs(fast - np.array(slow))))
        if worst > 1e-9:
            raise RuntimeError(f"selftest: mixed scores diverge from oracle by {worst:.3e} "
                               f"(trial {trial}, n={n}, k={k})")

        probe = int(rng.integers(0, ctx.size))
        fast_set = extended_reciprocal_set(probe, ctx.sim_matrix, k, tau).members
        slow_set = extended_oracle(ctx.sim_matrix, probe, k, tau)
        if set(fast_set) != slow_set:
            raise RuntimeError(f"selftest: extended sets diverge (trial {trial}, probe {probe}, "
                               f"k={k}, tau={tau:.3f})")

        geo = rerank_context(ctx, RnnParams(k=k, k_exp=1, tau=0.0, lam=1.0, weight_fn="binary"))
        if geo.doc_ids != list(ctx.candidate_ids):
            raise RuntimeError(f"selftest: lambda=1 ordering differs from geometry (trial {trial})")
    print(f"selftest: {trials} random contexts checked, all routes agree")


_COMMANDS = {
    "rerank": cmd_rerank,
    "smooth": cmd_smooth,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "bench": cmd_bench,
    "convert": cmd_convert,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        file_values = parse_config_file(args.config) if args.config else None
        flag_values = {key: getattr(args, key, None) for key in COMMAND_KEYS[args.command]}
        cfg = effective_config(args.command, args.preset, file_values, flag_values)
        _COMMANDS[args.command](cfg)
        return 0
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
