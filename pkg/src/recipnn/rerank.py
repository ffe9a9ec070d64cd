"""Inference-time reranking of retrieved candidate lists.

Given a run (per-query ranked candidates) and an embedding store, each
query's top n_context candidates form a ranking context whose candidates are
re-scored by mixed reciprocal-NN similarity and re-sorted. Also provides the
context-size sweep and the per-query latency benchmark used by the CLI.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .context import RankingContext, build_context, context_from_run
from .embeddings import EmbeddingMatrix
from .errors import ConfigError, DataError
from .neighbors import RnnParams, rnn_scores

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RankedList:
    """One query's ordered result list: (doc_id, score, 1-based rank) triples."""

    query_id: str
    entries: tuple[tuple[str, float, int], ...]

    def __post_init__(self) -> None:
        entries = tuple((str(d), float(s), int(r)) for d, s, r in self.entries)
        object.__setattr__(self, "entries", entries)
        for pos, (_, _, rank) in enumerate(entries, start=1):
            if rank != pos:
                raise DataError(f"query {self.query_id!r}: rank {rank} at position {pos}; ranks must run 1..n")
        scores = [s for _, s, _ in entries]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise DataError(f"query {self.query_id!r}: scores increase down the list")
        ids = [d for d, _, _ in entries]
        if len(set(ids)) != len(ids):
            raise DataError(f"query {self.query_id!r}: duplicate doc ids")

    @classmethod
    def from_scored(cls, query_id: str, scored: Sequence[tuple[str, float]]) -> "RankedList":
        """Build from an already-sorted (doc_id, score) sequence."""
        return cls(query_id, tuple((d, s, i + 1) for i, (d, s) in enumerate(scored)))

    @property
    def doc_ids(self) -> list[str]:
        return [d for d, _, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def truncated(self, depth: int) -> "RankedList":
        return RankedList(self.query_id, self.entries[:depth])


@dataclass(frozen=True)
class RerankParams:
    """Pipeline-level knobs: the rNN parameters plus the context size n_context
    (how many top run candidates participate in the pairwise math — independent
    of the output depth top_k)."""

    rnn: RnnParams = RnnParams()
    n_context: int = 60

    def __post_init__(self) -> None:
        if not isinstance(self.n_context, int) or self.n_context < 1:
            raise ConfigError(f"n_context must be a positive integer, got {self.n_context!r}")


def rerank_context(context: RankingContext, params: RnnParams, top_k: int | None = None) -> RankedList:
    """Re-sort a context's candidates by mixed similarity, descending.

    Ties break by doc id ascending. top_k (default: all candidates) must not
    exceed the candidate count. Neighborhood sizes larger than the context
    are reduced to fit, so parameters tuned for deep contexts remain usable
    on shallow ones.
    """
    n = context.n_candidates
    if n == 0:
        return RankedList(context.query_id, ())
    if top_k is None:
        top_k = n
    if not 1 <= top_k <= n:
        raise DataError(f"top_k={top_k} out of range [1, {n}] for query {context.query_id!r}")
    scores = rnn_scores(context, params.clamped(context.size))
    ids = context.candidate_ids
    order = sorted(range(n), key=lambda i: (-scores[i], ids[i]))[:top_k]
    return RankedList.from_scored(context.query_id, [(ids[i], float(scores[i])) for i in order])


def _rerank_one(query_id: str, ranked: RankedList, embeddings: EmbeddingMatrix,
                params: RerankParams, top_k: int | None, strict: bool) -> RankedList:
    try:
        ctx = context_from_run(query_id, ranked.doc_ids, embeddings, params.n_context)
        depth = None if top_k is None else min(top_k, ctx.n_candidates)
        return rerank_context(ctx, params.rnn, top_k=depth)
    except DataError as exc:
        if strict:
            raise
        logger.warning("query %s left in original order: %s", query_id, exc)
        return ranked


def rerank_run(run, embeddings: EmbeddingMatrix, params: RerankParams,
               top_k: int | None = None, strict: bool = False, threads: int = 1):
    """Rerank every query of a run; returns a new RunFile.

    Per query, the top params.n_context candidates are re-scored (deeper run
    entries are dropped from the output). Queries whose query or candidate
    vectors are missing from the store are warned about and passed through
    in their original order; strict=True raises instead. Thread count never
    changes the result — outputs are merged in query-id order.
    """
    from .ir_eval import RunFile

    qids = run.query_ids
    if threads > 1 and len(qids) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            ranked = list(pool.map(
                lambda qid: _rerank_one(qid, run[qid], embeddings, params, top_k, strict), qids))
    else:
        ranked = [_rerank_one(qid, run[qid], embeddings, params, top_k, strict) for qid in qids]
    return RunFile({qid: rl for qid, rl in zip(qids, ranked)})


def sweep_context_size(run, embeddings: EmbeddingMatrix, qrels, params,
                       sizes: Sequence[int], metric: str = "mrr@10",
                       rel_threshold: int = 1, threads: int = 1) -> list[tuple[int, float]]:
    """Evaluate the reranked run at each context size; rows of (N, metric value).

    Sizes must be ascending. `metric` is a name@k id understood by the
    evaluation module, e.g. mrr@10 or ndcg@20.
    """
    from .ir_eval import evaluate_metric

    sizes = [int(n) for n in sizes]
    if not sizes:
        raise ConfigError("sweep needs at least one context size")
    if sizes != sorted(sizes):
        raise ConfigError(f"context sizes must be ascending, got {sizes}")
    if sizes[0] < 1:
        raise ConfigError(f"context sizes must be positive, got {sizes[0]}")
    rnn = params.rnn if isinstance(params, RerankParams) else params
    rows = []
    for n in sizes:
        reranked = rerank_run(run, embeddings, RerankParams(rnn=rnn, n_context=n), threads=threads)
        rows.append((n, evaluate_metric(metric, reranked, qrels, rel_threshold=rel_threshold)))
    return rows


def bench_latency(context_sizes: Sequence[int], trials: int, params,
                  dim: int = 32, seed: int = 0) -> list[tuple[int, float, float]]:
    """Wall-clock rerank time on synthetic contexts; rows of (N, mean ms, p95 ms).

    Contexts are built from seeded random unit vectors before the clock
    starts; each trial times one rerank_context call, single-threaded, on a
    monotonic clock. Two untimed warmup calls precede measurement per size.
    """
    if trials < 3:
        raise ConfigError(f"bench needs at least 3 trials, got {trials}")
    rnn = params.rnn if isinstance(params, RerankParams) else params
    rows = []
    for n in context_sizes:
        n = int(n)
        if n < 1:
            raise ConfigError(f"context sizes must be positive, got {n}")
        rng = np.random.default_rng([abs(int(seed)), n])
        contexts = []
        for _ in range(trials):
            vecs = rng.standard_normal((n + 1, dim))
            vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
            doc_ids = [f"d{i:05d}" for i in range(n)]
            contexts.append(build_context("bench-q", vecs[0], doc_ids, vecs[1:]))
        for ctx in contexts[:2]:
            rerank_context(ctx, rnn)
        times_ms = []
        for ctx in contexts:
            t0 = time.perf_counter_ns()
            rerank_context(ctx, rnn)
            times_ms.append((time.perf_counter_ns() - t0) / 1e6)
        rows.append((n, float(np.mean(times_ms)), float(np.percentile(times_ms, 95))))
    return rows
