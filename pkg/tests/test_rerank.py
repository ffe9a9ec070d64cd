import logging

import numpy as np
import pytest

from recipnn.embeddings import EmbeddingMatrix
from recipnn.errors import ConfigError, DataError
from recipnn.ir_eval import Qrels, RunFile
from recipnn.neighbors import RnnParams, rnn_scores
from recipnn.rerank import (
    RankedList,
    RerankParams,
    bench_latency,
    rerank_context,
    rerank_run,
    sweep_context_size,
)
from recipnn.synthetic import planted_corpus, random_context

from conftest import IMPROVE_BASE, IMPROVE_EXTRA_DISRUPTOR, circle_context


# --- RankedList --------------------------------------------------------------

def test_ranked_list_invariants():
    rl = RankedList("q", (("a", 2.0, 1), ("b", 1.0, 2)))
    assert rl.doc_ids == ["a", "b"]
    assert len(rl) == 2
    assert rl.truncated(1).doc_ids == ["a"]

    with pytest.raises(DataError, match="rank"):
        RankedList("q", (("a", 2.0, 1), ("b", 1.0, 3)))
    with pytest.raises(DataError, match="increase"):
        RankedList("q", (("a", 1.0, 1), ("b", 2.0, 2)))
    with pytest.raises(DataError, match="duplicate"):
        RankedList("q", (("a", 2.0, 1), ("a", 1.0, 2)))


def test_from_scored_assigns_ranks():
    rl = RankedList.from_scored("q", [("x", 0.5), ("y", 0.25)])
    assert rl.entries == (("x", 0.5, 1), ("y", 0.25, 2))


def test_rerank_params_validation():
    with pytest.raises(ConfigError):
        RerankParams(n_context=0)


# --- rerank_context -----------------------------------------------------------

def test_rerank_lambda_one_keeps_geo_order(small_context):
    out = rerank_context(small_context, RnnParams(k=2, k_exp=1, lam=1.0))
    assert out.doc_ids == list(small_context.candidate_ids)


def test_rerank_improvement_scenario():
    params = RnnParams(k=4, k_exp=1, tau=0.0, lam=0.3, weight_fn="binary")

    ctx = circle_context(IMPROVE_BASE)
    geo_rank = ctx.candidate_ids.index("p") + 1
    mixed_rank = rerank_context(ctx, params).doc_ids.index("p") + 1
    assert mixed_rank < geo_rank
    assert (geo_rank, mixed_rank) == (6, 3)

    # one doc placed right next to p corrupts p's neighborhood: gone
    disrupted = circle_context({**IMPROVE_BASE, **IMPROVE_EXTRA_DISRUPTOR})
    rank2 = rerank_context(disrupted, params).doc_ids.index("p") + 1
    geo2 = disrupted.candidate_ids.index("p") + 1
    assert rank2 >= geo2


def test_rerank_top_k_and_bounds(small_context):
    p = RnnParams(k=2, k_exp=1)
    assert len(rerank_context(small_context, p, top_k=2)) == 2
    with pytest.raises(DataError):
        rerank_context(small_context, p, top_k=4)
    with pytest.raises(DataError):
        rerank_context(small_context, p, top_k=0)


def test_rerank_clamps_oversized_params(small_context):
    # k tuned for deep contexts must still run on a 4-element context
    out = rerank_context(small_context, RnnParams(k=21, k_exp=3, lam=1.0))
    assert out.doc_ids == list(small_context.candidate_ids)


def test_rerank_scores_sorted_with_id_ties():
    rng = np.random.default_rng(5)
    ctx = random_context(rng, 12, 6)
    out = rerank_context(ctx, RnnParams(k=4, k_exp=2, lam=0.5))
    scores = [s for _, s, _ in out]
    assert scores == sorted(scores, reverse=True)


# --- rerank_run ----------------------------------------------------------------

def corpus(seed=0, n_queries=6):
    return planted_corpus(seed=seed, n_queries=n_queries, n_distractors=80, depth=20)


def rparams(**kw):
    base = dict(k=6, k_exp=2, tau=0.0, lam=0.451)
    base.update(kw)
    return RerankParams(rnn=RnnParams(**base), n_context=15)


def test_rerank_run_matches_sequential_reference():
    c = corpus()
    params = rparams()
    out = rerank_run(c.run, c.embeddings, params)
    assert out.query_ids == c.run.query_ids
    for qid in c.run.query_ids:
        from recipnn.context import context_from_run

        ctx = context_from_run(qid, c.run[qid].doc_ids, c.embeddings, params.n_context)
        expect = rerank_context(ctx, params.rnn)
        assert out[qid].entries == expect.entries


def test_rerank_run_single_candidate_unchanged():
    c = corpus()
    qid = c.run.query_ids[0]
    run = RunFile({qid: c.run[qid].truncated(1)})
    out = rerank_run(run, c.embeddings, rparams())
    assert out[qid].doc_ids == run[qid].doc_ids


def test_rerank_run_threads_equivalent():
    c = corpus(n_queries=8)
    params = rparams()
    base = rerank_run(c.run, c.embeddings, params, threads=1)
    for threads in (4, 8):
        multi = rerank_run(c.run, c.embeddings, params, threads=threads)
        assert multi.query_ids == base.query_ids
        for qid in base.query_ids:
            assert multi[qid].entries == base[qid].entries


def test_rerank_run_missing_vectors_pass_through(caplog):
    c = corpus()
    qid = c.run.query_ids[0]
    # rebuild the store without this query's vector
    keep = [(i, v) for i, v in c.embeddings if i != qid]
    store = EmbeddingMatrix([i for i, _ in keep], np.vstack([v for _, v in keep]))
    with caplog.at_level(logging.WARNING):
        out = rerank_run(c.run, store, rparams())
    assert out[qid].entries == c.run[qid].entries  # untouched
    assert any(qid in rec.getMessage() for rec in caplog.records)

    with pytest.raises(DataError):
        rerank_run(c.run, store, rparams(), strict=True)


def test_rerank_run_top_k_capped_per_query():
    c = corpus()
    out = rerank_run(c.run, c.embeddings, rparams(), top_k=5)
    for qid in out.query_ids:
        assert len(out[qid]) == 5


# --- sweep ----------------------------------------------------------------------

def test_sweep_single_size_consistency():
    c = corpus()
    params = rparams()
    rows = sweep_context_size(c.run, c.embeddings, c.qrels, params, [15], metric="mrr@10")
    assert len(rows) == 1
    from recipnn.ir_eval import evaluate_metric

    direct = evaluate_metric("mrr@10", rerank_run(c.run, c.embeddings, params), c.qrels)
    assert rows[0] == (15, direct)


def test_sweep_lambda_one_constant_beyond_depth():
    c = corpus()
    params = rparams(lam=1.0)
    rows = sweep_context_size(c.run, c.embeddings, c.qrels, params, [20, 25, 30], metric="mrr@10")
    # run depth is 20; larger contexts cannot add candidates, geometry unchanged
    vals = {v for _, v in rows}
    assert len(vals) == 1


def test_sweep_rejects_unsorted_sizes():
    c = corpus()
    with pytest.raises(ConfigError):
        sweep_context_size(c.run, c.embeddings, c.qrels, rparams(), [20, 10])
    with pytest.raises(ConfigError):
        sweep_context_size(c.run, c.embeddings, c.qrels, rparams(), [])


# --- bench ------------------------------------------------------------------------

def test_bench_well_formed_rows():
    rows = bench_latency([10, 20], 3, rparams())
    assert [n for n, _, _ in rows] == [10, 20]
    for _, mean_ms, p95_ms in rows:
        assert np.isfinite(mean_ms) and mean_ms > 0
        assert np.isfinite(p95_ms) and p95_ms > 0


def test_bench_rejects_too_few_trials():
    with pytest.raises(ConfigError):
        bench_latency([10], 2, rparams())
