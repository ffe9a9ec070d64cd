"""Reciprocal nearest-neighbor similarity over precomputed embeddings.

The package reranks dense-retrieval candidate lists with a mixed
geometric/Jaccard similarity computed from k-reciprocal neighbor sets, and
generates evidence-based smoothed relevance labels for contrastive training.
It ships its own TREC-style evaluation utilities so both applications can be
verified end to end.
"""

__version__ = "0.1.0"

from .context import RankingContext, build_context, context_from_run, inner_product, top_n_context
from .embeddings import EmbeddingMatrix, load_embeddings, write_embeddings
from .errors import ConfigError, DataError, RecipnnError
from .neighbors import (
    ConnectivityVector,
    NeighborSet,
    RnnParams,
    connectivity_vector,
    extended_reciprocal_set,
    jaccard_distance,
    local_expansion,
    mixed_similarity,
    nn_set,
    reciprocal_set,
    rnn_scores,
)
from .ir_eval import (
    Qrels,
    RunFile,
    evaluate_metric,
    kl_divergence,
    map_at_k,
    mrr_at_k,
    ndcg_at_k,
    parse_qrels,
    parse_run,
    recall_at_k,
    write_run,
)
from .rerank import RankedList, RerankParams, bench_latency, rerank_context, rerank_run, sweep_context_size
from .smoothing import (
    SmoothParams,
    SmoothResult,
    SoftLabelSet,
    mean_gt_similarity,
    normalize_scores,
    read_soft_labels,
    smooth_dataset,
    softmax,
    transform_scores,
    uniform_smooth,
    write_soft_labels,
)

__all__ = [
    "ConfigError",
    "ConnectivityVector",
    "DataError",
    "EmbeddingMatrix",
    "NeighborSet",
    "Qrels",
    "RankedList",
    "RankingContext",
    "RecipnnError",
    "RerankParams",
    "RnnParams",
    "RunFile",
    "SmoothParams",
    "SmoothResult",
    "SoftLabelSet",
    "bench_latency",
    "build_context",
    "connectivity_vector",
    "context_from_run",
    "evaluate_metric",
    "extended_reciprocal_set",
    "inner_product",
    "jaccard_distance",
    "kl_divergence",
    "load_embeddings",
    "local_expansion",
    "map_at_k",
    "mean_gt_similarity",
    "mixed_similarity",
    "mrr_at_k",
    "ndcg_at_k",
    "nn_set",
    "normalize_scores",
    "parse_qrels",
    "parse_run",
    "read_soft_labels",
    "recall_at_k",
    "reciprocal_set",
    "rerank_context",
    "rerank_run",
    "rnn_scores",
    "smooth_dataset",
    "softmax",
    "sweep_context_size",
    "top_n_context",
    "transform_scores",
    "uniform_smooth",
    "write_embeddings",
    "write_run",
    "write_soft_labels",
]
