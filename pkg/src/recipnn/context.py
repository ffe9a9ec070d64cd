"""Per-query ranking contexts: the query plus its top-N candidates.

A context bundles the query (always position 0), the candidates in
descending geometric score order (ties broken by id ascending), and the
dense (N+1) x (N+1) matrix of pairwise inner products that all reciprocal-
neighbor math runs on. Retrieval is exact brute force — at the scales this
package targets no ANN index is warranted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .embeddings import EmbeddingMatrix
from .errors import DataError

# tolerance used only for the symmetry sanity check in validate()
_SYM_TOL = 1e-9


def inner_product(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Plain dot product <a, b>, with a dimensionality check."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DataError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


@dataclass(frozen=True)
class RankingContext:
    """A query and its candidates with all pairwise inner products.

    element_ids[0] is the query; element_ids[1:] are candidates sorted by
    descending geometric score (ties by id ascending). geo_scores is aligned
    with element_ids (geo_scores[0] = <x_q, x_q>) and sim_matrix[i][j] is the
    inner product of elements i and j. Never mutated after construction.
    """

    query_id: str
    element_ids: tuple[str, ...]
    geo_scores: np.ndarray = field(repr=False)
    sim_matrix: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        """Total number of elements, query included."""
        return len(self.element_ids)

    @property
    def n_candidates(self) -> int:
        return len(self.element_ids) - 1

    @property
    def candidate_ids(self) -> tuple[str, ...]:
        return self.element_ids[1:]

    def index_of(self, element_id: str) -> int:
        try:
            return self.element_ids.index(element_id)
        except ValueError:
            raise DataError(f"id {element_id!r} not in context for query {self.query_id!r}") from None

    def validate(self) -> None:
        m = len(self.element_ids)
        if m < 1:
            raise DataError("empty context")
        if len(set(self.element_ids)) != m:
            raise DataError(f"duplicate element ids in context for query {self.query_id!r}")
        if self.geo_scores.shape != (m,) or self.sim_matrix.shape != (m, m):
            raise DataError(f"shape mismatch: {self.geo_scores.shape}, {self.sim_matrix.shape} for {m} elements")
        if np.any(np.diff(self.geo_scores[1:]) > 0):
            raise DataError(f"candidate geo scores not non-increasing for query {self.query_id!r}")
        if not np.allclose(self.sim_matrix, self.sim_matrix.T, atol=_SYM_TOL, rtol=0.0):
            raise DataError(f"similarity matrix not symmetric for query {self.query_id!r}")


def build_context(
    query_id: str,
    query_vec: Sequence[float] | np.ndarray,
    doc_ids: Sequence[str],
    doc_vecs: np.ndarray,
) -> RankingContext:
    """Assemble a context from raw vectors, sorting candidates into canonical order.

    The geometric score of each candidate is recomputed as <query, doc>;
    candidates are ordered by (score descending, id ascending).
    """
    query_vec = np.asarray(query_vec, dtype=np.float64)
    doc_vecs = np.asarray(doc_vecs, dtype=np.float64)
    if doc_vecs.ndim != 2 or doc_vecs.shape[0] != len(doc_ids):
        raise DataError(f"{len(doc_ids)} candidate ids for vector array of shape {doc_vecs.shape}")
    if doc_vecs.shape[0] > 0 and doc_vecs.shape[1] != query_vec.shape[0]:
        raise DataError(f"candidate dim {doc_vecs.shape[1]} != query dim {query_vec.shape[0]}")
    if query_id in doc_ids:
        raise DataError(f"query id {query_id!r} also appears among candidate ids")

    scores = doc_vecs @ query_vec
    order = sorted(range(len(doc_ids)), key=lambda i: (-scores[i], doc_ids[i]))

    all_vecs = np.vstack([query_vec[None, :], doc_vecs[order]]) if len(doc_ids) else query_vec[None, :]
    sim = all_vecs @ all_vecs.T
    sim = (sim + sim.T) / 2.0  # pin exact symmetry against BLAS rounding asymmetry
    element_ids = (query_id, *(doc_ids[i] for i in order))
    ctx = RankingContext(
        query_id=query_id,
        element_ids=element_ids,
        geo_scores=sim[0].copy(),
        sim_matrix=sim,
    )
    ctx.validate()
    return ctx


def top_n_context(
    query_id: str,
    query_vec: Sequence[float] | np.ndarray,
    pool: EmbeddingMatrix,
    n: int,
) -> RankingContext:
    """Exact top-N retrieval over `pool` by inner product, as a context.

    A pool entry whose id equals `query_id` is excluded from the candidate
    set (stores may hold query and document vectors side by side). If the
    pool holds fewer than N eligible entries, all of them are used.
    """
    if n < 1:
        raise DataError(f"context size must be >= 1, got {n}")
    if len(pool) == 0:
        raise DataError("empty embedding pool")
    query_vec = np.asarray(query_vec, dtype=np.float64)
    if query_vec.shape != (pool.dim,):
        raise DataError(f"query dim {query_vec.shape} != pool dim {pool.dim}")

    ids = pool.ids
    vecs = pool.vectors.astype(np.float64)
    if query_id in pool:
        keep = [i for i, eid in enumerate(ids) if eid != query_id]
        ids = [ids[i] for i in keep]
        vecs = vecs[keep]
        if not ids:
            raise DataError(f"pool contains only the query {query_id!r}")
    scores = vecs @ query_vec
    n_eff = min(n, len(ids))
    # partial selection first, then exact ordering of the survivors
    if n_eff < len(ids):
        cut = np.argpartition(-scores, n_eff - 1)[:n_eff]
        # argpartition is unstable under score ties: widen to every entry tied
        # with the worst kept score so the (score, id) sort below stays exact
        worst = scores[cut].min()
        cand = np.nonzero(scores >= worst)[0]
    else:
        cand = np.arange(len(ids))
    chosen = sorted(cand, key=lambda i: (-scores[i], ids[i]))[:n_eff]
    return build_context(query_id, query_vec, [ids[i] for i in chosen], vecs[chosen])


def context_from_run(
    query_id: str,
    doc_ids: Sequence[str],
    embeddings: EmbeddingMatrix,
    n: int | None = None,
) -> RankingContext:
    """Build a context from the first `n` docs of a retrieved candidate list.

    `doc_ids` must be in run rank order; scores are recomputed as inner
    products and the context re-sorted per the canonical ordering, so a run
    ranked inconsistently with its embeddings comes out consistent.
    """
    if query_id not in embeddings:
        raise DataError(f"query id {query_id!r} missing from embedding store")
    take = list(doc_ids if n is None else doc_ids[: max(n, 0)])
    if n is not None and n < 1:
        raise DataError(f"context size must be >= 1, got {n}")
    missing = sorted(set(d for d in take if d not in embeddings))
    if missing:
        raise DataError(f"embedding store missing candidate id(s): {', '.join(missing)}")
    doc_vecs = np.vstack([embeddings.lookup(d) for d in take]).astype(np.float64) if take else np.zeros((0, embeddings.dim))
    return build_context(query_id, embeddings.lookup(query_id).astype(np.float64), take, doc_vecs)
