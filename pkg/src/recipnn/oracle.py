"""Naive set-based reference implementations for cross-checking.

Everything here recomputes the neighbor machinery with explicit Python sets,
sorted() calls and scalar arithmetic — no numpy vectorization — so the fast
pipeline in `neighbors` can be validated against an independently written
route. Used by the test suite and the `selftest` CLI command. Quadratic or
worse; only suitable for small contexts.
"""

from __future__ import annotations

import math

from .context import RankingContext


def _sim_rows(sim_matrix) -> list[list[float]]:
    return [[float(x) for x in row] for row in sim_matrix]


def nn_oracle(sim_matrix, probe: int, k: int) -> set[int]:
    """k nearest indices to probe, probe first, ties by index ascending."""
    rows = _sim_rows(sim_matrix)
    m = len(rows)
    order = sorted(range(m),
                   key=lambda j: (-(math.inf if j == probe else rows[probe][j]), j))
    return set(order[:k])


def reciprocal_oracle(sim_matrix, probe: int, k: int) -> set[int]:
    return {c for c in nn_oracle(sim_matrix, probe, k)
            if probe in nn_oracle(sim_matrix, c, k)}


def extended_oracle(sim_matrix, probe: int, k: int, tau: float) -> set[int]:
    """Single-pass extension: merge R(c, round(tau*k)) for members whose
    smaller set overlaps the original set in at least two thirds."""
    base = reciprocal_oracle(sim_matrix, probe, k)
    tk = math.floor(tau * k + 0.5)
    if tk < 1:
        return set(base)
    out = set(base)
    for c in sorted(base):
        r_c = reciprocal_oracle(sim_matrix, c, tk)
        if 3 * len(base & r_c) >= 2 * len(r_c):
            out |= r_c
    return out


def jaccard_set_oracle(set_a: set[int], set_b: set[int]) -> float:
    """Plain set-cardinality Jaccard distance 1 - |a&b|/|a|b|."""
    union = len(set_a | set_b)
    if union == 0:
        raise ValueError("jaccard of two empty sets is undefined")
    return 1.0 - len(set_a & set_b) / union


def normalized_geo_row(sim_matrix, probe: int) -> list[float]:
    """Scalar re-implementation of the per-row max-min normalization."""
    row = [float(x) for x in sim_matrix[probe]]
    lo, hi = min(row), max(row)
    return [(x - lo) / (hi - lo + 1e-12) for x in row]


def mixed_scores_oracle(context: RankingContext, k: int, lam: float,
                        tau: float = 0.0, probe: int = 0) -> list[float]:
    """Candidate scores for the binary-weight, no-expansion configuration.

    Mirrors rnn_scores(..., weight_fn="binary", k_exp=1) through explicit
    sets: s* = lam * s_hat + (1 - lam) * (1 - jaccard of (extended)
    reciprocal sets). Aligned with context.element_ids[1:].
    """
    sim = context.sim_matrix
    probe_set = extended_oracle(sim, probe, k, tau)
    s_hat = normalized_geo_row(sim, probe)
    scores = []
    for j in range(1, context.size):
        d_j = jaccard_set_oracle(probe_set, extended_oracle(sim, j, k, tau))
        scores.append(lam * s_hat[j] + (1.0 - lam) * (1.0 - d_j))
    return scores


def ranked_ids_oracle(context: RankingContext, k: int, lam: float,
                      tau: float = 0.0) -> list[str]:
    """Candidate ids ordered by oracle mixed score desc, ties by id asc."""
    scores = mixed_scores_oracle(context, k, lam, tau)
    ids = list(context.candidate_ids)
    order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
    return [ids[i] for i in order]
