"""Reciprocal nearest-neighbor machinery over a context similarity matrix.

Everything here operates on integer indices into a context (query at index
0, candidates after it) and its dense pairwise similarity matrix:

* k-NN sets that always contain the probe itself,
* reciprocal sets (mutual k-NN membership),
* tau-extended reciprocal sets (single-pass union of neighbors' smaller
  reciprocal sets when they overlap the original set by at least 2/3),
* weighted connectivity vectors with a choice of weighting function,
* local expansion (averaging connectivity vectors over each element's
  k_exp-NN), and
* a vectorized Jaccard distance mixed with normalized geometric similarity.

The module-level functions are the readable one-probe-at-a-time surface;
`rnn_scores` is the fused whole-context pipeline (pure numpy, no per-row
Python loops) that the reranker and smoother build on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .context import RankingContext
from .errors import ConfigError, DataError

WEIGHT_FNS = ("neg_identity", "exp_neg", "binary")

# guard added to (max - min) so constant similarity rows normalize to ~0
# instead of dividing by zero
_EPS_NORM = 1e-12
# floor of the per-vector affine weight map; keeps every set member's weight
# strictly positive so membership survives the min/max algebra
_EPS_WEIGHT = 1e-6


@dataclass(frozen=True)
class RnnParams:
    """Hyperparameters of the reciprocal-NN rescoring pipeline.

    k        neighborhood size for reciprocal sets
    k_exp    neighborhood size for local expansion of connectivity vectors
    tau      trust factor in [0, 1]; extended sets merge neighbors'
             round(tau*k)-reciprocal sets (0 disables expansion)
    lam      mixing coefficient in [0, 1]: lam*geometric + (1-lam)*jaccard
    weight_fn  one of neg_identity | exp_neg | binary
    """

    k: int = 21
    k_exp: int = 3
    tau: float = 0.0
    lam: float = 0.451
    weight_fn: str = "neg_identity"

    def __post_init__(self) -> None:
        if not isinstance(self.k, int) or self.k < 1:
            raise ConfigError(f"k must be a positive integer, got {self.k!r}")
        if not isinstance(self.k_exp, int) or self.k_exp < 1:
            raise ConfigError(f"k_exp must be a positive integer, got {self.k_exp!r}")
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau must lie in [0, 1], got {self.tau!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lambda must lie in [0, 1], got {self.lam!r}")
        if self.weight_fn not in WEIGHT_FNS:
            raise ConfigError(f"weight_fn must be one of {', '.join(WEIGHT_FNS)}; got {self.weight_fn!r}")

    def validate_for(self, context_size: int) -> None:
        """Raise DataError when k or k_exp exceed the context size."""
        if self.k > context_size:
            raise DataError(f"k={self.k} exceeds context size {context_size}")
        if self.k_exp > context_size:
            raise DataError(f"k_exp={self.k_exp} exceeds context size {context_size}")

    def clamped(self, context_size: int) -> "RnnParams":
        """Copy with k and k_exp reduced to fit a smaller context."""
        k = min(self.k, context_size)
        k_exp = min(self.k_exp, context_size)
        if k == self.k and k_exp == self.k_exp:
            return self
        return RnnParams(k=k, k_exp=k_exp, tau=self.tau, lam=self.lam, weight_fn=self.weight_fn)


@dataclass(frozen=True)
class NeighborSet:
    """A probe index plus the set of context indices in its neighbor set."""

    probe_index: int
    members: frozenset[int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", frozenset(int(i) for i in self.members))
        if self.probe_index not in self.members:
            raise DataError(f"neighbor set for probe {self.probe_index} does not contain the probe")

    def __contains__(self, index: int) -> bool:
        return index in self.members

    def __len__(self) -> int:
        return len(self.members)

    def sorted_members(self) -> list[int]:
        return sorted(self.members)


@dataclass(frozen=True)
class ConnectivityVector:
    """Dense per-context weight vector; nonzero exactly on the probe's set."""

    probe_index: int
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise DataError(f"connectivity weights must be 1-D, got shape {w.shape}")
        if w.size and (w.min() < -1e-12 or w.max() > 1.0 + 1e-12):
            raise DataError("connectivity weights must lie in [0, 1]")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(np.nonzero(self.weights)[0].tolist())


# ---------------------------------------------------------------------------
# vectorized internals (shared by the surface functions and rnn_scores)

def _as_sim(sim_matrix) -> np.ndarray:
    s = np.asarray(sim_matrix, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DataError(f"similarity matrix must be square, got shape {s.shape}")
    return s

def _check_probe(probe: int, m: int) -> int:
    probe = int(probe)
    if not 0 <= probe < m:
        raise DataError(f"probe index {probe} out of range for context of size {m}")
    return probe

def _check_k(k: int, m: int, name: str = "k") -> int:
    k = int(k)
    if not 1 <= k <= m:
        raise DataError(f"{name}={k} out of range [1, {m}]")
    return k


def _rank_order(sim: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Descending-similarity orderings for every row at once.

    The diagonal is forced to +inf first so each element ranks itself at
    position 0 regardless of its stored self-similarity; remaining ties
    break by index ascending (stable sort of the negated row).
    Returns (order, ranks): order[i] lists indices best-first, and
    ranks[i, j] is the position of j within row i's ordering.
    """
    a = sim.copy()
    np.fill_diagonal(a, np.inf)
    order = np.argsort(-a, axis=1, kind="stable")
    m = a.shape[0]
    ranks = np.empty((m, m), dtype=np.int64)
    ranks[np.arange(m)[:, None], order] = np.arange(m)[None, :]
    return order, ranks


def _reciprocal_mask(ranks: np.ndarray, k: int) -> np.ndarray:
    nn = ranks < k
    return nn & nn.T


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def _extended_mask(ranks: np.ndarray, k: int, tau: float) -> np.ndarray:
    """Boolean matrix whose row i is the tau-extended reciprocal set of i.

    Row i starts from R(i, k); each member c whose smaller set R(c, tk),
    tk = round(tau*k), overlaps the ORIGINAL R(i, k) in at least 2/3 of
    |R(c, tk)| gets its set unioned in. Single pass; the overlap test is
    integer-exact (3*|inter| >= 2*|R(c, tk)|).
    """
    r = _reciprocal_mask(ranks, k)
    tk = _round_half_up(tau * k)
    if tk < 1:
        return r
    rt = _reciprocal_mask(ranks, tk)  # tk <= k <= m since tau <= 1
    # float64 matmuls of 0/1 matrices count set sizes exactly (all values are
    # small integers, far below 2**53) and stay on the BLAS fast path, unlike
    # integer matmul
    ri = r.astype(np.float64)
    rti = rt.astype(np.float64)
    inter = ri @ rti.T                # inter[i, c] = |R(i,k) ∩ R(c,tk)|
    sizes = rti.sum(axis=1)           # |R(c,tk)|
    passing = r & (3.0 * inter >= 2.0 * sizes[None, :])
    return r | ((passing.astype(np.float64) @ rti) > 0)


def _row_maxmin(sim: np.ndarray) -> np.ndarray:
    """Per-row max-min normalization of similarities into [0, 1]."""
    lo = sim.min(axis=1, keepdims=True)
    hi = sim.max(axis=1, keepdims=True)
    return (sim - lo) / (hi - lo + _EPS_NORM)


def _weight_matrix(sim: np.ndarray, ext: np.ndarray, weight_fn: str) -> np.ndarray:
    """Connectivity vectors for all probes, as rows of an (m, m) matrix.

    Non-binary weights start as f_w of the normalized distance 1 - s_hat,
    then each row's member values are affinely remapped onto [1e-6, 1]
    (a single member, or an all-equal row, maps to 1). Binary weights are
    exactly 1 on members. Zero everywhere outside the extended set.
    """
    if weight_fn == "binary":
        return ext.astype(np.float64)
    d = 1.0 - _row_maxmin(sim)
    if weight_fn == "neg_identity":
        raw = -d
    elif weight_fn == "exp_neg":
        raw = np.exp(-d)
    else:
        raise ConfigError(f"unknown weight_fn {weight_fn!r}")
    lo = np.where(ext, raw, np.inf).min(axis=1, keepdims=True)
    hi = np.where(ext, raw, -np.inf).max(axis=1, keepdims=True)
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (raw - lo) / safe, 1.0)
    w = _EPS_WEIGHT + (1.0 - _EPS_WEIGHT) * scaled
    return np.where(ext, w, 0.0)


def _expand_matrix(weights: np.ndarray, order: np.ndarray, k_exp: int) -> np.ndarray:
    """Replace each row with the mean of its k_exp nearest rows (self first)."""
    if k_exp == 1:
        return weights
    return weights[order[:, :k_exp]].mean(axis=1)


def _jaccard_against(weights: np.ndarray, probe: int) -> np.ndarray:
    """Jaccard distance of the probe's row against every row.

    sum-of-max is strictly positive for every pair: each row retains
    positive mass on its own index (weight floor, then averaging with
    itself during expansion), so the ratio is always defined.
    """
    vp = weights[probe]
    mins = np.minimum(weights, vp).sum(axis=1)
    maxs = np.maximum(weights, vp).sum(axis=1)
    return 1.0 - mins / maxs


# ---------------------------------------------------------------------------
# one-probe-at-a-time surface

def nn_set(probe: int, sim_matrix, k: int) -> NeighborSet:
    """The k most similar context indices to `probe`, probe included.

    The probe counts toward k (self-similarity ranks first); remaining
    ties break by index ascending.
    """
    sim = _as_sim(sim_matrix)
    m = sim.shape[0]
    probe = _check_probe(probe, m)
    k = _check_k(k, m)
    row = sim[probe].copy()
    row[probe] = np.inf
    order = np.argsort(-row, kind="stable")
    return NeighborSet(probe, frozenset(order[:k].tolist()))


def reciprocal_set(probe: int, sim_matrix, k: int) -> NeighborSet:
    """Members of nn_set(probe, k) whose own k-NN set contains the probe."""
    sim = _as_sim(sim_matrix)
    m = sim.shape[0]
    probe = _check_probe(probe, m)
    k = _check_k(k, m)
    _, ranks = _rank_order(sim)
    mask = _reciprocal_mask(ranks, k)
    return NeighborSet(probe, frozenset(np.nonzero(mask[probe])[0].tolist()))


def extended_reciprocal_set(probe: int, sim_matrix, k: int, tau: float) -> NeighborSet:
    """reciprocal_set(probe, k) grown by sufficiently-overlapping neighbors.

    Each c in the original set contributes R(c, round(tau*k)) when at least
    2/3 of that smaller set already lies inside the original set. tau=0 (or
    any tau with round(tau*k) == 0) returns the reciprocal set unchanged.
    """
    sim = _as_sim(sim_matrix)
    m = sim.shape[0]
    probe = _check_probe(probe, m)
    k = _check_k(k, m)
    if not 0.0 <= tau <= 1.0:
        raise ConfigError(f"tau must lie in [0, 1], got {tau!r}")
    _, ranks = _rank_order(sim)
    mask = _extended_mask(ranks, k, tau)
    return NeighborSet(probe, frozenset(np.nonzero(mask[probe])[0].tolist()))


def connectivity_vector(probe: int, extended_set: NeighborSet, sim_matrix, weight_fn: str = "neg_identity") -> ConnectivityVector:
    """Dense weight vector over the context, nonzero on `extended_set`.

    Matches `_weight_matrix` row-for-row; see there for the weighting rules.
    """
    sim = _as_sim(sim_matrix)
    m = sim.shape[0]
    probe = _check_probe(probe, m)
    if weight_fn not in WEIGHT_FNS:
        raise ConfigError(f"weight_fn must be one of {', '.join(WEIGHT_FNS)}; got {weight_fn!r}")
    if extended_set.probe_index != probe:
        raise DataError(f"extended set belongs to probe {extended_set.probe_index}, not {probe}")
    if not extended_set.members:
        raise DataError("cannot weight an empty neighbor set")
    if max(extended_set.members) >= m or min(extended_set.members) < 0:
        raise DataError("extended set contains indices outside the context")

    members = np.zeros(m, dtype=bool)
    members[list(extended_set.members)] = True
    if weight_fn == "binary":
        return ConnectivityVector(probe, members.astype(np.float64))
    row = sim[probe]
    shat = (row - row.min()) / (row.max() - row.min() + _EPS_NORM)
    d = 1.0 - shat
    raw = -d if weight_fn == "neg_identity" else np.exp(-d)
    lo = raw[members].min()
    hi = raw[members].max()
    span = hi - lo
    if span > 0:
        scaled = (raw - lo) / span
    else:
        scaled = np.ones_like(raw)
    w = _EPS_WEIGHT + (1.0 - _EPS_WEIGHT) * scaled
    return ConnectivityVector(probe, np.where(members, w, 0.0))


def local_expansion(vectors: Sequence[ConnectivityVector], sim_matrix, k_exp: int) -> list[ConnectivityVector]:
    """Average each element's connectivity vector with its k_exp-NN's vectors.

    Expects one vector per context element, in index order. k_exp=1 is the
    identity; k_exp=m averages everything into identical vectors.
    """
    sim = _as_sim(sim_matrix)
    m = sim.shape[0]
    k_exp = _check_k(k_exp, m, name="k_exp")
    if len(vectors) != m:
        raise DataError(f"need one connectivity vector per context element ({m}), got {len(vectors)}")
    for i, v in enumerate(vectors):
        if v.probe_index != i:
            raise DataError(f"connectivity vectors out of order: position {i} holds probe {v.probe_index}")
        if v.weights.shape != (m,):
            raise DataError(f"connectivity vector {i} has length {v.weights.shape[0]}, context size is {m}")
    stacked = np.vstack([v.weights for v in vectors])
    order, _ = _rank_order(sim)
    expanded = _expand_matrix(stacked, order, k_exp)
    return [ConnectivityVector(i, expanded[i]) for i in range(m)]


def jaccard_distance(v_a, v_b) -> float:
    """1 - sum(min)/sum(max) over paired weights; 0 iff identical, up to 1."""
    wa = v_a.weights if isinstance(v_a, ConnectivityVector) else np.asarray(v_a, dtype=np.float64)
    wb = v_b.weights if isinstance(v_b, ConnectivityVector) else np.asarray(v_b, dtype=np.float64)
    if wa.shape != wb.shape or wa.ndim != 1:
        raise DataError(f"vector length mismatch: {wa.shape} vs {wb.shape}")
    if wa.size and (wa.min() < 0 or wb.min() < 0):
        raise DataError("jaccard distance requires nonnegative weights")
    denom = float(np.maximum(wa, wb).sum())
    if denom == 0.0:
        raise DataError("jaccard distance undefined for two all-zero vectors")
    return 1.0 - float(np.minimum(wa, wb).sum()) / denom


def mixed_similarity(s_geo_norm: float, d_jaccard: float, lam: float) -> float:
    """lam * s_geo_norm + (1 - lam) * (1 - d_jaccard)."""
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"lambda must lie in [0, 1], got {lam!r}")
    if not -1e-9 <= s_geo_norm <= 1.0 + 1e-9:
        raise DataError(f"normalized geometric similarity out of [0, 1]: {s_geo_norm!r}")
    if not -1e-9 <= d_jaccard <= 1.0 + 1e-9:
        raise DataError(f"jaccard distance out of [0, 1]: {d_jaccard!r}")
    return lam * s_geo_norm + (1.0 - lam) * (1.0 - d_jaccard)


def rnn_scores(context: RankingContext, params: RnnParams, probe: int = 0) -> np.ndarray:
    """Mixed similarity of `probe` against every candidate, fused pipeline.

    Runs reciprocal sets -> tau extension -> weighting -> local expansion ->
    Jaccard -> mixture for the whole context in one vectorized pass; returns
    a float64 vector aligned with context.element_ids[1:] (the query row is
    dropped). Deterministic for fixed inputs.
    """
    m = context.size
    probe = _check_probe(probe, m)
    params.validate_for(m)
    if m == 1:
        return np.zeros(0, dtype=np.float64)
    sim = context.sim_matrix
    order, ranks = _rank_order(sim)
    ext = _extended_mask(ranks, params.k, params.tau)
    weights = _weight_matrix(sim, ext, params.weight_fn)
    weights = _expand_matrix(weights, order, params.k_exp)
    d_j = _jaccard_against(weights, probe)
    s_hat = _row_maxmin(sim)[probe]
    mixed = params.lam * s_hat + (1.0 - params.lam) * (1.0 - d_j)
    return mixed[1:]
