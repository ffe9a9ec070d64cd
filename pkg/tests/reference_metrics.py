"""Naive IR-metric reference implementations, kept independent on purpose.

Everything here is plain Python over lists and dicts: no numpy, no imports
from the package under test. The implementations follow the textbook
definitions as directly as possible so they can serve as an oracle for the
vectorized versions.
"""

from __future__ import annotations

import math


def rr_at_k(ranked_ids, relevant, k):
    """Reciprocal rank of the first relevant doc within the top k, else 0."""
    for pos, did in enumerate(ranked_ids[:k], start=1):
        if did in relevant:
            return 1.0 / pos
    return 0.0


def dcg_at_k(gains, k):
    return sum(g / math.log2(pos + 1) for pos, g in enumerate(gains[:k], start=1))


def ndcg_at_k(ranked_ids, grades, k):
    """nDCG with linear gain; ideal ranking drawn from all judged grades."""
    gains = [grades.get(did, 0) for did in ranked_ids]
    ideal = sorted(grades.values(), reverse=True)
    idcg = dcg_at_k(ideal, k)
    if idcg <= 0.0:
        return 0.0
    return dcg_at_k(gains, k) / idcg


def recall_at_k(ranked_ids, relevant, k):
    if not relevant:
        return 0.0
    hits = sum(1 for did in ranked_ids[:k] if did in relevant)
    return hits / len(relevant)


def ap_at_k(ranked_ids, relevant, k):
    """Average precision at k, normalized by the total number of relevants."""
    if not relevant:
        return 0.0
    hits = 0
    precision_sum = 0.0
    for pos, did in enumerate(ranked_ids[:k], start=1):
        if did in relevant:
            hits += 1
            precision_sum += hits / pos
    return precision_sum / len(relevant)


def mean_over_queries(per_query, run_ids, qrels_ids):
    evaluated = [q for q in run_ids if q in set(qrels_ids)]
    if not evaluated:
        raise ValueError("no overlapping queries")
    return sum(per_query[q] for q in evaluated) / len(evaluated)


def reference_metric(name, run, qrels, k, rel_threshold=1):
    """Compute a mean metric over run/qrels given as plain dicts.

    run: {qid: [doc_id, ...]} already in rank order.
    qrels: {qid: {doc_id: grade}}.
    """
    per_query = {}
    for qid, ranked in run.items():
        if qid not in qrels:
            continue
        grades = qrels[qid]
        relevant = {d for d, g in grades.items() if g >= rel_threshold}
        if name == "mrr":
            per_query[qid] = rr_at_k(ranked, relevant, k)
        elif name == "ndcg":
            per_query[qid] = ndcg_at_k(ranked, grades, k)
        elif name == "recall":
            per_query[qid] = recall_at_k(ranked, relevant, k)
        elif name == "map":
            per_query[qid] = ap_at_k(ranked, relevant, k)
        else:
            raise ValueError(name)
    return mean_over_queries(per_query, run.keys(), qrels.keys())
