"""Relevance scoring and deterministic top-k reranking.

Scores are similarities between a query vector and candidate document
vectors (dot product by default, cosine optionally), accumulated in
float64 regardless of the stored precision. Rankings sort by score
descending with ties broken by doc_id descending, the same rule trec_eval
applies when it re-sorts a run, so the ranks produced here are the ranks
that get evaluated.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .embed_store import EmbeddingStore

METRICS = ("dot", "cosine")


class MissingEmbeddingError(LookupError):
    """A candidate or query id has no row in the relevant store."""


class RerankError(RuntimeError):
    """Failure while reranking, tagged with the offending query id."""


@dataclass(frozen=True)
class ScoredDoc:
    doc_id: str
    score: float
    rank: int  # 1-based position after the tie-break sort


@dataclass
class RankedList:
    """Top-k scored candidates for one query, in evaluation order."""

    query_id: str
    entries: list[ScoredDoc] = field(default_factory=list)
    k: int = 0
    skipped: int = 0  # candidates dropped under the "skip" missing-id policy


def dot(u, v) -> float:
    """Inner product of two equal-length vectors, accumulated in float64."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.shape[0] < 1:
        raise ValueError("vectors must have at least one entry")
    return float(a @ b)


def cosine(u, v) -> float:
    """Cosine similarity; raises on zero-norm input."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine is undefined for zero-norm input")
    return float(a @ b) / (na * nb)


def _top_k_order(scores: np.ndarray, doc_ids: list[str], k: int) -> list[int]:
    # Two stable passes: doc_id descending first, then score descending,
    # yields (score desc, doc_id desc).
    order = sorted(range(len(doc_ids)), key=lambda i: doc_ids[i], reverse=True)
    order.sort(key=lambda i: scores[i], reverse=True)
    return order[:k]


def rerank_query(
    query_id: str,
    query_vec,
    candidates: Sequence[str],
    store: EmbeddingStore,
    metric: str = "dot",
    k: int = 1000,
    missing: str = "fail",
) -> RankedList:
    """Score ``candidates`` against ``query_vec`` and keep the top k.

    ``missing`` controls what happens when a candidate id has no stored
    vector: "fail" raises MissingEmbeddingError, "skip" drops it and
    counts it in the result's ``skipped`` field.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}, expected one of {METRICS}")
    if missing not in ("fail", "skip"):
        raise ValueError(f"unknown missing-id policy {missing!r}")
    if len(set(candidates)) != len(candidates):
        raise ValueError(f"duplicate candidate ids for query {query_id!r}")

    q = np.asarray(query_vec, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != store.dim:
        raise ValueError(
            f"query vector shape {q.shape} does not match store dim {store.dim}"
        )

    kept: list[str] = []
    rows: list[int] = []
    skipped = 0
    for cid in candidates:
        row = store.id_index.get(cid)
        if row is None:
            if missing == "fail":
                raise MissingEmbeddingError(f"no stored vector for candidate {cid!r}")
            skipped += 1
        else:
            kept.append(cid)
            rows.append(row)

    if not kept:
        return RankedList(query_id=query_id, entries=[], k=k, skipped=skipped)

    mat = np.asarray(store.matrix[np.asarray(rows)], dtype=np.float64)
    if metric == "cosine":
        qn = float(np.linalg.norm(q))
        if qn == 0.0:
            raise ValueError(f"zero-norm query vector for query {query_id!r}")
        norms = np.linalg.norm(mat, axis=1)
        zero = np.where(norms == 0.0)[0]
        if zero.size:
            raise ValueError(
                f"zero-norm document vector for candidate {kept[int(zero[0])]!r}"
            )
        scores = (mat @ q) / (norms * qn)
    else:
        scores = mat @ q

    top = _top_k_order(scores, kept, k)
    entries = [
        ScoredDoc(kept[i], float(scores[i]), rank)
        for rank, i in enumerate(top, start=1)
    ]
    return RankedList(query_id=query_id, entries=entries, k=k, skipped=skipped)


def rerank_all(
    queries,
    candidate_sets,
    docs: EmbeddingStore,
    metric: str = "dot",
    k: int = 1000,
    missing: str = "fail",
    threads: int | None = None,
) -> list[RankedList]:
    """Rerank every query's candidate list; one RankedList per query.

    ``queries`` is an EmbeddingStore or any mapping from query id to
    vector. The candidate sets decide which queries run; a query id with
    candidates but no vector is an error even under the "skip" policy,
    which applies to document ids only. Queries are processed in
    ascending lexicographic query-id order and the output preserves that
    order, so results are identical for any thread count.
    """
    candidates = getattr(candidate_sets, "candidates", candidate_sets)
    qids = sorted(candidates)
    get_qvec = getattr(queries, "get_vector", None) or queries.__getitem__

    def one(qid: str) -> RankedList:
        try:
            qvec = get_qvec(qid)
            return rerank_query(qid, qvec, candidates[qid], docs, metric, k, missing)
        except (ValueError, LookupError) as e:
            raise RerankError(f"query {qid!r}: {e}") from e

    if threads is None:
        threads = os.cpu_count() or 1
    if threads <= 1 or len(qids) <= 1:
        return [one(q) for q in qids]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, qids))
