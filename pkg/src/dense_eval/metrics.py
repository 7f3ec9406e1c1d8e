"""trec_eval-compatible retrieval metrics over run files and qrels.

The primary number is MRR at a cutoff (default 100), defined as
recip_rank computed on the run truncated to the cutoff depth per query,
i.e. trec_eval with ``-M <k>``. Before evaluation every query's entries
are re-sorted by (score descending, doc_id descending) regardless of the
rank fields, exactly as trec_eval re-sorts a run, so stated ranks can
never skew results.

Aggregation is judged-only: queries with no relevant document in the
qrels are excluded (and counted), matching trec_eval's default. Recall
and MAP at the same cutoff ride along as supplementary aggregates.
"""
from __future__ import annotations

from dataclasses import dataclass

from .msmarco_io import Qrels, RunFile
from .scorer import RankedList


class EvaluationError(ValueError):
    """Evaluation is impossible, e.g. a run with zero judged queries."""


@dataclass
class EvalReport:
    """Per-query reciprocal ranks plus aggregate metrics at one cutoff."""

    per_query: dict[str, float]
    aggregates: dict[str, float]
    num_queries_evaluated: int
    num_unjudged: int
    cutoff: int

    def text_report(self) -> str:
        """trec_eval-style text: metric name, tab, value (4 decimals)."""
        lines = [
            f"num_queries\t{self.num_queries_evaluated}",
            f"num_unjudged\t{self.num_unjudged}",
        ]
        lines += [f"{name}\t{value:.4f}" for name, value in self.aggregates.items()]
        return "\n".join(lines) + "\n"

    def machine_report(self) -> str:
        """Line-delimited full-precision records, one per metric and query."""
        lines = [
            f"aggregate\tnum_queries\t{self.num_queries_evaluated}",
            f"aggregate\tnum_unjudged\t{self.num_unjudged}",
        ]
        lines += [f"aggregate\t{n}\t{v!r}" for n, v in self.aggregates.items()]
        lines += [
            f"query\t{qid}\trr@{self.cutoff}\t{v!r}"
            for qid, v in sorted(self.per_query.items())
        ]
        return "\n".join(lines) + "\n"


def _resorted(pairs: list[tuple[str, float]]) -> list[tuple[str, float]]:
    # (score desc, doc_id desc) via two stable passes.
    out = sorted(pairs, key=lambda p: p[0], reverse=True)
    out.sort(key=lambda p: p[1], reverse=True)
    return out


def _rr(pairs: list[tuple[str, float]], relevant: set[str], k: int) -> float:
    for pos, (doc_id, _) in enumerate(_resorted(pairs)[:k], 1):
        if doc_id in relevant:
            return 1.0 / pos
    return 0.0


def reciprocal_rank(ranking: RankedList, qrels: Qrels, k: int = 100) -> float:
    """Reciprocal rank of the first relevant doc within the top k.

    Entries are re-sorted by (score desc, doc_id desc) first; returns 0
    when no relevant doc appears within the cutoff (including for queries
    with no judgments, which evaluate() additionally excludes from
    aggregation).
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    pairs = [(e.doc_id, e.score) for e in ranking.entries]
    return _rr(pairs, qrels.relevant(ranking.query_id), k)


def evaluate(run: RunFile, qrels: Qrels, k: int = 100) -> EvalReport:
    """Score a run against qrels at cutoff ``k``.

    Returns mrr@k plus supplementary recall@k and map@k, each averaged
    over judged queries in ascending qid order (deterministic reduction).
    Raises EvaluationError when no query in the run is judged.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    grouped: dict[str, list[tuple[str, float]]] = {}
    for rec in run.records:
        grouped.setdefault(rec.query_id, []).append((rec.doc_id, rec.score))

    judged = sorted(q for q in grouped if qrels.relevant(q))
    if not judged:
        raise EvaluationError(
            f"none of the {len(grouped)} queries in the run has a relevant "
            "document in the qrels"
        )

    per_query: dict[str, float] = {}
    recall_sum = 0.0
    ap_sum = 0.0
    rr_sum = 0.0
    for qid in judged:
        relevant = qrels.relevant(qid)
        top = _resorted(grouped[qid])[:k]
        rr = 0.0
        hits = 0
        precision_sum = 0.0
        for pos, (doc_id, _) in enumerate(top, 1):
            if doc_id in relevant:
                hits += 1
                precision_sum += hits / pos
                if rr == 0.0:
                    rr = 1.0 / pos
        per_query[qid] = rr
        rr_sum += rr
        recall_sum += hits / len(relevant)
        ap_sum += precision_sum / len(relevant)

    n = len(judged)
    aggregates = {
        f"mrr@{k}": rr_sum / n,
        f"recall@{k}": recall_sum / n,
        f"map@{k}": ap_sum / n,
    }
    return EvalReport(
        per_query=per_query,
        aggregates=aggregates,
        num_queries_evaluated=n,
        num_unjudged=len(grouped) - n,
        cutoff=k,
    )
