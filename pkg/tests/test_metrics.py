import functools

import numpy as np
import pytest

from dense_eval.metrics import EvaluationError, evaluate, reciprocal_rank
from dense_eval.msmarco_io import Qrels, RunFile, RunRecord
from dense_eval.scorer import RankedList, ScoredDoc


def ranking(qid, docs_scores):
    entries = [ScoredDoc(d, s, i + 1) for i, (d, s) in enumerate(docs_scores)]
    return RankedList(query_id=qid, entries=entries, k=len(entries))


def run_of(rows):
    return RunFile([RunRecord(q, d, r, s, "t") for q, d, r, s in rows])


def qrels_of(pairs):
    judgments = {}
    for qid, docid, grade in pairs:
        judgments.setdefault(qid, {})[docid] = grade
    return Qrels(judgments)


# --- reciprocal_rank ---------------------------------------------------------


def test_rr_first_position():
    q = qrels_of([("q1", "d1", 1)])
    assert reciprocal_rank(ranking("q1", [("d1", 2.0), ("d2", 1.0)]), q) == 1.0


def test_rr_third_position():
    q = qrels_of([("q1", "d3", 1)])
    r = ranking("q1", [("d1", 3.0), ("d2", 2.0), ("d3", 1.0)])
    assert reciprocal_rank(r, q) == pytest.approx(1 / 3)


def test_rr_no_relevant_is_zero():
    q = qrels_of([("q1", "other", 1)])
    assert reciprocal_rank(ranking("q1", [("d1", 1.0)]), q) == 0.0


def test_rr_unjudged_query_is_zero():
    assert reciprocal_rank(ranking("q9", [("d1", 1.0)]), Qrels()) == 0.0


def test_rr_cutoff_excludes_deep_hits():
    docs = [(f"d{i:03d}", float(1000 - i)) for i in range(150)]
    docs[120] = ("hit", docs[120][1])
    q = qrels_of([("q1", "hit", 1)])
    assert reciprocal_rank(ranking("q1", docs), q, k=100) == 0.0
    assert reciprocal_rank(ranking("q1", docs), q, k=150) == pytest.approx(1 / 121)


def test_rr_resorts_by_score_not_stated_order():
    # relevant doc listed first but its score is lowest
    q = qrels_of([("q1", "rel", 1)])
    r = ranking("q1", [("rel", 0.1), ("a", 0.9), ("b", 0.5)])
    assert reciprocal_rank(r, q) == pytest.approx(1 / 3)


def test_rr_tie_breaks_doc_id_descending():
    # equal scores: evaluation order is c, b, a
    q_a = qrels_of([("q1", "a", 1)])
    q_c = qrels_of([("q1", "c", 1)])
    r = ranking("q1", [("a", 1.0), ("b", 1.0), ("c", 1.0)])
    assert reciprocal_rank(r, q_a) == pytest.approx(1 / 3)
    assert reciprocal_rank(r, q_c) == 1.0


def test_rr_rejects_bad_cutoff():
    with pytest.raises(ValueError, match="k"):
        reciprocal_rank(ranking("q1", [("d", 1.0)]), Qrels(), k=0)


def test_rr_matches_comparator_oracle():
    # independent oracle: explicit comparator, no shared sort code
    def oracle(pairs, relevant, k):
        def cmp(a, b):
            if a[1] != b[1]:
                return -1 if a[1] > b[1] else 1
            if a[0] != b[0]:
                return -1 if a[0] > b[0] else 1
            return 0

        ordered = sorted(pairs, key=functools.cmp_to_key(cmp))
        for pos, (doc, _) in enumerate(ordered[:k], 1):
            if doc in relevant:
                return 1.0 / pos
        return 0.0

    rng = np.random.default_rng(31)
    for trial in range(300):
        n = int(rng.integers(1, 40))
        docs = [f"d{int(rng.integers(0, 25)):02d}-{j}" for j in range(n)]
        scores = np.round(rng.normal(size=n), 2)  # coarse grid forces ties
        relevant = {d for d in docs if rng.random() < 0.15}
        k = int(rng.integers(1, 50))
        pairs = list(zip(docs, [float(s) for s in scores]))
        r = ranking("q", pairs)
        got = reciprocal_rank(r, qrels_of([("q", d, 1) for d in relevant]), k=k)
        assert got == oracle(pairs, relevant, k), f"trial {trial}"


# --- evaluate ----------------------------------------------------------------


def test_evaluate_single_query():
    run = run_of([("q1", "d1", 1, 2.0), ("q1", "d2", 2, 1.0)])
    rep = evaluate(run, qrels_of([("q1", "d2", 1)]), k=100)
    assert rep.per_query == {"q1": 0.5}
    assert rep.aggregates["mrr@100"] == 0.5
    assert rep.num_queries_evaluated == 1
    assert rep.num_unjudged == 0


def test_evaluate_mean_over_judged_only():
    run = run_of(
        [
            ("q1", "d1", 1, 2.0),
            ("q2", "d1", 1, 2.0),
            ("q3", "d1", 1, 2.0),  # unjudged: excluded from the mean
        ]
    )
    q = qrels_of([("q1", "d1", 1), ("q2", "other", 1)])
    rep = evaluate(run, q, k=10)
    assert rep.num_queries_evaluated == 2
    assert rep.num_unjudged == 1
    assert rep.aggregates["mrr@10"] == pytest.approx((1.0 + 0.0) / 2)


def test_evaluate_grade_zero_only_query_counts_as_unjudged():
    run = run_of([("q1", "d1", 1, 1.0), ("q2", "d2", 1, 1.0)])
    q = qrels_of([("q1", "d1", 1), ("q2", "d2", 0)])
    rep = evaluate(run, q)
    assert rep.num_queries_evaluated == 1
    assert rep.num_unjudged == 1


def test_evaluate_no_judged_queries_raises():
    run = run_of([("q1", "d1", 1, 1.0)])
    with pytest.raises(EvaluationError, match="relevant"):
        evaluate(run, Qrels(), k=100)


def test_evaluate_recall_and_map_hand_computed():
    # relevant {d1, d3}; evaluation order d5, d1, d2, d3
    run = run_of(
        [
            ("q1", "d5", 1, 0.9),
            ("q1", "d1", 2, 0.8),
            ("q1", "d2", 3, 0.7),
            ("q1", "d3", 4, 0.6),
        ]
    )
    rep = evaluate(run, qrels_of([("q1", "d1", 1), ("q1", "d3", 1)]), k=10)
    assert rep.aggregates["recall@10"] == pytest.approx(1.0)
    assert rep.aggregates["map@10"] == pytest.approx((1 / 2 + 2 / 4) / 2)
    assert rep.per_query["q1"] == pytest.approx(1 / 2)


def test_evaluate_recall_counts_within_cutoff_only():
    run = run_of(
        [
            ("q1", "d1", 1, 0.9),
            ("q1", "rel", 2, 0.8),
            ("q1", "d3", 3, 0.7),
        ]
    )
    rep = evaluate(run, qrels_of([("q1", "rel", 1), ("q1", "d3", 1)]), k=2)
    assert rep.aggregates["recall@2"] == pytest.approx(1 / 2)


def test_evaluate_relevant_docs_missing_from_run_lower_recall():
    run = run_of([("q1", "d1", 1, 1.0)])
    rep = evaluate(run, qrels_of([("q1", "d1", 1), ("q1", "never", 1)]), k=10)
    assert rep.aggregates["recall@10"] == pytest.approx(0.5)
    assert rep.aggregates["map@10"] == pytest.approx(0.5)


def test_evaluate_cutoff_names_metrics():
    run = run_of([("q1", "d1", 1, 1.0)])
    rep = evaluate(run, qrels_of([("q1", "d1", 1)]), k=7)
    assert set(rep.aggregates) == {"mrr@7", "recall@7", "map@7"}
    assert rep.cutoff == 7


def test_evaluate_resorts_shuffled_rank_fields():
    # stated ranks are adversarially wrong; scores decide
    run = run_of(
        [
            ("q1", "rel", 3, 0.5),
            ("q1", "top", 1, 0.2),
            ("q1", "mid", 2, 0.4),
        ]
    )
    rep = evaluate(run, qrels_of([("q1", "rel", 1)]), k=10)
    assert rep.per_query["q1"] == 1.0


def test_evaluate_mrr_equals_mean_of_reciprocal_rank():
    rng = np.random.default_rng(32)
    rows = []
    qrels_pairs = []
    lists = {}
    for qi in range(30):
        qid = f"q{qi:02d}"
        n = int(rng.integers(1, 30))
        docs = [f"d{j}" for j in range(n)]
        scores = [float(s) for s in np.round(rng.normal(size=n), 1)]
        lists[qid] = list(zip(docs, scores))
        for r, (d, s) in enumerate(lists[qid], 1):
            rows.append((qid, d, r, s))
        for d in docs:
            if rng.random() < 0.2:
                qrels_pairs.append((qid, d, 1))
    q = qrels_of(qrels_pairs)
    run = run_of(rows)
    rep = evaluate(run, q, k=10)
    for qid, rr in rep.per_query.items():
        assert rr == reciprocal_rank(ranking(qid, lists[qid]), q, k=10)
    judged = sorted(rep.per_query)
    assert rep.aggregates["mrr@10"] == pytest.approx(
        sum(rep.per_query[qid] for qid in judged) / len(judged)
    )


# --- reports -------------------------------------------------------------


def test_text_report_four_decimals():
    run = run_of([("q1", "d1", 1, 2.0), ("q1", "d2", 2, 1.0)])
    rep = evaluate(run, qrels_of([("q1", "d2", 1)]), k=100)
    text = rep.text_report()
    assert "mrr@100\t0.5000\n" in text
    assert "num_queries\t1\n" in text
    assert "num_unjudged\t0\n" in text


def test_machine_report_roundtrips_full_precision():
    run = run_of(
        [("q1", "d1", 1, 2.0), ("q1", "d2", 2, 1.0), ("q1", "d3", 3, 0.5)]
    )
    rep = evaluate(run, qrels_of([("q1", "d3", 1)]), k=100)
    text = rep.machine_report()
    line = next(l for l in text.splitlines() if l.startswith("aggregate\tmrr@100"))
    assert float(line.split("\t")[2]) == rep.aggregates["mrr@100"]
    qline = next(l for l in text.splitlines() if l.startswith("query\tq1"))
    assert float(qline.split("\t")[3]) == rep.per_query["q1"] == pytest.approx(1 / 3)
