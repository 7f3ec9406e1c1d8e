"""Command-line pipeline: import embeddings, rerank, evaluate, sample, selftest.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
All randomness is seed-controlled through flags; given identical inputs
and flags every command produces identical outputs.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import contrastive, metrics, msmarco_io, scorer, tas_sampler
from .embed_store import open_store, write_store

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_threads() -> int | None:
    env = os.environ.get("DENSE_EVAL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            return None
    return None


def _read_ids(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip()]


def _read_vectors(path: str) -> list[list[float]]:
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rows.append([float(tok) for tok in line.split()])
            except ValueError as e:
                raise msmarco_io.ParseError(path, no, f"bad vector value: {e}") from None
    return rows


def cmd_import(args) -> int:
    ids = _read_ids(args.ids)
    vectors = _read_vectors(args.vectors)
    if len(ids) != len(vectors):
        raise ValueError(f"{len(ids)} ids but {len(vectors)} vector lines")
    if not ids:
        raise ValueError("no rows to import")
    write_store(ids, vectors, args.out)
    store = open_store(args.out)
    print(f"wrote {store.count} vectors of dim {store.dim} to {args.out}")
    return EXIT_OK


def cmd_rerank(args) -> int:
    queries = open_store(args.queries)
    docs = open_store(args.docs)
    candidates = msmarco_io.parse_candidates(args.candidates)
    ranked = scorer.rerank_all(
        queries,
        candidates,
        docs,
        metric=args.metric,
        k=args.k,
        missing=args.missing,
        threads=args.threads,
    )
    msmarco_io.write_run(ranked, args.tag, args.out)
    skipped = sum(r.skipped for r in ranked)
    print(f"queries processed: {len(ranked)}")
    print(f"candidates skipped (missing embedding): {skipped}")
    if candidates.duplicates_dropped:
        print(f"duplicate candidate lines dropped: {candidates.duplicates_dropped}")
    print(f"run written to {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    run = msmarco_io.parse_run(args.run)
    qrels = msmarco_io.parse_qrels(args.qrels)
    report = metrics.evaluate(run, qrels, k=args.k)
    if args.format == "machine":
        sys.stdout.write(report.machine_report())
    else:
        sys.stdout.write(report.text_report())
    return EXIT_OK


def cmd_sample(args) -> int:
    queries = open_store(args.queries)
    clustering = tas_sampler.kmeans(
        queries,
        k=args.k,
        seed=args.seed,
        max_iters=args.max_iters,
        tol=args.tol,
        normalize=args.normalize,
    )
    spec = tas_sampler.BatchSpec(b=args.b, n=args.n)
    batches = [
        tas_sampler.compose_batch(clustering, spec, rng_seed=args.seed + 1 + i,
                                  policy=args.policy)
        for i in range(args.batches)
    ]
    tas_sampler.write_batches(batches, args.out)
    clustering_out = args.clustering_out or args.out + ".clustering"
    tas_sampler.save_clustering(clustering, clustering_out)
    print(f"clustered {queries.count} queries into k={args.k} topics "
          f"(inertia {clustering.inertia:.6g}, {clustering.iterations_run} iterations)")
    print(f"wrote {len(batches)} batches of {spec.n}x{spec.per_topic} queries to {args.out}")
    print(f"clustering written to {clustering_out}")
    return EXIT_OK


def _selftest_dot_cosine() -> None:
    rng = np.random.default_rng(11)
    for _ in range(50):
        u = rng.normal(size=64)
        v = rng.normal(size=64)
        naive = sum(float(a) * float(b) for a, b in zip(u, v))
        assert abs(scorer.dot(u, v) - naive) <= 1e-12 * max(1.0, abs(naive))
        un, vn = u / np.linalg.norm(u), v / np.linalg.norm(v)
        assert abs(scorer.cosine(u, v) - scorer.dot(un, vn)) <= 1e-9


def _selftest_mrr() -> None:
    rng = np.random.default_rng(12)
    qrels = msmarco_io.Qrels()
    records = []
    expected = []
    for qi in range(50):
        qid = f"q{qi:03d}"
        depth = int(rng.integers(1, 150))
        docs = [f"d{qi:03d}_{j}" for j in range(120)]
        qrels.judgments[qid] = {docs[depth - 1]: 1} if depth <= 120 else {"none": 1}
        expected.append(1.0 / depth if depth <= min(100, 120) else 0.0)
        for rank, d in enumerate(docs, 1):
            records.append(msmarco_io.RunRecord(qid, d, rank, float(1000 - rank), "selftest"))
    run = msmarco_io.RunFile(records)
    report = metrics.evaluate(run, qrels, k=100)
    got = [report.per_query[f"q{qi:03d}"] for qi in range(50)]
    assert got == expected


def _selftest_contrastive() -> None:
    import math

    for n in (1, 7, 63):
        loss = contrastive.info_nce_from_similarities(0.5, [0.5] * n)
        assert abs(loss - math.log(n + 1)) <= 1e-12
    sat = contrastive.info_nce_from_similarities(50.0, [0.0] * 4)
    assert sat < 1e-6
    base = contrastive.info_nce_from_similarities(1.0, [0.2, -0.3, 0.7])
    shifted = contrastive.info_nce_from_similarities(1001.0, [1000.2, 999.7, 1000.7])
    assert abs(base - shifted) <= 1e-9


def cmd_selftest(args) -> int:
    checks = [
        ("dot/cosine against naive accumulation", _selftest_dot_cosine),
        ("reciprocal rank against linear-scan oracle", _selftest_mrr),
        ("contrastive closed forms", _selftest_contrastive),
    ]
    failures = 0
    for name, fn in checks:
        try:
            fn()
        except Exception as e:  # report every check before deciding
            failures += 1
            print(f"FAIL {name}: {e}")
        else:
            print(f"PASS {name}")
    if failures:
        print(f"{failures}/{len(checks)} selftest checks failed")
        return EXIT_INTERNAL
    print(f"all {len(checks)} selftest checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dense-eval", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", help="build a binary store from text id/vector files")
    p.add_argument("--ids", required=True, help="file with one id per line")
    p.add_argument("--vectors", required=True,
                   help="file with one vector per line, space-separated floats")
    p.add_argument("--out", required=True, help="output store path")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("rerank", help="score candidates and write a TREC run")
    p.add_argument("--queries", required=True, help="query embedding store")
    p.add_argument("--docs", required=True, help="document embedding store")
    p.add_argument("--candidates", required=True,
                   help="tab-separated qid/docid candidate file")
    p.add_argument("--metric", choices=scorer.METRICS, default="dot")
    p.add_argument("--k", type=int, default=1000, help="list depth kept per query")
    p.add_argument("--tag", required=True, help="run tag written to each line")
    p.add_argument("--out", required=True, help="output run path")
    p.add_argument("--missing", choices=("fail", "skip"), default="fail",
                   help="policy when a candidate has no stored vector")
    p.add_argument("--threads", type=int, default=_default_threads(),
                   help="worker threads (default: DENSE_EVAL_THREADS or all cores)")
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("eval", help="evaluate a run against qrels")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--k", type=int, default=100, help="evaluation cutoff")
    p.add_argument("--format", choices=("text", "machine"), default="text")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sample", help="cluster queries into topics and draw batches")
    p.add_argument("--queries", required=True, help="query embedding store")
    p.add_argument("--k", type=int, required=True, help="number of topics")
    p.add_argument("--b", type=int, required=True, help="nominal batch size")
    p.add_argument("--n", type=int, required=True, help="topics per batch")
    p.add_argument("--batches", type=int, required=True, help="number of batches")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output batches path")
    p.add_argument("--clustering-out", default=None,
                   help="clustering path (default: <out>.clustering)")
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--normalize", action="store_true",
                   help="length-normalize vectors before clustering")
    p.add_argument("--policy", choices=("strict", "relaxed"), default="strict")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("selftest", help="run the embedded invariant suite")
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (ValueError, LookupError, scorer.RerankError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
