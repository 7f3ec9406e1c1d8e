"""Parsers and writers for MSMARCO dev artifacts and TREC run files.

Three text formats, all UTF-8 with newline-terminated lines:

    qrels          ``qid 0 docid grade`` whitespace-separated
    candidates     ``qid <TAB> docid <TAB> query_text <TAB> passage_text``
                   (text columns ignored; first-stage order preserved)
    run            ``qid Q0 docid rank score tag`` single-space separated,
                   scores rendered with 6 significant digits, queries
                   emitted in ascending lexicographic qid order

Parsers never crash on arbitrary bytes: every failure surfaces as a
ParseError carrying the file path and line number.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

from .scorer import RankedList


class ParseError(ValueError):
    """Malformed input file; message carries path and line number."""

    def __init__(self, path, line_no: int | None, message: str):
        self.path = os.fspath(path)
        self.line_no = line_no
        where = f"{self.path}:{line_no}" if line_no is not None else self.path
        super().__init__(f"{where}: {message}")


@dataclass
class Qrels:
    """Relevance judgments: query_id -> doc_id -> integer grade >= 0."""

    judgments: dict[str, dict[str, int]] = field(default_factory=dict)

    def relevant(self, query_id: str) -> set[str]:
        """Doc ids judged relevant (grade >= 1) for a query."""
        docs = self.judgments.get(query_id, {})
        return {d for d, g in docs.items() if g >= 1}

    def num_queries(self) -> int:
        return len(self.judgments)


@dataclass
class CandidateSet:
    """First-stage candidate doc ids per query, in retrieval order."""

    candidates: dict[str, list[str]] = field(default_factory=dict)
    duplicates_dropped: int = 0

    def __len__(self) -> int:
        return len(self.candidates)


class RunRecord(NamedTuple):
    query_id: str
    doc_id: str
    rank: int
    score: float
    tag: str


@dataclass
class RunFile:
    """Ranked (query, doc, rank, score) records in TREC exchange format."""

    records: list[RunRecord] = field(default_factory=list)

    def by_query(self) -> dict[str, list[RunRecord]]:
        grouped: dict[str, list[RunRecord]] = {}
        for rec in self.records:
            grouped.setdefault(rec.query_id, []).append(rec)
        return grouped

    def validate(self, path="<memory>") -> None:
        """Enforce rank and uniqueness invariants, raising ParseError."""
        seen: set[tuple[str, str]] = set()
        ranks: dict[str, list[int]] = {}
        for rec in self.records:
            key = (rec.query_id, rec.doc_id)
            if key in seen:
                raise ParseError(
                    path, None, f"duplicate (query, doc) pair {key!r} in run"
                )
            seen.add(key)
            ranks.setdefault(rec.query_id, []).append(rec.rank)
        for qid, rs in ranks.items():
            if sorted(rs) != list(range(1, len(rs) + 1)):
                raise ParseError(
                    path, None, f"ranks for query {qid!r} are not 1..{len(rs)} without gaps"
                )

    @classmethod
    def from_ranked_lists(cls, ranked: Iterable[RankedList], tag: str) -> "RunFile":
        records = []
        for rl in sorted(ranked, key=lambda r: r.query_id):
            for entry in rl.entries:
                records.append(
                    RunRecord(rl.query_id, entry.doc_id, entry.rank, entry.score, tag)
                )
        return cls(records)


def _decoded_lines(path) -> Iterator[tuple[int, str]]:
    with open(path, "rb") as f:
        for no, raw in enumerate(f, 1):
            try:
                yield no, raw.decode("utf-8").rstrip("\r\n")
            except UnicodeDecodeError as e:
                raise ParseError(path, no, f"invalid UTF-8: {e}") from None


def parse_qrels(path) -> Qrels:
    """Parse whitespace-separated ``qid ignored docid grade`` judgments.

    Duplicate identical lines collapse to one judgment; conflicting
    grades for the same (qid, docid) pair are an error.
    """
    judgments: dict[str, dict[str, int]] = {}
    for no, line in _decoded_lines(path):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 4:
            raise ParseError(path, no, f"expected 4 fields, got {len(fields)}")
        qid, _, docid, grade_s = fields
        try:
            grade = int(grade_s)
        except ValueError:
            raise ParseError(path, no, f"non-integer grade {grade_s!r}") from None
        if grade < 0:
            raise ParseError(path, no, f"negative grade {grade}")
        docs = judgments.setdefault(qid, {})
        if docid in docs and docs[docid] != grade:
            raise ParseError(
                path,
                no,
                f"conflicting grades for ({qid}, {docid}): {docs[docid]} vs {grade}",
            )
        docs[docid] = grade
    return Qrels(judgments)


def parse_candidates(path) -> CandidateSet:
    """Parse a tab-separated top-N candidate file (text columns ignored).

    Duplicate (qid, docid) pairs keep the first occurrence;
    ``duplicates_dropped`` reports how many were discarded.
    """
    candidates: dict[str, list[str]] = {}
    seen: set[tuple[str, str]] = set()
    dropped = 0
    for no, line in _decoded_lines(path):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) < 2:
            raise ParseError(path, no, f"expected >= 2 tab-separated columns, got {len(cols)}")
        qid, docid = cols[0].strip(), cols[1].strip()
        if not qid or not docid:
            raise ParseError(path, no, "empty qid or docid")
        if (qid, docid) in seen:
            dropped += 1
            continue
        seen.add((qid, docid))
        candidates.setdefault(qid, []).append(docid)
    return CandidateSet(candidates, duplicates_dropped=dropped)


def format_score(score: float) -> str:
    """Render a score with 6 significant digits, trailing zeros kept."""
    s = format(float(score), "#.6g")
    return s[:-1] if s.endswith(".") else s


def _check_token(value: str, what: str) -> str:
    if not value or any(c.isspace() for c in value):
        raise ValueError(f"{what} {value!r} is empty or contains whitespace")
    return value


def write_run(ranked: Iterable[RankedList], tag: str, path) -> None:
    """Write ranked lists as ``qid Q0 docid rank score tag`` lines.

    Queries are emitted in ascending lexicographic qid order; within a
    query, entries keep their rank order.
    """
    _check_token(tag, "run tag")
    lists = sorted(ranked, key=lambda r: r.query_id)
    qids = [r.query_id for r in lists]
    if len(set(qids)) != len(qids):
        raise ValueError("duplicate query_id across ranked lists")
    with open(path, "w", encoding="utf-8") as f:
        for rl in lists:
            _check_token(rl.query_id, "query id")
            for entry in rl.entries:
                _check_token(entry.doc_id, "doc id")
                if not math.isfinite(entry.score):
                    raise ValueError(
                        f"non-finite score for ({rl.query_id}, {entry.doc_id})"
                    )
                f.write(
                    f"{rl.query_id} Q0 {entry.doc_id} {entry.rank} "
                    f"{format_score(entry.score)} {tag}\n"
                )


def parse_run(path) -> RunFile:
    """Parse a TREC run file and validate RunFile invariants."""
    records: list[RunRecord] = []
    for no, line in _decoded_lines(path):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 6:
            raise ParseError(path, no, f"expected 6 fields, got {len(fields)}")
        qid, _, docid, rank_s, score_s, tag = fields
        try:
            rank = int(rank_s)
        except ValueError:
            raise ParseError(path, no, f"non-integer rank {rank_s!r}") from None
        if rank < 1:
            raise ParseError(path, no, f"rank must be positive, got {rank}")
        try:
            score = float(score_s)
        except ValueError:
            raise ParseError(path, no, f"non-numeric score {score_s!r}") from None
        if not math.isfinite(score):
            raise ParseError(path, no, f"non-finite score {score_s!r}")
        records.append(RunRecord(qid, docid, rank, score, tag))
    run = RunFile(records)
    run.validate(path)
    return run
