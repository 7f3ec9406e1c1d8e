"""Contrastive agreement scoring between a query, a positive, and negatives.

The loss is the negative log of the softmax probability assigned to the
positive pair, with the positive included in the denominator alongside
the negatives (the usual InfoNCE convention):

    loss = -log( exp(s+/t) / (exp(s+/t) + sum_i exp(s_i/t)) )

where s+ and s_i are similarities under the instance's metric and t is a
temperature (default 1). Log-sum-exp is computed with max-subtraction so
similarities of any magnitude stay finite. ``softmax_probability``
exposes the raw probability form for callers that want the score rather
than its negative log.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scorer import cosine, dot


@dataclass
class ContrastiveInstance:
    """One query with a positive vector and at least one negative."""

    query_vec: np.ndarray
    positive_vec: np.ndarray
    negative_vecs: list[np.ndarray]
    metric: str = "dot"

    def similarities(self) -> tuple[float, list[float]]:
        """(positive similarity, negative similarities) under the metric."""
        if len(self.negative_vecs) < 1:
            raise ValueError("instance needs at least one negative vector")
        if self.metric not in ("dot", "cosine"):
            raise ValueError(f"unknown metric {self.metric!r}")
        sim = dot if self.metric == "dot" else cosine
        pos = sim(self.query_vec, self.positive_vec)
        negs = [sim(self.query_vec, v) for v in self.negative_vecs]
        return pos, negs


def info_nce_from_similarities(
    positive: float, negatives: list[float], temperature: float = 1.0
) -> float:
    """Loss from precomputed similarity scores; stable for |s| up to 1e4+.

    Computed as logsumexp(all/t) - positive/t with the max factored out,
    so a uniform instance returns exactly log(N+1).
    """
    if temperature <= 0.0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if not negatives:
        raise ValueError("need at least one negative similarity")
    logits = [positive / temperature] + [s / temperature for s in negatives]
    if not all(math.isfinite(v) for v in logits):
        raise ValueError("non-finite similarity")
    m = max(logits)
    sum_exp = math.fsum(math.exp(v - m) for v in logits)
    return (m - logits[0]) + math.log(sum_exp)


def info_nce_loss(instance: ContrastiveInstance, temperature: float = 1.0) -> float:
    """InfoNCE loss of one instance; always finite and >= 0."""
    pos, negs = instance.similarities()
    return info_nce_from_similarities(pos, negs, temperature)


def softmax_probability(instance: ContrastiveInstance, temperature: float = 1.0) -> float:
    """Probability the softmax puts on the positive pair (no negative log).

    The denominator sums over the positive and every negative, treating
    the positive as the zeroth candidate.
    """
    return math.exp(-info_nce_loss(instance, temperature))


def batch_contrastive(
    batch: list[ContrastiveInstance], temperature: float = 1.0
) -> float:
    """Arithmetic mean of per-instance losses; exact under permutation."""
    if not batch:
        raise ValueError("empty batch")
    return math.fsum(info_nce_loss(inst, temperature) for inst in batch) / len(batch)
