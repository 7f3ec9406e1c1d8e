"""Topic-aware batch composition over clustered query embeddings.

Queries are grouped into k topics with Lloyd's k-means (k-means++
seeding, explicit seed, squared Euclidean distance). A batch of nominal
size b is then drawn by picking n distinct topics uniformly at random and
taking floor(b/n) queries uniformly without replacement from each, so a
batch holds n * floor(b/n) queries; when n does not divide b the batch is
deliberately left short rather than topped up.

Empty clusters are re-seeded to the point currently farthest from its
assigned centroid, which keeps all k centroids live without duplicating
rows. All randomness flows through explicit integer seeds.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embed_store import EmbeddingStore


class SamplingError(ValueError):
    """Batch composition cannot satisfy the requested spec."""


@dataclass
class TopicClustering:
    """K-means result: centroids, per-query topic assignment, fit stats."""

    k: int
    centroids: np.ndarray  # k x dim, float64
    assignment: dict[str, int]
    inertia: float
    iterations_run: int
    seed: int
    inertia_history: list[float] = field(default_factory=list)
    _members: list[list[str]] | None = field(
        default=None, init=False, repr=False, compare=False
    )

    def members(self) -> list[list[str]]:
        """Query ids per topic, lexicographically sorted within a topic.

        Computed once and cached; treat the returned lists as read-only.
        """
        if self._members is None:
            out: list[list[str]] = [[] for _ in range(self.k)]
            for qid, topic in self.assignment.items():
                out[topic].append(qid)
            for group in out:
                group.sort()
            self._members = out
        return self._members


@dataclass(frozen=True)
class BatchSpec:
    """Nominal batch size b drawn from n topics; requires n <= k."""

    b: int
    n: int

    def __post_init__(self):
        if self.b < 1:
            raise ValueError(f"batch size b must be >= 1, got {self.b}")
        if self.n < 1:
            raise ValueError(f"topics per batch n must be >= 1, got {self.n}")

    @property
    def per_topic(self) -> int:
        return self.b // self.n


@dataclass
class Batch:
    """Queries drawn for one batch, grouped in topic_ids order."""

    topic_ids: list[int]
    query_ids: list[str]
    spec: BatchSpec
    relaxed: bool = False

    @property
    def shortfall(self) -> int:
        return self.spec.b - len(self.query_ids)


def _squared_distances(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # ||x||^2 - 2 x.c + ||c||^2, clipped against tiny negative rounding.
    d2 = (
        np.sum(x * x, axis=1)[:, None]
        - 2.0 * (x @ centroids.T)
        + np.sum(centroids * centroids, axis=1)[None, :]
    )
    return np.maximum(d2, 0.0)


def _plus_plus_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = x[first]
    closest = _squared_distances(x, centroids[:1])[:, 0]
    for j in range(1, k):
        total = float(closest.sum())
        if total > 0.0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            idx = int(rng.integers(n))
        centroids[j] = x[idx]
        closest = np.minimum(closest, _squared_distances(x, centroids[j : j + 1])[:, 0])
    return centroids


def _assign(x: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = _squared_distances(x, centroids)
    labels = d2.argmin(axis=1)  # ties resolve to the lowest index
    return labels, d2[np.arange(x.shape[0]), labels]


def kmeans(
    queries: EmbeddingStore,
    k: int,
    seed: int,
    max_iters: int = 100,
    tol: float = 1e-4,
    normalize: bool = False,
) -> TopicClustering:
    """Cluster query embeddings into k topics with seeded Lloyd's k-means.

    Deterministic for a fixed (store, k, seed, max_iters, tol). Stops
    after ``max_iters`` iterations or when the inertia improvement drops
    below ``tol``. ``normalize`` clusters length-normalized copies of the
    vectors instead of the raw embeddings.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if queries.count < k:
        raise ValueError(f"store has {queries.count} rows, fewer than k={k}")

    x = np.asarray(queries.matrix, dtype=np.float64)
    if normalize:
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        x = x / norms

    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(x, k, rng)

    labels, dists = _assign(x, centroids)
    inertia = float(dists.sum())
    history = [inertia]
    iterations = 0

    for _ in range(max_iters):
        # Means update; empty clusters jump to the worst-fit point.
        farthest = np.argsort(dists)[::-1]
        taken = 0
        for j in range(k):
            mask = labels == j
            if mask.any():
                centroids[j] = x[mask].mean(axis=0)
            else:
                centroids[j] = x[farthest[taken]]
                taken += 1

        labels, dists = _assign(x, centroids)
        new_inertia = float(dists.sum())
        history.append(new_inertia)
        iterations += 1
        improvement = inertia - new_inertia
        inertia = new_inertia
        if improvement < tol:
            break

    assignment = {qid: int(labels[i]) for i, qid in enumerate(queries.ids)}
    return TopicClustering(
        k=k,
        centroids=centroids,
        assignment=assignment,
        inertia=inertia,
        iterations_run=iterations,
        seed=seed,
        inertia_history=history,
    )


def compose_batch(
    clustering: TopicClustering,
    spec: BatchSpec,
    rng_seed: int,
    policy: str = "strict",
) -> Batch:
    """Draw one batch: n topics, floor(b/n) queries from each.

    Topic selection is uniform without replacement over eligible topics
    (those with at least floor(b/n) members); within-topic selection is
    uniform without replacement. Deterministic for a fixed ``rng_seed``.

    With ``policy="strict"`` (default), fewer than n eligible topics is an
    error, as is n > k. With ``policy="relaxed"``, topic slots are drawn
    uniformly with replacement from all k topics instead (so n may exceed
    k); a topic drawn twice contributes twice its quota, undersized topics
    contribute what they have, and the batch is flagged ``relaxed``.
    """
    if policy not in ("strict", "relaxed"):
        raise ValueError(f"unknown policy {policy!r}")
    if policy == "strict" and spec.n > clustering.k:
        raise SamplingError(f"n={spec.n} topics per batch exceeds k={clustering.k}")

    per_topic = spec.per_topic
    members = clustering.members()
    rng = np.random.default_rng(rng_seed)

    if policy == "strict":
        eligible = [t for t in range(clustering.k) if len(members[t]) >= per_topic]
        if len(eligible) < spec.n:
            raise SamplingError(
                f"only {len(eligible)} topics have >= {per_topic} members, "
                f"need n={spec.n} (policy=strict)"
            )
        chosen = rng.choice(len(eligible), size=spec.n, replace=False)
        topic_ids = [eligible[int(t)] for t in chosen]
        query_ids: list[str] = []
        for t in topic_ids:
            picks = rng.choice(len(members[t]), size=per_topic, replace=False)
            query_ids.extend(members[t][int(p)] for p in sorted(picks))
        return Batch(topic_ids=topic_ids, query_ids=query_ids, spec=spec)

    topic_ids = [int(t) for t in rng.choice(clustering.k, size=spec.n, replace=True)]
    want: dict[int, int] = {}
    for t in topic_ids:
        want[t] = want.get(t, 0) + per_topic
    query_ids = []
    for t, quota in want.items():
        take = min(quota, len(members[t]))
        picks = rng.choice(len(members[t]), size=take, replace=False)
        query_ids.extend(members[t][int(p)] for p in sorted(picks))
    return Batch(topic_ids=topic_ids, query_ids=query_ids, spec=spec, relaxed=True)


def save_clustering(clustering: TopicClustering, path) -> None:
    """Persist a clustering as text: ``k dim seed`` header, centroid rows,
    then ``query_id topic`` lines."""
    dim = clustering.centroids.shape[1]
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{clustering.k} {dim} {clustering.seed}\n")
        for row in clustering.centroids:
            f.write(" ".join(format(v, ".17g") for v in row) + "\n")
        for qid in sorted(clustering.assignment):
            if any(c.isspace() for c in qid) or not qid:
                raise ValueError(f"query id {qid!r} cannot be saved in text format")
            f.write(f"{qid} {clustering.assignment[qid]}\n")


def load_clustering(path) -> TopicClustering:
    """Inverse of save_clustering; recomputes inertia lazily as 0 stats."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 3:
            raise ValueError(f"{path}: bad clustering header")
        k, dim, seed = (int(v) for v in header)
        centroids = np.empty((k, dim), dtype=np.float64)
        for j in range(k):
            row = f.readline().split()
            if len(row) != dim:
                raise ValueError(f"{path}: centroid {j} has {len(row)} values, expected {dim}")
            centroids[j] = [float(v) for v in row]
        assignment: dict[str, int] = {}
        for line in f:
            if not line.strip():
                continue
            qid, topic = line.split()
            assignment[qid] = int(topic)
    return TopicClustering(
        k=k,
        centroids=centroids,
        assignment=assignment,
        inertia=0.0,
        iterations_run=0,
        seed=seed,
        inertia_history=[],
    )


def write_batches(batches, path) -> None:
    """Emit one line per batch: index, comma-joined topics, comma-joined ids."""
    with open(path, "w", encoding="utf-8") as f:
        for i, batch in enumerate(batches):
            topics = ",".join(str(t) for t in batch.topic_ids)
            qids = ",".join(batch.query_ids)
            f.write(f"{i} {topics} {qids}\n")
