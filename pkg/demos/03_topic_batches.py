"""
Topic clustering and batch composition
======================================

Training batches drawn from a handful of query topics contain harder
in-batch negatives than batches drawn from the whole corpus. This demo
clusters synthetic queries whose true topics are known, then composes
batches of 4 topics x 8 queries and verifies what came out.
"""
import tempfile
from pathlib import Path

import numpy as np

from dense_eval import BatchSpec, EmbeddingStore, compose_batch, kmeans, save_clustering

workdir = Path(tempfile.mkdtemp(prefix="tas-demo-"))
rng = np.random.default_rng(3)

# 12 well-separated topic blobs, 30 queries each
k, per_blob, dim = 12, 30, 8
centers = rng.normal(scale=25.0, size=(k, dim))
ids, rows, truth = [], [], {}
for blob in range(k):
    for i in range(per_blob):
        qid = f"t{blob:02d}-q{i:02d}"
        ids.append(qid)
        rows.append(centers[blob] + rng.normal(scale=0.4, size=dim))
        truth[qid] = blob
store = EmbeddingStore.in_memory(ids, np.asarray(rows, dtype=np.float32))

clustering = kmeans(store, k=k, seed=42)
print(f"k-means: {clustering.iterations_run} iterations, inertia {clustering.inertia:.2f}")
print("inertia history:", " ".join(f"{h:.1f}" for h in clustering.inertia_history))

# how pure did the topics come out? map each found topic to its majority
# true blob and count agreement
members = clustering.members()
agree = 0
for topic, group in enumerate(members):
    blobs = [truth[q] for q in group]
    majority = max(set(blobs), key=blobs.count)
    agree += sum(1 for b in blobs if b == majority)
print(f"purity vs planted blobs: {agree}/{len(ids)}")

spec = BatchSpec(b=32, n=4)
print(f"\nbatches of b={spec.b} from n={spec.n} topics, {spec.per_topic} queries each:")
for i in range(3):
    batch = compose_batch(clustering, spec, rng_seed=100 + i)
    groups = [
        batch.query_ids[s * spec.per_topic : (s + 1) * spec.per_topic]
        for s in range(spec.n)
    ]
    summary = "  ".join(
        f"topic {t}: {g[0]}..{g[-1]}" for t, g in zip(batch.topic_ids, groups)
    )
    print(f"  batch {i}: {summary}")

# the clustering itself serializes to a plain text file
out = workdir / "topics.txt"
save_clustering(clustering, out)
print(f"\nclustering saved to {out} ({out.stat().st_size:,} bytes)")
