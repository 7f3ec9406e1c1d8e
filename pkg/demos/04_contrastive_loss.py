"""
Contrastive loss behavior
=========================

The loss of one training instance is the negative log softmax
probability of the positive pair against in-batch negatives. Three
things are worth seeing once: the uniform baseline log(N+1), how the
loss falls as the positive pulls ahead, and what temperature does to
that curve.
"""
import math

import numpy as np

from dense_eval import ContrastiveInstance, batch_contrastive, info_nce_from_similarities

# uniform similarities: the softmax can't tell candidates apart, so the
# loss equals log(N+1) exactly, for any common similarity value
for n in (1, 7, 63):
    loss = info_nce_from_similarities(0.37, [0.37] * n)
    print(f"N={n:3d} uniform loss {loss:.12f}  log(N+1) {math.log(n + 1):.12f}")

# sweep the positive's advantage at several temperatures
print("\nloss as the positive pulls ahead of 8 negatives at 0:")
print("margin:", "  ".join(f"{m:5.1f}" for m in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0)))
for t in (2.0, 1.0, 0.5, 0.1):
    losses = [
        info_nce_from_similarities(margin, [0.0] * 8, temperature=t)
        for margin in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0)
    ]
    print(f"  t={t:3.1f}", "  ".join(f"{v:5.3f}" for v in losses))

# the vector-level API scores a whole batch; repeated runs in any order
# give the same mean to the last bit
rng = np.random.default_rng(5)
dim = 16
batch = []
for _ in range(32):
    q = rng.normal(size=dim)
    pos = q + rng.normal(scale=0.5, size=dim)
    negs = [rng.normal(size=dim) for _ in range(7)]
    batch.append(ContrastiveInstance(q, pos, negs))

mean = batch_contrastive(batch, temperature=0.5)
print(f"\nbatch of {len(batch)}: mean loss {mean:.6f}")

shuffled = list(batch)
rng.shuffle(shuffled)
assert batch_contrastive(shuffled, temperature=0.5) == mean
print("mean is identical after shuffling the batch")

# stability: similarities in the thousands would overflow a naive
# exp-sum; the stabilized form just shifts them away
big = info_nce_from_similarities(5000.0, [4999.0, 4998.5])
small = info_nce_from_similarities(0.0, [-1.0, -1.5])
print(f"shifted by 5000: {big:.12f} vs {small:.12f}")
