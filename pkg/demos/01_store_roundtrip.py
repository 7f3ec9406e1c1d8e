"""
Binary embedding stores: write, reopen, read lazily
===================================================

A store is a single file: a fixed header naming the dimension and row
count, a table of string ids, then the float32 matrix itself. Opening
one maps the payload instead of reading it, so a multi-gigabyte corpus
costs nothing until rows are touched.
"""
import tempfile
from pathlib import Path

import numpy as np

from dense_eval import open_store, write_store

workdir = Path(tempfile.mkdtemp(prefix="store-demo-"))

# a toy corpus: 1,000 passages embedded in 64 dimensions
rng = np.random.default_rng(7)
ids = [f"passage-{i:04d}" for i in range(1000)]
matrix = rng.normal(size=(1000, 64)).astype(np.float32)

path = workdir / "passages.store"
write_store(ids, matrix, path)
print(f"wrote {path.stat().st_size:,} bytes for {len(ids)} vectors")

# reopen and spot-check: the floats come back bit-exact
store = open_store(path)
print(f"opened: count={store.count} dim={store.dim}")

v = store.get_vector("passage-0042")
assert v.tobytes() == matrix[42].tobytes()
print("row 42 round-tripped bit-exact")

# the matrix is memory-mapped and read-only; whole-array ops still work
norms = np.linalg.norm(np.asarray(store.matrix, dtype=np.float64), axis=1)
print(f"norms: min {norms.min():.3f}  mean {norms.mean():.3f}  max {norms.max():.3f}")

# ids map to rows in insertion order
assert store.ids[:3] == ["passage-0000", "passage-0001", "passage-0002"]
assert store.id_index["passage-0999"] == 999
print("id table preserves input order")
