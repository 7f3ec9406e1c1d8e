"""Binary on-disk store for precomputed embedding matrices.

The store is the interchange point between whatever produced the vectors
(an encoder export job, a text import) and the scoring pipeline. Layout,
little-endian, no padding between sections:

    magic   "DNSE"                      4 bytes
    version u32 = 1
    dim     u32                         vector dimensionality, >= 1
    count   u64                         number of rows
    ids     count x (len u16, UTF-8 bytes)
    payload count * dim float32, row-major

Row order in the file equals the input id order. Vectors are stored as
32-bit floats; reads are memory-mapped so opening a multi-million-row
store does not pull the payload into RAM.
"""
from __future__ import annotations

import mmap
import os
import struct
from typing import Sequence

import numpy as np

MAGIC = b"DNSE"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sIIQ")
_ID_LEN = struct.Struct("<H")
_WRITE_BLOCK_ROWS = 65536


class StoreFormatError(ValueError):
    """Raised when a file does not conform to the store layout."""


def _validate_rows(ids: Sequence[str], vectors) -> np.ndarray:
    """Check id/vector invariants and return the float32 matrix."""
    try:
        arr = np.asarray(vectors)
    except ValueError as e:
        raise ValueError(f"ragged vector input: {e}") from None
    if arr.dtype == object:
        raise ValueError("ragged vector input: rows have differing lengths")
    if arr.ndim != 2:
        raise ValueError(f"vectors must be a 2-d array, got ndim={arr.ndim}")
    if arr.shape[1] < 1:
        raise ValueError("vector dimension must be >= 1")
    if len(ids) != arr.shape[0]:
        raise ValueError(f"{len(ids)} ids but {arr.shape[0]} vector rows")
    if len(set(ids)) != len(ids):
        seen: set[str] = set()
        for i in ids:
            if i in seen:
                raise ValueError(f"duplicate id: {i!r}")
            seen.add(i)
    with np.errstate(over="ignore"):
        arr = np.ascontiguousarray(arr, dtype=np.float32)
    if not np.isfinite(arr).all():
        bad = int(np.where(~np.isfinite(arr).all(axis=1))[0][0])
        raise ValueError(
            f"non-finite value in row {bad} (id {ids[bad]!r}) after float32 conversion"
        )
    return arr


class EmbeddingStore:
    """Read-only id-indexed dense vector matrix with a fixed dimension.

    Immutable once constructed; safe to share across concurrent readers.
    ``matrix`` may be backed by a memory map, so rows are materialized
    only when accessed.
    """

    def __init__(self, ids: list[str], matrix: np.ndarray, path: str | None = None):
        self.ids = ids
        self.matrix = matrix
        self.dim = int(matrix.shape[1])
        self.count = int(matrix.shape[0])
        self.id_index: dict[str, int] = {i: row for row, i in enumerate(ids)}
        self.path = path
        if len(self.id_index) != self.count:
            seen: set[str] = set()
            for i in ids:
                if i in seen:
                    raise StoreFormatError(f"duplicate id in id table: {i!r}")
                seen.add(i)

    @classmethod
    def in_memory(cls, ids: Sequence[str], vectors) -> "EmbeddingStore":
        """Build a store backed by RAM instead of a file."""
        arr = _validate_rows(ids, vectors)
        arr.setflags(write=False)
        return cls(list(ids), arr)

    def get_vector(self, id: str) -> np.ndarray:
        """Return the dim-length float32 row for ``id``."""
        row = self.id_index.get(id)
        if row is None:
            raise KeyError(f"unknown id: {id!r}")
        return self.matrix[row]

    def __len__(self) -> int:
        return self.count

    def __contains__(self, id: str) -> bool:
        return id in self.id_index

    def __repr__(self) -> str:
        src = self.path or "memory"
        return f"EmbeddingStore(count={self.count}, dim={self.dim}, source={src!r})"


def write_store(ids: Sequence[str], vectors, path: str | os.PathLike) -> None:
    """Write ids and their vectors to ``path`` in the binary store layout.

    Vectors are converted to float32; a read-back yields bit-identical
    floats. Raises ValueError on duplicate ids, ragged rows, or non-finite
    values (including float32 overflow).
    """
    arr = _validate_rows(ids, vectors)
    id_blobs = []
    for i in ids:
        blob = i.encode("utf-8")
        if len(blob) > 0xFFFF:
            raise ValueError(f"id too long ({len(blob)} UTF-8 bytes): {i[:40]!r}...")
        id_blobs.append(_ID_LEN.pack(len(blob)) + blob)

    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, FORMAT_VERSION, arr.shape[1], arr.shape[0]))
        f.write(b"".join(id_blobs))
        for start in range(0, arr.shape[0], _WRITE_BLOCK_ROWS):
            block = arr[start : start + _WRITE_BLOCK_ROWS]
            f.write(block.astype("<f4", copy=False).tobytes())


def open_store(path: str | os.PathLike) -> EmbeddingStore:
    """Open a store file for read-only, memory-mapped access.

    The header and id table are read eagerly; the float payload is mapped
    lazily. Raises StoreFormatError on bad magic, version mismatch,
    truncated files, or duplicate ids.
    """
    size = os.path.getsize(path)
    if size < _HEADER.size:
        raise StoreFormatError(f"{path}: file too short for header ({size} bytes)")

    f = open(path, "rb")
    try:
        mm = mmap.mmap(f.fileno(), 0, access=mmap.ACCESS_READ)
    finally:
        f.close()

    try:
        magic, version, dim, count = _HEADER.unpack_from(mm, 0)
        if magic != MAGIC:
            raise StoreFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        if version != FORMAT_VERSION:
            raise StoreFormatError(
                f"{path}: unsupported format version {version}, expected {FORMAT_VERSION}"
            )
        if dim < 1:
            raise StoreFormatError(f"{path}: dim must be >= 1, got {dim}")

        ids: list[str] = []
        offset = _HEADER.size
        try:
            for _ in range(count):
                (id_len,) = _ID_LEN.unpack_from(mm, offset)
                offset += _ID_LEN.size
                ids.append(mm[offset : offset + id_len].decode("utf-8"))
                offset += id_len
        except (struct.error, IndexError):
            raise StoreFormatError(f"{path}: truncated id table") from None
        except UnicodeDecodeError as e:
            raise StoreFormatError(f"{path}: id table is not valid UTF-8: {e}") from None
        if offset > size:
            raise StoreFormatError(f"{path}: truncated id table")

        expected = offset + count * dim * 4
        if size < expected:
            raise StoreFormatError(
                f"{path}: truncated payload, header declares {count}x{dim} float32 "
                f"({expected} bytes total) but file has {size}"
            )
        if size > expected:
            raise StoreFormatError(
                f"{path}: {size - expected} trailing bytes after declared payload"
            )

        matrix = np.frombuffer(mm, dtype="<f4", count=count * dim, offset=offset)
        matrix = matrix.reshape(count, dim)
        store = EmbeddingStore(ids, matrix, path=os.fspath(path))
    except Exception:
        try:
            mm.close()
        except BufferError:
            pass
        raise

    store._mmap = mm  # keep the map alive as long as the store
    return store
