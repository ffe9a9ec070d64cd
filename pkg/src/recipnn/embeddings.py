"""Immutable embedding store with a text (TSV) and a bit-exact binary codec.

Binary format ``EMB1``: magic bytes ``45 4D 42 31``, u32 LE dimensionality,
u64 LE record count, then per record a u16 LE id byte length, the id as
UTF-8, and ``dim`` float32 LE components.

TSV format: one record per line, ``<id>\\t<c1>,<c2>,...,<cdim>``.

Vectors are held as float32 (the binary payload type) and are returned
exactly as loaded — no normalization of any kind is applied.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DataError

MAGIC = b"EMB1"
MAX_DIM = 16384
MAX_ID_BYTES = 65535

_HEADER = struct.Struct("<IQ")
_ID_LEN = struct.Struct("<H")


class EmbeddingMatrix:
    """Ordered, immutable id -> vector store.

    Lookup is O(1); iteration order equals construction (file) order.
    Safe for concurrent reads once constructed.
    """

    __slots__ = ("_ids", "_vectors", "_index")

    def __init__(self, ids: Sequence[str], vectors: np.ndarray):
        vectors = np.asarray(vectors, dtype=np.float32)
        if vectors.ndim != 2:
            raise DataError(f"expected a 2-D vector array, got shape {vectors.shape}")
        if len(ids) != vectors.shape[0]:
            raise DataError(f"{len(ids)} ids for {vectors.shape[0]} vectors")
        if not (1 <= vectors.shape[1] <= MAX_DIM):
            raise DataError(f"dimensionality {vectors.shape[1]} outside [1, {MAX_DIM}]")
        if not np.all(np.isfinite(vectors)):
            bad = [ids[i] for i in np.unique(np.nonzero(~np.isfinite(vectors))[0])][:5]
            raise DataError(f"non-finite component(s) in vector(s): {bad}")
        index: dict[str, int] = {}
        for pos, eid in enumerate(ids):
            if not eid:
                raise DataError(f"empty id at position {pos}")
            if len(eid.encode("utf-8")) > MAX_ID_BYTES:
                raise DataError(f"id at position {pos} exceeds {MAX_ID_BYTES} UTF-8 bytes")
            if eid in index:
                raise DataError(f"duplicate id {eid!r}")
            index[eid] = pos
        self._ids = list(ids)
        self._vectors = vectors
        self._vectors.setflags(write=False)
        self._index = index

    @property
    def dim(self) -> int:
        return int(self._vectors.shape[1])

    @property
    def ids(self) -> list[str]:
        return list(self._ids)

    @property
    def vectors(self) -> np.ndarray:
        """The (n, dim) float32 array backing the store (read-only view)."""
        return self._vectors

    def lookup(self, eid: str) -> np.ndarray:
        """Return the stored vector for `eid`, exactly as loaded."""
        try:
            return self._vectors[self._index[eid]]
        except KeyError:
            raise DataError(f"unknown embedding id {eid!r}") from None

    def position(self, eid: str) -> int:
        try:
            return self._index[eid]
        except KeyError:
            raise DataError(f"unknown embedding id {eid!r}") from None

    def __contains__(self, eid: str) -> bool:
        return eid in self._index

    def __len__(self) -> int:
        return len(self._ids)

    def __iter__(self) -> Iterator[tuple[str, np.ndarray]]:
        for eid, row in zip(self._ids, self._vectors):
            yield eid, row

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return self._ids == other._ids and np.array_equal(self._vectors, other._vectors)

    def __repr__(self) -> str:
        return f"EmbeddingMatrix(n={len(self._ids)}, dim={self.dim})"

    @classmethod
    def from_items(cls, items: Iterable[tuple[str, Sequence[float]]], dim: int | None = None) -> "EmbeddingMatrix":
        ids, rows = [], []
        for eid, vec in items:
            ids.append(eid)
            rows.append(np.asarray(vec, dtype=np.float32))
        if not rows:
            return cls(ids, np.zeros((0, dim if dim is not None else 1), dtype=np.float32))
        widths = {r.shape[-1] for r in rows}
        if len(widths) != 1:
            raise DataError(f"inconsistent vector lengths: {sorted(widths)}")
        return cls(ids, np.vstack(rows))


def detect_format(path: str | Path) -> str:
    """Sniff 'binary' vs 'tsv' from the first four bytes."""
    with open(path, "rb") as fh:
        return "binary" if fh.read(4) == MAGIC else "tsv"


def load_embeddings(path: str | Path, fmt: str = "auto") -> EmbeddingMatrix:
    """Load an embedding file; `fmt` is 'binary', 'tsv' or 'auto' (sniffed)."""
    try:
        if fmt == "auto":
            fmt = detect_format(path)
        if fmt == "binary":
            return _load_binary(path)
        if fmt == "tsv":
            return _load_tsv(path)
    except OSError as exc:
        raise DataError(f"cannot read embeddings file {path}: {exc}") from None
    raise DataError(f"unknown embedding format {fmt!r}")


def write_embeddings(matrix: EmbeddingMatrix, path: str | Path, fmt: str = "binary") -> None:
    if fmt == "binary":
        _write_binary(matrix, path)
    elif fmt == "tsv":
        _write_tsv(matrix, path)
    else:
        raise DataError(f"unknown embedding format {fmt!r}")


def _load_binary(path: str | Path) -> EmbeddingMatrix:
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise DataError(f"{path}: bad magic at byte 0 (expected {MAGIC!r})")
    if len(blob) < 4 + _HEADER.size:
        raise DataError(f"{path}: truncated header at byte {len(blob)}")
    dim, count = _HEADER.unpack_from(blob, 4)
    if not (1 <= dim <= MAX_DIM):
        raise DataError(f"{path}: dimensionality {dim} outside [1, {MAX_DIM}] at byte 4")
    off = 4 + _HEADER.size
    ids: list[str] = []
    vec_bytes = 4 * dim
    rows = np.empty((count, dim), dtype=np.float32)
    for rec in range(count):
        if off + _ID_LEN.size > len(blob):
            raise DataError(f"{path}: truncated record {rec} at byte {off}")
        (id_len,) = _ID_LEN.unpack_from(blob, off)
        off += _ID_LEN.size
        if off + id_len + vec_bytes > len(blob):
            raise DataError(f"{path}: truncated record {rec} at byte {off}")
        try:
            ids.append(blob[off : off + id_len].decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise DataError(f"{path}: undecodable id in record {rec} at byte {off}: {exc}") from None
        off += id_len
        rows[rec] = np.frombuffer(blob, dtype="<f4", count=dim, offset=off)
        off += vec_bytes
    if off != len(blob):
        raise DataError(f"{path}: {len(blob) - off} trailing bytes after record {count - 1} at byte {off}")
    try:
        return EmbeddingMatrix(ids, rows)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def _write_binary(matrix: EmbeddingMatrix, path: str | Path) -> None:
    parts = [MAGIC, _HEADER.pack(matrix.dim, len(matrix))]
    for eid, row in matrix:
        raw = eid.encode("utf-8")
        parts.append(_ID_LEN.pack(len(raw)))
        parts.append(raw)
        parts.append(np.ascontiguousarray(row, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def _format_component(value: np.float32) -> str:
    # repr of the exact float64 promotion round-trips back to the same float32
    return repr(float(value))


def _load_tsv(path: str | Path) -> EmbeddingMatrix:
    ids: list[str] = []
    rows: list[np.ndarray] = []
    dim: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise DataError(f"{path}:{lineno}: expected '<id>\\t<components>', got {len(fields)} fields")
            eid, comp_str = fields
            try:
                comps = np.array([float(c) for c in comp_str.split(",")], dtype=np.float32)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad component: {exc}") from None
            if dim is None:
                dim = comps.shape[0]
            elif comps.shape[0] != dim:
                raise DataError(f"{path}:{lineno}: {comps.shape[0]} components, expected {dim}")
            ids.append(eid)
            rows.append(comps)
    if dim is None:
        return EmbeddingMatrix([], np.zeros((0, 1), dtype=np.float32))
    try:
        return EmbeddingMatrix(ids, np.vstack(rows))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def _write_tsv(matrix: EmbeddingMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for eid, row in matrix:
            fh.write(eid)
            fh.write("\t")
            fh.write(",".join(_format_component(c) for c in row))
            fh.write("\n")
