"""Prime-field arithmetic, field vectors and sparse matrices over GF(r).

Residues are stored as small machine integers.  Everything here is
immutable once constructed; operations return new objects.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp


class ShapeError(ValueError):
    """Raised when operands have incompatible lengths, shapes or fields."""


def _is_prime(r: int) -> bool:
    if r < 2:
        return False
    k = 2
    while k * k <= r:
        if r % k == 0:
            return False
        k += 1
    return True


@dataclass(frozen=True)
class FieldSpec:
    """A prime field GF(r)."""

    order: int

    def __post_init__(self):
        if not isinstance(self.order, (int, np.integer)) or not _is_prime(int(self.order)):
            raise ValueError(f"GF(r) needs a prime order, got r={self.order!r}")
        object.__setattr__(self, "order", int(self.order))

    @property
    def dtype(self):
        return np.uint8 if self.order <= 256 else np.int64

    def add(self, a: int, b: int) -> int:
        self._check(a, b)
        return (a + b) % self.order

    def sub(self, a: int, b: int) -> int:
        self._check(a, b)
        return (a - b) % self.order

    def mul(self, a: int, b: int) -> int:
        self._check(a, b)
        return (a * b) % self.order

    def neg(self, a: int) -> int:
        self._check(a)
        return (-a) % self.order

    def inv(self, a: int) -> int:
        self._check(a)
        if a == 0:
            raise ZeroDivisionError("0 has no multiplicative inverse")
        return pow(int(a), self.order - 2, self.order)

    @cached_property
    def inverse_table(self) -> np.ndarray:
        """``table[a]`` is the inverse of ``a``; ``table[0]`` is 0 (unused)."""
        table = np.zeros(self.order, dtype=np.int64)
        for a in range(1, self.order):
            table[a] = pow(a, self.order - 2, self.order)
        return table

    def _check(self, *vals):
        for v in vals:
            if not 0 <= v < self.order:
                raise ValueError(f"{v} is not a residue of GF({self.order})")


GF2 = FieldSpec(2)


class FieldVector:
    """A fixed-length vector over GF(r).

    Parameters
    ----------
    spec : FieldSpec
        Field the elements live in.
    elems : sequence of int
        Residues in ``[0, r)``.  Out-of-range values are rejected, not reduced.
    """

    __slots__ = ("_elems", "spec")

    def __init__(self, spec: FieldSpec, elems):
        arr = np.asarray(elems)
        if arr.ndim != 1:
            raise ShapeError("FieldVector needs a 1-d sequence")
        if arr.size and (arr.min() < 0 or arr.max() >= spec.order):
            raise ValueError(f"elements must lie in [0, {spec.order})")
        arr = arr.astype(spec.dtype, copy=True)
        arr.setflags(write=False)
        self.spec = spec
        self._elems = arr

    @classmethod
    def zeros(cls, spec: FieldSpec, n: int) -> FieldVector:
        return cls(spec, np.zeros(n, dtype=spec.dtype))

    @property
    def elems(self) -> np.ndarray:
        return self._elems

    def __len__(self):
        return self._elems.size

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return FieldVector(self.spec, self._elems[idx])
        return int(self._elems[idx])

    def __iter__(self):
        return (int(v) for v in self._elems)

    def __eq__(self, other):
        if not isinstance(other, FieldVector):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self._elems, other._elems)

    def __hash__(self):
        return hash((self.spec.order, self._elems.tobytes()))

    def __add__(self, other):
        return vec_add(self, other)

    def __sub__(self, other):
        return vec_sub(self, other)

    def __repr__(self):
        body = " ".join(str(int(v)) for v in self._elems[:32])
        more = " ..." if len(self) > 32 else ""
        return f"FieldVector(GF({self.spec.order}), n={len(self)}: {body}{more})"

    def is_zero(self) -> bool:
        return not self._elems.any()

    def concat(self, other: FieldVector) -> FieldVector:
        _same_field(self.spec, other.spec)
        return FieldVector(self.spec, np.concatenate([self._elems, other._elems]))


def _same_field(a: FieldSpec, b: FieldSpec):
    if a != b:
        raise ShapeError(f"field mismatch: GF({a.order}) vs GF({b.order})")


def sub_rows(a: np.ndarray, b: np.ndarray, r: int) -> np.ndarray:
    """(a - b) mod r elementwise for residue arrays, broadcasting; avoids integer ``%``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if r == 2:
        return np.bitwise_xor(a, b).astype(np.uint8, copy=False)
    if r < 128:
        d = (a.astype(np.uint8) + np.uint8(r)) - b.astype(np.uint8)
        # d is in [1, 2r); subtracting r wraps the too-small ones above d
        return np.minimum(d, d - np.uint8(r))
    return ((a.astype(np.int64) - b) % r).astype(np.int64)


def vec_add(u: FieldVector, v: FieldVector) -> FieldVector:
    _same_field(u.spec, v.spec)
    if len(u) != len(v):
        raise ShapeError(f"length mismatch: {len(u)} vs {len(v)}")
    r = u.spec.order
    return FieldVector(u.spec, (u.elems.astype(np.int64) + v.elems) % r)


def vec_sub(u: FieldVector, v: FieldVector) -> FieldVector:
    _same_field(u.spec, v.spec)
    if len(u) != len(v):
        raise ShapeError(f"length mismatch: {len(u)} vs {len(v)}")
    r = u.spec.order
    return FieldVector(u.spec, (u.elems.astype(np.int64) - v.elems) % r)


class SparseMatrix:
    """Sparse matrix over GF(r) stored as coordinate triples.

    Entries are kept sorted by (row, col).  Zero values and duplicate
    coordinates are rejected at construction.
    """

    def __init__(self, spec: FieldSpec, rows: int, cols: int, entries: Iterable[tuple[int, int, int]] = ()):
        ent = np.asarray(list(entries), dtype=np.int64).reshape(-1, 3)
        if rows < 0 or cols < 0:
            raise ShapeError("negative dimensions")
        if ent.size:
            if ent[:, 0].min() < 0 or ent[:, 0].max() >= rows or ent[:, 1].min() < 0 or ent[:, 1].max() >= cols:
                raise ShapeError("entry coordinate outside the matrix")
            if ent[:, 2].min() < 1 or ent[:, 2].max() >= spec.order:
                raise ValueError(f"stored values must lie in [1, {spec.order})")
            order = np.lexsort((ent[:, 1], ent[:, 0]))
            ent = ent[order]
            dup = (np.diff(ent[:, 0]) == 0) & (np.diff(ent[:, 1]) == 0)
            if dup.any():
                k = int(np.flatnonzero(dup)[0])
                raise ValueError(f"duplicate entry at ({ent[k, 0]}, {ent[k, 1]})")
        self.spec = spec
        self.rows = int(rows)
        self.cols = int(cols)
        self.row_idx = ent[:, 0].copy()
        self.col_idx = ent[:, 1].copy()
        self.values = ent[:, 2].copy()
        for a in (self.row_idx, self.col_idx, self.values):
            a.setflags(write=False)

    @classmethod
    def from_dense(cls, spec: FieldSpec, dense) -> SparseMatrix:
        d = np.asarray(dense, dtype=np.int64) % spec.order
        if d.ndim != 2:
            raise ShapeError("dense matrix must be 2-d")
        r, c = np.nonzero(d)
        return cls(spec, d.shape[0], d.shape[1], zip(r, c, d[r, c]))

    @classmethod
    def identity_prefix(cls, spec: FieldSpec, k: int, n: int) -> SparseMatrix:
        """The k x n matrix [I_k 0]."""
        if not 0 <= k <= n:
            raise ShapeError(f"need 0 <= k <= n, got k={k}, n={n}")
        return cls(spec, k, n, ((i, i, 1) for i in range(k)))

    @property
    def nnz(self) -> int:
        return self.values.size

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def entries(self) -> list[tuple[int, int, int]]:
        return [(int(a), int(b), int(c)) for a, b, c in zip(self.row_idx, self.col_idx, self.values)]

    @cached_property
    def csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, (self.row_idx, self.col_idx)), shape=self.shape, dtype=np.int64)

    def to_dense(self) -> np.ndarray:
        d = np.zeros(self.shape, dtype=np.int64)
        d[self.row_idx, self.col_idx] = self.values
        return d

    def row_weights(self) -> np.ndarray:
        return np.bincount(self.row_idx, minlength=self.rows)

    def col_weights(self) -> np.ndarray:
        return np.bincount(self.col_idx, minlength=self.cols)

    def top_rows(self, k: int) -> SparseMatrix:
        keep = self.row_idx < k
        return SparseMatrix(self.spec, k, self.cols, zip(self.row_idx[keep], self.col_idx[keep], self.values[keep]))

    def vstack(self, other: SparseMatrix) -> SparseMatrix:
        _same_field(self.spec, other.spec)
        if other.cols != self.cols:
            raise ShapeError("column count mismatch in vstack")
        ent = self.entries + [(r + self.rows, c, v) for r, c, v in other.entries]
        return SparseMatrix(self.spec, self.rows + other.rows, self.cols, ent)

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.spec == other.spec
            and self.shape == other.shape
            and np.array_equal(self.row_idx, other.row_idx)
            and np.array_equal(self.col_idx, other.col_idx)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.spec.order, self.shape, self.row_idx.tobytes(), self.col_idx.tobytes()))

    def __repr__(self):
        return f"SparseMatrix(GF({self.spec.order}), {self.rows}x{self.cols}, nnz={self.nnz})"

    def apply(self, block: np.ndarray) -> np.ndarray:
        """Multiply every row of ``block`` (shape ``(B, cols)``) by this matrix.

        Returns an array of shape ``(B, rows)``; this is the batched form of
        :func:`mat_vec_mul` used for whole databases.
        """
        block = np.asarray(block)
        if block.ndim != 2 or block.shape[1] != self.cols:
            raise ShapeError(f"expected (B, {self.cols}) block, got {block.shape}")
        prod = (self.csr @ block.T.astype(np.int64)).T
        return (np.asarray(prod) % self.spec.order).astype(self.spec.dtype)

    @cached_property
    def packed_rows(self) -> np.ndarray:
        """GF(2) rows packed into uint64 words, shape ``(rows, ceil(cols/64))``."""
        if self.spec.order != 2:
            raise ValueError("packed rows only exist over GF(2)")
        return pack_bits(self.to_dense().astype(np.uint8))


def mat_vec_mul(m: SparseMatrix, v: FieldVector) -> FieldVector:
    _same_field(m.spec, v.spec)
    if m.cols != len(v):
        raise ShapeError(f"matrix has {m.cols} columns but vector has length {len(v)}")
    out = np.zeros(m.rows, dtype=np.int64)
    np.add.at(out, m.row_idx, m.values * v.elems[m.col_idx].astype(np.int64))
    return FieldVector(m.spec, out % m.spec.order)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 array along its last axis into little-endian uint64 words."""
    bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
    lead, n = bits.shape[:-1], bits.shape[-1]
    words = max(1, -(-n // 64))
    buf = np.zeros(lead + (words * 64,), dtype=np.uint8)
    buf[..., :n] = bits
    # one flat packbits call is far faster than packing along an axis
    return np.packbits(buf.reshape(-1), bitorder="little").view("<u8").reshape(lead + (words,))


def packed_mat_vec_gf2(m: SparseMatrix, v: FieldVector) -> FieldVector:
    """GF(2) product using packed rows and popcount parity."""
    if m.spec.order != 2 or v.spec.order != 2:
        raise ValueError("packed path is GF(2) only")
    if m.cols != len(v):
        raise ShapeError(f"matrix has {m.cols} columns but vector has length {len(v)}")
    pv = pack_bits(v.elems)[0]
    counts = np.bitwise_count(m.packed_rows & pv).sum(axis=1)
    return FieldVector(m.spec, counts & 1)


# --- dense linear algebra over GF(r); only what the oracles need -----------


def row_reduce(a: np.ndarray, spec: FieldSpec) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of a dense matrix over GF(r).

    Returns the reduced matrix and the list of pivot columns.
    """
    r = spec.order
    m = np.array(a, dtype=np.int64) % r
    inv = spec.inverse_table
    pivots: list[int] = []
    row = 0
    nrows, ncols = m.shape
    for col in range(ncols):
        if row >= nrows:
            break
        nz = np.flatnonzero(m[row:, col])
        if nz.size == 0:
            continue
        p = row + int(nz[0])
        if p != row:
            m[[row, p]] = m[[p, row]]
        m[row] = (m[row] * inv[m[row, col]]) % r
        others = np.flatnonzero(m[:, col])
        others = others[others != row]
        if others.size:
            m[others] = (m[others] - np.outer(m[others, col], m[row])) % r
        pivots.append(col)
        row += 1
    return m, pivots


def gf2_rank(bits: np.ndarray) -> int:
    """Rank of a 0/1 matrix by XOR elimination on packed rows."""
    rows = pack_bits(bits).copy()
    ncols = np.asarray(bits).shape[1]
    rank_ = 0
    for col in range(ncols):
        word, bit = divmod(col, 64)
        mask = np.uint64(1) << np.uint64(bit)
        hit = np.flatnonzero(rows[rank_:, word] & mask)
        if hit.size == 0:
            continue
        p = rank_ + int(hit[0])
        rows[[rank_, p]] = rows[[p, rank_]]
        others = np.flatnonzero(rows[:, word] & mask)
        others = others[others != rank_]
        rows[others] ^= rows[rank_]
        rank_ += 1
        if rank_ == rows.shape[0]:
            break
    return rank_


def rank(m: SparseMatrix | np.ndarray, spec: FieldSpec | None = None) -> int:
    if isinstance(m, SparseMatrix):
        spec, m = m.spec, m.to_dense()
    if spec.order == 2:
        return gf2_rank(m)
    return len(row_reduce(m, spec)[1])


def solve(m: SparseMatrix, rhs: FieldVector) -> FieldVector | None:
    """One solution of ``m x = rhs`` (free variables zero), or None if inconsistent."""
    spec = m.spec
    aug = np.hstack([m.to_dense(), rhs.elems.astype(np.int64)[:, None]])
    red, piv = row_reduce(aug, spec)
    if m.cols in piv:
        return None
    x = np.zeros(m.cols, dtype=np.int64)
    for k, col in enumerate(piv):
        x[col] = red[k, -1]
    return FieldVector(spec, x)


def nullspace(m: SparseMatrix) -> np.ndarray:
    """Basis of the right nullspace, one basis vector per row."""
    spec = m.spec
    r = spec.order
    red, piv = row_reduce(m.to_dense(), spec)
    free = [c for c in range(m.cols) if c not in set(piv)]
    basis = np.zeros((len(free), m.cols), dtype=np.int64)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for i, pc in enumerate(piv):
            basis[k, pc] = (-red[i, f]) % r
    return basis


def dense_mat_vec(dense: Sequence[Sequence[int]], v: Sequence[int], r: int) -> list[int]:
    """Schoolbook reference multiply, kept loop-based on purpose."""
    out = []
    for row in dense:
        acc = 0
        for a, b in zip(row, v):
            acc = (acc + int(a) * int(b)) % r
        out.append(acc)
    return out
