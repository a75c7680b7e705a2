"""Linear memory/sensory compressors: truncation pairs and LDPC parity-check ensembles."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .gf import GF2, FieldSpec, FieldVector, SparseMatrix, mat_vec_mul
from .rng import as_generator, stream

log = logging.getLogger(__name__)

CYCLE_REPAIR_ROUNDS = 20


class Construction(str, Enum):
    TRUNCATION = "truncation"
    LDPC_EXTENDED = "ldpc-extended"
    EXPLICIT = "explicit"


def _rows_for(n: int, rate: float) -> int:
    if not 0 < rate <= 1:
        raise ValueError(f"compression rate must lie in (0, 1], got {rate}")
    k = round(n * rate)
    if k < 1:
        raise ValueError(f"n*rate = {n * rate:g} rounds to zero rows")
    return k


@dataclass(frozen=True)
class CompressorPair:
    """Memory compressor ``H`` (f) and sensory compressor ``G`` (g).

    ``rm`` and ``rs`` are the realised rates rows/n, not the requested ones.
    """

    H: SparseMatrix
    G: SparseMatrix
    construction: Construction

    def __post_init__(self):
        if self.H.cols != self.G.cols:
            raise ValueError("H and G must have the same number of columns")
        if self.H.spec != self.G.spec:
            raise ValueError("H and G live over different fields")

    @property
    def n(self) -> int:
        return self.H.cols

    @property
    def spec(self) -> FieldSpec:
        return self.H.spec

    @property
    def rm(self) -> float:
        return self.H.rows / self.n

    @property
    def rs(self) -> float:
        return self.G.rows / self.n

    @property
    def n_min(self) -> int:
        return min(self.H.rows, self.G.rows)


def truncation_pair(n: int, rm: float, rs: float, spec: FieldSpec) -> CompressorPair:
    """H = [I 0] keeping the first round(n*rm) symbols, G likewise with rs."""
    km, ks = _rows_for(n, rm), _rows_for(n, rs)
    return CompressorPair(
        SparseMatrix.identity_prefix(spec, km, n),
        SparseMatrix.identity_prefix(spec, ks, n),
        Construction.TRUNCATION,
    )


@dataclass(frozen=True)
class LdpcEnsembleSpec:
    n: int
    dv: int
    dc: int
    spec: FieldSpec
    seed: int = 0

    def __post_init__(self):
        if self.dv < 1 or self.dc < 1 or self.n < 1:
            raise ValueError("n, dv and dc must be positive")
        if (self.n * self.dv) % self.dc:
            raise ValueError(f"n*dv = {self.n * self.dv} is not divisible by dc = {self.dc}")
        if self.dc > self.n or self.dv > self.rows:
            raise ValueError(f"infeasible degrees dv={self.dv}, dc={self.dc} for n={self.n}")

    @property
    def rows(self) -> int:
        return self.n * self.dv // self.dc

    @property
    def rate(self) -> float:
        return self.dv / self.dc


class _EdgeSet:
    """Bipartite edge list with O(1) membership, for swap-based repairs."""

    def __init__(self, ev: np.ndarray, ec: np.ndarray, m: int):
        self.ev = ev
        self.ec = ec
        self.m = m
        self.count: dict[int, int] = {}
        for v, c in zip(ev.tolist(), ec.tolist()):
            key = v * m + c
            self.count[key] = self.count.get(key, 0) + 1

    def can_swap(self, e1: int, e2: int) -> bool:
        v1, c1, v2, c2 = self.ev[e1], self.ec[e1], self.ev[e2], self.ec[e2]
        if c1 == c2 or v1 == v2:
            return False
        return (v1 * self.m + c2) not in self.count and (v2 * self.m + c1) not in self.count

    def swap(self, e1: int, e2: int):
        for e in (e1, e2):
            key = int(self.ev[e] * self.m + self.ec[e])
            self.count[key] -= 1
            if not self.count[key]:
                del self.count[key]
        self.ec[e1], self.ec[e2] = self.ec[e2], self.ec[e1]
        for e in (e1, e2):
            key = int(self.ev[e] * self.m + self.ec[e])
            self.count[key] = self.count.get(key, 0) + 1

    def duplicate_edges(self) -> list[int]:
        seen = set()
        dups = []
        for e, (v, c) in enumerate(zip(self.ev.tolist(), self.ec.tolist())):
            key = v * self.m + c
            if key in seen:
                dups.append(e)
            seen.add(key)
        return dups

    def kick(self, e: int, rng: np.random.Generator, tries: int = 200) -> bool:
        """Swap edge ``e`` with a random partner such that no multi-edge appears."""
        for _ in range(tries):
            e2 = int(rng.integers(self.ev.size))
            if self.can_swap(e, e2):
                self.swap(e, e2)
                return True
        return False


def _four_cycle_pairs(ev: np.ndarray, ec: np.ndarray, n: int, m: int) -> np.ndarray:
    h = sp.csr_matrix((np.ones(ev.size, dtype=np.int32), (ec, ev)), shape=(m, n))
    overlap = sp.triu(h.T @ h, k=1).tocoo()
    bad = overlap.data >= 2
    return np.stack([overlap.row[bad], overlap.col[bad]], axis=1)


def count_four_cycles(h: SparseMatrix) -> int:
    """Number of length-4 cycles in the Tanner graph of ``h``."""
    pairs = sp.csr_matrix((np.ones(h.nnz, dtype=np.int64), (h.row_idx, h.col_idx)), shape=h.shape)
    overlap = sp.triu(pairs.T @ pairs, k=1).tocoo()
    k = overlap.data
    return int((k * (k - 1) // 2).sum())


def sample_ldpc(ens: LdpcEnsembleSpec) -> SparseMatrix:
    """Draw a (dv, dc)-regular parity-check matrix by random socket permutation.

    Multi-edges are removed by edge swaps.  Four-cycles are then attacked by
    up to ``CYCLE_REPAIR_ROUNDS`` rounds of swaps; whatever remains is kept.
    """
    rng = stream(ens.seed, "ldpc", ens.n, ens.dv, ens.dc, ens.spec.order)
    n, m = ens.n, ens.rows
    ev = np.repeat(np.arange(n), ens.dv)
    ec = rng.permutation(np.repeat(np.arange(m), ens.dc))
    edges = _EdgeSet(ev, ec, m)

    for _ in range(50):
        dups = edges.duplicate_edges()
        if not dups:
            break
        for e in dups:
            edges.kick(e, rng)
    if edges.duplicate_edges():
        raise ValueError(f"could not realise a simple ({ens.dv},{ens.dc})-regular graph for n={n}")

    pairs = _four_cycle_pairs(edges.ev, edges.ec, n, m)
    for _ in range(CYCLE_REPAIR_ROUNDS):
        if not len(pairs):
            break
        for v1, v2 in pairs:
            shared = np.intersect1d(edges.ec[edges.ev == v1], edges.ec[edges.ev == v2])
            if shared.size < 2:
                continue
            cand = np.flatnonzero((edges.ev == v2) & (edges.ec == shared[0]))
            edges.kick(int(cand[0]), rng)
        pairs = _four_cycle_pairs(edges.ev, edges.ec, n, m)
    if len(pairs):
        log.debug("sample_ldpc(n=%d, seed=%d): kept %d variable pairs on 4-cycles", n, ens.seed, len(pairs))

    r = ens.spec.order
    vals = np.ones(ev.size, dtype=np.int64) if r == 2 else rng.integers(1, r, size=ev.size)
    return SparseMatrix(ens.spec, m, n, zip(edges.ec, edges.ev, vals))


def _random_rows(spec: FieldSpec, k: int, n: int, weight: int, rng: np.random.Generator) -> SparseMatrix:
    entries = []
    r = spec.order
    for row in range(k):
        cols = rng.choice(n, size=min(weight, n), replace=False)
        vals = np.ones(cols.size, dtype=np.int64) if r == 2 else rng.integers(1, r, size=cols.size)
        entries.extend((row, int(c), int(v)) for c, v in zip(cols, vals))
    return SparseMatrix(spec, k, n, entries)


def extend_to_sensory(H: SparseMatrix, rs: float, seed=0) -> CompressorPair:
    """Build G whose first H.rows rows are exactly H.

    When ``rs`` asks for more rows than H has, the remainder are fresh sparse
    rows with H's largest row weight.
    """
    ks = _rows_for(H.cols, rs)
    if ks < H.rows:
        raise ValueError(f"rs gives {ks} sensory rows < {H.rows} memory rows; swap roles")
    if ks == H.rows:
        return CompressorPair(H, H, Construction.LDPC_EXTENDED)
    rng = stream(seed, "sensory-extra", H.cols) if isinstance(seed, (int, np.integer)) else as_generator(seed)
    weight = int(H.row_weights().max()) if H.nnz else 1
    extra = _random_rows(H.spec, ks - H.rows, H.cols, weight, rng)
    return CompressorPair(H, H.vstack(extra), Construction.LDPC_EXTENDED)


def ldpc_pair(n: int, rm: float, rs: float, dv: int, dc: int, spec: FieldSpec, seed: int = 0) -> CompressorPair:
    """Sample an LDPC pair whose smaller matrix is the shared top block of the other."""
    ens = LdpcEnsembleSpec(n, dv, dc, spec, seed)
    small = _rows_for(n, min(rm, rs))
    if ens.rows != small:
        raise ValueError(f"({dv},{dc}) ensemble gives {ens.rows} rows but min(rm, rs) asks for {small}")
    core = sample_ldpc(ens)
    if rm <= rs:
        return extend_to_sensory(core, rs, seed)
    swapped = extend_to_sensory(core, rm, seed)
    return CompressorPair(swapped.G, swapped.H, Construction.LDPC_EXTENDED)


def compress(m: SparseMatrix, v: FieldVector) -> FieldVector:
    return mat_vec_mul(m, v)


# --- alist interchange -------------------------------------------------------


def format_alist(h: SparseMatrix) -> str:
    """``h`` in alist format.

    Over GF(2) this is the plain MacKay layout.  For r > 2 each index in the
    column/row lists is followed by its field value.
    """
    nonbinary = h.spec.order > 2
    cols = [[] for _ in range(h.cols)]
    rows = [[] for _ in range(h.rows)]
    for r_, c_, v_ in h.entries:
        cols[c_].append((r_ + 1, v_))
        rows[r_].append((c_ + 1, v_))
    for lst in cols:
        lst.sort()
    max_c = max((len(c) for c in cols), default=0)
    max_r = max((len(r) for r in rows), default=0)

    def fmt(lst, width):
        items = []
        for idx, val in lst:
            items.extend([idx, val] if nonbinary else [idx])
        pad = width - len(lst)
        items.extend([0, 0] * pad if nonbinary else [0] * pad)
        return " ".join(map(str, items))

    lines = [
        f"{h.cols} {h.rows}",
        f"{max_c} {max_r}",
        " ".join(str(len(c)) for c in cols),
        " ".join(str(len(r)) for r in rows),
        *(fmt(c, max_c) for c in cols),
        *(fmt(r, max_r) for r in rows),
    ]
    return "\n".join(lines) + "\n"


def write_alist(h: SparseMatrix, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_alist(h))


def read_alist(path, spec: FieldSpec = GF2) -> SparseMatrix:
    with open(path) as fh:
        tokens = [int(t) for t in fh.read().split()]
    it = iter(tokens)
    n, m = next(it), next(it)
    max_c, _max_r = next(it), next(it)
    col_w = [next(it) for _ in range(n)]
    for _ in range(m):
        next(it)
    nonbinary = spec.order > 2
    entries = []
    for c in range(n):
        for k in range(max_c):
            idx = next(it)
            val = next(it) if nonbinary else 1
            if k < col_w[c]:
                entries.append((idx - 1, c, val))
    # the row lists repeat the same information; they are not re-read
    return SparseMatrix(spec, m, n, entries)
