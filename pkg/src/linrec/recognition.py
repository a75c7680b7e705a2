"""Recognition: per-index noise estimation followed by a maximum-likelihood index pick.

Indices are 0-based throughout.  A failed noise estimate scores -inf, so an
index whose estimate failed can never be selected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from .compressors import CompressorPair, Construction
from .decoders import TIE_TOL, BpConfig, bp_decode_batch, ml_syndrome_decode
from .environment import IidNoise, PatternDatabase, TestInstance
from .gf import FieldVector, ShapeError, SparseMatrix, mat_vec_mul, pack_bits, sub_rows
from .info import (
    Pmf,
    TypicalityParams,
    joint_typicality_mask,
    log_prob_from_counts,
    noise_typicality_mask,
)


class Strategy(str, Enum):
    TRUNCATION = "truncation"
    SYNDROME = "syndrome"


class ErrorEvent(str, Enum):
    NONE = "none"
    MISSED_TYPICALITY = "missed-typicality"
    FALSE_ACCEPT = "false-accept"
    TIE = "tie"


@dataclass(frozen=True)
class RecognitionSystem:
    """Compressor pair plus the recognition algorithm that uses it.

    ``decoder`` selects the syndrome decoder: ``"bp"`` or ``"oracle"``
    (exhaustive ML, small n only).  ``qx`` is needed by the joint
    typicality test of the truncation strategy.
    """

    pair: CompressorPair
    strategy: Strategy
    noise: object
    qx: Pmf | None = None
    typicality: TypicalityParams = field(default_factory=TypicalityParams)
    decoder: str = "bp"
    bp: BpConfig = field(default_factory=BpConfig)

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        tag = self.pair.construction
        if self.strategy is Strategy.TRUNCATION:
            if tag is not Construction.TRUNCATION:
                raise ValueError(f"truncation recognition needs a truncation pair, got {tag.value}")
            if self.qx is None:
                raise ValueError("truncation recognition needs the pattern pmf qx")
        else:
            if tag is Construction.TRUNCATION:
                raise ValueError("syndrome recognition needs an LDPC or explicit pair")
            k = self.pair.n_min
            if self.pair.H.top_rows(k) != self.pair.G.top_rows(k):
                raise ValueError("G and H must share their first min(rows) rows")
            if self.decoder not in ("bp", "oracle"):
                raise ValueError(f"unknown decoder {self.decoder!r}")

    @cached_property
    def shared_block(self) -> SparseMatrix:
        return self.pair.H.top_rows(self.pair.n_min)

    def sense(self, y: FieldVector) -> FieldVector:
        return mat_vec_mul(self.pair.G, y)


@dataclass(frozen=True)
class CompressedMemory:
    entries: np.ndarray  # (M_c, H.rows)
    packed_source: np.ndarray | None = field(default=None, repr=False, compare=False)

    def packed_prefix(self, k: int) -> np.ndarray:
        """First k symbols of every GF(2) entry packed into uint64 words (cached per k)."""
        cache = self.__dict__.setdefault("_packed", {})
        if k not in cache:
            if self.packed_source is not None:
                cache[k] = _words_from_bytes(self.packed_source, k)
            else:
                cache[k] = pack_bits(self.entries[:, :k])
        return cache[k]

    def __len__(self):
        return self.entries.shape[0]

    def __getitem__(self, i) -> np.ndarray:
        return self.entries[i]


def _words_from_bytes(raw: np.ndarray, k: int) -> np.ndarray:
    nb = -(-k // 8)
    words = max(1, -(-nb // 8))
    buf = np.zeros((raw.shape[0], words * 8), dtype=np.uint8)
    buf[:, :nb] = raw[:, :nb]
    if k % 8:
        buf[:, nb - 1] &= np.uint8((1 << (k % 8)) - 1)
    return buf.view("<u8")


@dataclass(frozen=True)
class Verdict:
    """Outcome of one recognition.

    ``j_hat`` is None when every index failed (reject-all).  ``scores`` holds
    log2 P_z of each noise estimate, -inf for failures.
    """

    j_hat: int | None
    scores: np.ndarray
    tied: tuple[int, ...] = ()

    @property
    def failed(self) -> np.ndarray:
        return ~np.isfinite(self.scores)

    @property
    def tie(self) -> bool:
        return len(self.tied) > 1

    @property
    def accepted(self) -> int:
        return int(np.isfinite(self.scores).sum())


def build_memory(system: RecognitionSystem, db: PatternDatabase) -> CompressedMemory:
    h = system.pair.H
    if db.n != h.cols:
        raise ShapeError(f"patterns have length {db.n}, H has {h.cols} columns")
    if system.pair.construction is Construction.TRUNCATION:
        entries = db.symbols[:, : h.rows]  # [I 0] x is a prefix; a read-only view
        return CompressedMemory(entries, db.packed)
    entries = h.apply(db.symbols)
    entries.setflags(write=False)
    return CompressedMemory(entries)


# --- per-index noise estimation ---------------------------------------------


def _truncation_estimates(system: RecognitionSystem, s: np.ndarray, sigma: np.ndarray):
    k = system.pair.n_min
    r = system.pair.spec.order
    s_k = np.atleast_2d(s)[:, :k]
    sig_k = sigma[:k]
    zhat = sub_rows(sig_k, s_k, r)
    if system.typicality.strict:
        qz = system.noise.marginal_pmf()
        ok = joint_typicality_mask(s_k, sig_k, system.qx, qz, system.typicality.epsilon)
    else:
        ok = np.ones(s_k.shape[0], dtype=bool)
    return zhat, ok


def estimate_noise_truncation(s_i, sigma: FieldVector, system: RecognitionSystem) -> FieldVector | None:
    """sigma - s_i on the first n_min symbols, zero padded to n; None on rejection."""
    s = s_i.elems if isinstance(s_i, FieldVector) else np.asarray(s_i)
    zhat, ok = _truncation_estimates(system, s, sigma.elems)
    if not ok[0]:
        return None
    full = np.zeros(system.pair.n, dtype=system.pair.spec.dtype)
    full[: zhat.shape[1]] = zhat[0]
    return FieldVector(system.pair.spec, full)


def hypothesis_syndromes(system: RecognitionSystem, s: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """t_i = sigma[:k] - s_i[:k] over the shared block; equals H(x_j - x_i + z)."""
    k = system.pair.n_min
    r = system.pair.spec.order
    return sub_rows(sigma[:k], np.atleast_2d(s)[:, :k], r)


def _syndrome_estimates(system: RecognitionSystem, s: np.ndarray, sigma: np.ndarray):
    t = hypothesis_syndromes(system, s, sigma)
    h = system.shared_block
    if system.decoder == "oracle":
        est = np.zeros((t.shape[0], h.cols), dtype=np.int64)
        ok = np.zeros(t.shape[0], dtype=bool)
        for b, row in enumerate(t):
            res = ml_syndrome_decode(h, FieldVector(h.spec, row), system.noise)
            if not res.failed:
                est[b] = res.estimate.elems
                ok[b] = True
    else:
        est, ok, _ = bp_decode_batch(h, t, system.noise.marginal_pmf(), system.bp)
    if system.typicality.strict and ok.any():
        ok[ok] = noise_typicality_mask(est[ok], system.noise, system.typicality.epsilon)
    return est, ok


def estimate_noise_syndrome(s_i, sigma: FieldVector, system: RecognitionSystem) -> FieldVector | None:
    """Decode the hypothesis syndrome; None on decoder failure or typicality rejection."""
    s = s_i.elems if isinstance(s_i, FieldVector) else np.asarray(s_i)
    est, ok = _syndrome_estimates(system, s, sigma.elems)
    if not ok[0]:
        return None
    return FieldVector(system.pair.spec, est[0])


# --- index estimation ------------------------------------------------------------


def score_all(system: RecognitionSystem, memory: CompressedMemory, sigma: FieldVector) -> np.ndarray:
    """log2 P_z of every index's noise estimate; -inf where estimation failed."""
    if system.strategy is Strategy.TRUNCATION:
        if system.pair.spec.order == 2 and not system.typicality.strict and isinstance(system.noise, IidNoise):
            return _binary_truncation_scores(system, memory, sigma)
        est, ok = _truncation_estimates(system, memory.entries, sigma.elems)
    else:
        est, ok = _syndrome_estimates(system, memory.entries, sigma.elems)
    if ok.all():
        return np.asarray(system.noise.log_likelihood(est), dtype=float).reshape(-1)
    scores = np.full(len(memory), -np.inf)
    if ok.any():
        scores[ok] = system.noise.log_likelihood(est[ok])
    return scores


def _binary_truncation_scores(system: RecognitionSystem, memory: CompressedMemory, sigma: FieldVector) -> np.ndarray:
    # packed-word path: Hamming weight of sigma - s_i on the first n_min bits
    k = system.pair.n_min
    words = memory.packed_prefix(k)
    sig = pack_bits(sigma.elems[:k])[0]
    ones = np.bitwise_count(words ^ sig).sum(axis=1, dtype=np.int64)
    return log_prob_from_counts([k - ones, ones], system.noise.pmf)


def pick(scores: np.ndarray) -> Verdict:
    """Argmax with ties detected within a relative 1e-9; lowest index wins a tie."""
    finite = np.isfinite(scores)
    if not finite.any():
        return Verdict(None, scores)
    best = scores[finite].max()
    tied = np.flatnonzero(scores >= best - TIE_TOL * max(1.0, abs(best)))
    return Verdict(int(tied[0]), scores, tuple(int(i) for i in tied))


def recognize(system: RecognitionSystem, memory: CompressedMemory, sigma: FieldVector) -> Verdict:
    return pick(score_all(system, memory, sigma))


def classify_error(verdict: Verdict, instance: TestInstance) -> ErrorEvent:
    j = instance.j
    if verdict.j_hat == j and not verdict.tie:
        return ErrorEvent.NONE
    if verdict.failed[j]:
        return ErrorEvent.MISSED_TYPICALITY
    if verdict.tie and j in verdict.tied:
        return ErrorEvent.TIE
    return ErrorEvent.FALSE_ACCEPT
