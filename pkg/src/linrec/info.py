"""Distributions over GF(r), entropies, sequence likelihoods and typicality tests.

All logarithms are base 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .gf import FieldSpec, FieldVector, ShapeError, sub_rows


class Pmf:
    """Probability mass function over the symbols of GF(r)."""

    __slots__ = ("_probs", "spec")

    def __init__(self, spec: FieldSpec, probs):
        p = np.asarray(probs, dtype=float)
        if p.shape != (spec.order,):
            raise ShapeError(f"need {spec.order} probabilities, got shape {p.shape}")
        if (p < 0).any() or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"not a probability vector: {p}")
        p = p.copy()
        p.setflags(write=False)
        self.spec = spec
        self._probs = p

    @classmethod
    def uniform(cls, spec: FieldSpec) -> Pmf:
        return cls(spec, np.full(spec.order, 1.0 / spec.order))

    @classmethod
    def point(cls, spec: FieldSpec, k: int = 0) -> Pmf:
        p = np.zeros(spec.order)
        p[k] = 1.0
        return cls(spec, p)

    @classmethod
    def bernoulli(cls, q: float) -> Pmf:
        from .gf import GF2

        return cls(GF2, [1.0 - q, q])

    @classmethod
    def symmetric(cls, spec: FieldSpec, q: float) -> Pmf:
        """Mass 1-q on zero, q spread evenly over the nonzero symbols."""
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"q must lie in [0, 1], got {q}")
        p = np.full(spec.order, q / (spec.order - 1))
        p[0] = 1.0 - q
        return cls(spec, p)

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    def __getitem__(self, k):
        return float(self._probs[k])

    def __eq__(self, other):
        if not isinstance(other, Pmf):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self._probs, other._probs)

    def __hash__(self):
        return hash((self.spec.order, self._probs.tobytes()))

    def __repr__(self):
        return f"Pmf(GF({self.spec.order}), {np.array2string(self._probs, precision=4)})"

    @property
    def log2(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log2(self._probs)

    def is_uniform(self) -> bool:
        return bool(np.allclose(self._probs, 1.0 / self.spec.order, rtol=0, atol=1e-15))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draw i.i.d. symbols; uniform GF(2) takes a packed-bytes fast path."""
        r = self.spec.order
        size = tuple(np.atleast_1d(size))
        total = int(np.prod(size))
        if self.is_uniform():
            if r == 2:
                raw = np.frombuffer(rng.bytes(-(-total // 8)), dtype=np.uint8)
                return np.unpackbits(raw, bitorder="little")[:total].reshape(size)
            return rng.integers(0, r, size=size, dtype=np.uint8 if r <= 256 else np.int64)
        cdf = np.cumsum(self._probs)
        cdf[-1] = 1.0
        # avoid landing on zero-probability symbols at cdf plateaus
        out = np.searchsorted(cdf, rng.random(size), side="right")
        return np.minimum(out, r - 1).astype(self.spec.dtype)


def entropy(p: Pmf) -> float:
    probs = p.probs[p.probs > 0]
    return float(-(probs * np.log2(probs)).sum())


def binary_entropy(q: float) -> float:
    if q <= 0.0 or q >= 1.0:
        return 0.0
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


def convolve(px: Pmf, pz: Pmf) -> Pmf:
    """Output distribution of X + Z over GF(r) for independent X ~ px, Z ~ pz."""
    if px.spec != pz.spec:
        raise ShapeError("pmfs live over different fields")
    r = px.spec.order
    out = np.zeros(r)
    for a in range(r):
        out += px.probs[a] * np.roll(pz.probs, a)
    return Pmf(px.spec, out / out.sum())


def seq_log_prob(v: FieldVector | np.ndarray, p: Pmf) -> float | np.ndarray:
    """Sum of per-symbol log2 probabilities; -inf if any symbol is impossible.

    Accepts a single vector or a 2-d array of sequences (one per row).
    """
    elems = v.elems if isinstance(v, FieldVector) else np.asarray(v)
    n = elems.shape[-1]
    # summing count_a * log p_a makes equal-type sequences score bit-identically
    if p.spec.order == 2:
        ones = elems.sum(axis=-1, dtype=np.int64)
        counts = [n - ones, ones]
    else:
        counts = [(elems == a).sum(axis=-1, dtype=np.int64) for a in range(p.spec.order)]
    return log_prob_from_counts(counts, p)


def log_prob_from_counts(counts, p: Pmf) -> float | np.ndarray:
    """sum_a counts[a] * log2 p_a, with 0 * log 0 taken as 0."""
    out = np.zeros(np.shape(counts[0]))
    logs = p.log2
    if np.isfinite(logs).all():
        # same sums as below: a zero count adds +-0.0 either way
        for count, la in zip(counts, logs):
            out = out + count * la
        return float(out) if np.ndim(out) == 0 else out
    with np.errstate(invalid="ignore"):
        for count, la in zip(counts, p.log2):
            out = out + np.where(count > 0, count * la, 0.0)
    return float(out) if np.ndim(out) == 0 else out


class TypicalityMode(str, Enum):
    STRICT = "strict"
    SCORE = "score"


@dataclass(frozen=True)
class TypicalityParams:
    epsilon: float = 0.1
    mode: TypicalityMode = TypicalityMode.STRICT

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        object.__setattr__(self, "mode", TypicalityMode(self.mode))

    @property
    def strict(self) -> bool:
        return self.mode is TypicalityMode.STRICT


def joint_typicality_mask(x: np.ndarray, y: np.ndarray, qx: Pmf, qz: Pmf, epsilon: float) -> np.ndarray:
    """Vectorised joint-typicality test over the last axis.

    ``x`` may be a batch (B, n) against a single ``y`` of length n.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    n = x.shape[-1]
    if y.shape[-1] != n:
        raise ShapeError(f"length mismatch: {n} vs {y.shape[-1]}")
    if n == 0:
        raise ShapeError("typicality needs at least one symbol")
    qy = convolve(qx, qz)
    hx, hy, hz = entropy(qx), entropy(qy), entropy(qz)
    diff = sub_rows(y, x, qx.spec.order)
    with np.errstate(invalid="ignore"):
        lx = -seq_log_prob(x, qx) / n
        ly = -seq_log_prob(y, qy) / n
        lxy = lx - seq_log_prob(diff, qz) / n
        ok = (np.abs(lx - hx) < epsilon) & (np.abs(ly - hy) < epsilon) & (np.abs(lxy - hx - hz) < epsilon)
    return ok


def in_joint_typical_set(x: FieldVector, y: FieldVector, qx: Pmf, qz: Pmf, params: TypicalityParams) -> bool:
    """Membership of (x, y) in the jointly typical set with y = x + z, z ~ qz."""
    if len(x) != len(y):
        raise ShapeError(f"length mismatch: {len(x)} vs {len(y)}")
    return bool(joint_typicality_mask(x.elems, y.elems, qx, qz, params.epsilon))


def noise_typicality_mask(z: np.ndarray, noise, epsilon: float) -> np.ndarray:
    z = np.asarray(z)
    n = z.shape[-1]
    if n == 0:
        raise ShapeError("typicality needs at least one symbol")
    rate = noise.entropy_rate()
    with np.errstate(invalid="ignore"):
        return np.abs(-noise.log_likelihood(z) / n - rate) < epsilon


def in_noise_typical_set(z: FieldVector, noise, params: TypicalityParams) -> bool:
    """|-(1/n) log2 P(z) - R_z| < epsilon under the noise model's exact likelihood."""
    return bool(noise_typicality_mask(z.elems, noise, params.epsilon))
