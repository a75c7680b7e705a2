"""The recognition environment: pattern databases, test draws and additive noise models."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .gf import FieldSpec, FieldVector, ShapeError
from .info import Pmf, entropy, seq_log_prob
from .rng import as_generator, stream


class ResourceError(RuntimeError):
    """A request would materialise more data than the configured budget allows."""


DEFAULT_MC_CAP = 2**22
DEFAULT_SYMBOL_BUDGET = 2**28


# --- noise models ----------------------------------------------------------


@dataclass(frozen=True)
class IidNoise:
    """Each noise symbol drawn independently from ``pmf``."""

    pmf: Pmf

    @property
    def spec(self) -> FieldSpec:
        return self.pmf.spec

    def sample(self, n: int, rng, size: int | None = None) -> np.ndarray:
        shape = (n,) if size is None else (size, n)
        return self.pmf.sample(as_generator(rng), shape)

    def log_likelihood(self, z) -> float | np.ndarray:
        return seq_log_prob(z, self.pmf)

    def entropy_rate(self) -> float:
        return entropy(self.pmf)

    def entropy_rate_estimate(self) -> tuple[float, float]:
        return entropy(self.pmf), 0.0

    def marginal_pmf(self) -> Pmf:
        return self.pmf

    def describe(self) -> str:
        return "iid:" + ";".join(f"{p:.6g}" for p in self.pmf.probs)


@dataclass(frozen=True)
class GilbertElliottNoise:
    """Two-state hidden Markov noise.

    ``p_gb`` is P(good -> bad) and ``p_bg`` is P(bad -> good).  The chain
    starts in its stationary distribution; in each state the noise symbol
    is drawn from that state's pmf.
    """

    p_gb: float
    p_bg: float
    q_good: Pmf
    q_bad: Pmf
    mc_sequences: int = 500
    mc_length: int = 5000
    mc_seed: int = 0

    def __post_init__(self):
        for name in ("p_gb", "p_bg"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.q_good.spec != self.q_bad.spec:
            raise ShapeError("state pmfs live over different fields")

    @property
    def spec(self) -> FieldSpec:
        return self.q_good.spec

    @property
    def transition(self) -> np.ndarray:
        return np.array([[1 - self.p_gb, self.p_gb], [self.p_bg, 1 - self.p_bg]])

    @property
    def stationary(self) -> np.ndarray:
        s = self.p_gb + self.p_bg
        return np.array([self.p_bg / s, self.p_gb / s])

    def marginal_pmf(self) -> Pmf:
        pi = self.stationary
        return Pmf(self.spec, pi[0] * self.q_good.probs + pi[1] * self.q_bad.probs)

    def sample_states(self, n: int, rng, size: int = 1) -> np.ndarray:
        rng = as_generator(rng)
        u = rng.random((size, n))
        states = np.empty((size, n), dtype=np.uint8)
        states[:, 0] = u[:, 0] < self.stationary[1]
        for t in range(1, n):
            prev = states[:, t - 1]
            flip = np.where(prev == 0, self.p_gb, self.p_bg)
            states[:, t] = np.where(u[:, t] < flip, 1 - prev, prev)
        return states

    def sample(self, n: int, rng, size: int | None = None) -> np.ndarray:
        rng = as_generator(rng)
        b = 1 if size is None else size
        states = self.sample_states(n, rng, b)
        good = self.q_good.sample(rng, (b, n))
        bad = self.q_bad.sample(rng, (b, n))
        z = np.where(states == 1, bad, good).astype(self.spec.dtype)
        return z[0] if size is None else z

    def log_likelihood(self, z) -> float | np.ndarray:
        """Exact log2 P(z) by the scaled forward recursion over the hidden states."""
        elems = z.elems if isinstance(z, FieldVector) else np.asarray(z)
        single = elems.ndim == 1
        seqs = np.atleast_2d(elems)
        emit = np.stack([self.q_good.probs, self.q_bad.probs])  # (2, r)
        trans = self.transition
        alpha = self.stationary[None, :] * emit[:, seqs[:, 0]].T
        total = np.zeros(seqs.shape[0])
        with np.errstate(divide="ignore", invalid="ignore"):
            for t in range(seqs.shape[1]):
                if t:
                    alpha = (alpha @ trans) * emit[:, seqs[:, t]].T
                scale = alpha.sum(axis=1)
                total += np.log2(scale)
                alpha = alpha / np.where(scale > 0, scale, 1.0)[:, None]
        return float(total[0]) if single else total

    @cached_property
    def _rate(self) -> tuple[float, float]:
        rng = stream(self.mc_seed, "ge-entropy-rate")
        z = self.sample(self.mc_length, rng, size=self.mc_sequences)
        per = -self.log_likelihood(z) / self.mc_length
        return float(per.mean()), float(per.std(ddof=1) / math.sqrt(per.size))

    def entropy_rate(self) -> float:
        return self._rate[0]

    def entropy_rate_estimate(self) -> tuple[float, float]:
        """Monte Carlo estimate of the entropy rate and its standard error."""
        return self._rate

    def describe(self) -> str:
        return f"ge:{self.p_gb:.6g};{self.p_bg:.6g};" + ",".join(
            f"{p:.6g}" for p in np.concatenate([self.q_good.probs, self.q_bad.probs])
        )


NoiseModel = IidNoise | GilbertElliottNoise


def noise_log_likelihood(z: FieldVector, noise: NoiseModel) -> float:
    return noise.log_likelihood(z)


def entropy_rate(noise: NoiseModel) -> float:
    return noise.entropy_rate()


# --- environment, database, test instance ----------------------------------


@dataclass(frozen=True)
class Environment:
    """Pattern field, length, rate, pattern distribution and noise.

    ``mc`` overrides the pattern count derived from ``rc``.  With
    ``clamp=True`` a count above ``mc_cap`` is reduced to the cap (and the
    realised rate drops accordingly); otherwise it raises ResourceError.
    """

    spec: FieldSpec
    n: int
    rc: float
    qx: Pmf
    noise: NoiseModel
    mc: int | None = None
    mc_cap: int = DEFAULT_MC_CAP
    clamp: bool = False
    symbol_budget: int = DEFAULT_SYMBOL_BUDGET

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("pattern length n must be >= 1")
        if self.mc is None and not self.rc > 0:
            raise ValueError("pattern rate rc must be positive")
        if self.qx.spec != self.spec or self.noise.spec != self.spec:
            raise ShapeError("pattern/noise distributions must live over the environment field")
        if self.mc is not None and self.mc < 1:
            raise ValueError(f"mc must be >= 1, got {self.mc}")
        if self.mc is None and self.num_patterns < 2:
            raise ValueError(f"need at least 2 patterns, n*rc gives {self.num_patterns}")

    @property
    def requested_mc(self) -> int:
        if self.mc is not None:
            return int(self.mc)
        exponent = self.n * self.rc
        if exponent > 62:
            return 2**63
        return round(2.0**exponent)

    @property
    def num_patterns(self) -> int:
        m = self.requested_mc
        if m > self.mc_cap:
            if not self.clamp:
                raise ResourceError(f"M_c = {m} exceeds the cap of {self.mc_cap} patterns")
            m = self.mc_cap
        return m

    @property
    def rc_realized(self) -> float:
        return math.log2(self.num_patterns) / self.n

    def generate_database(self, seed) -> PatternDatabase:
        return generate_database(self, seed)


class PatternDatabase:
    """The stored patterns, one per row of ``symbols``."""

    def __init__(self, spec: FieldSpec, symbols: np.ndarray, seed=None, packed: np.ndarray | None = None):
        symbols = np.asarray(symbols, dtype=spec.dtype)
        if symbols.ndim != 2:
            raise ShapeError("database symbols must be a 2-d array")
        symbols.setflags(write=False)
        self.spec = spec
        self.symbols = symbols
        self.seed = seed
        # GF(2) only: row-aligned little-endian bytes the symbols were unpacked from
        self.packed = packed

    def __len__(self):
        return self.symbols.shape[0]

    @property
    def n(self) -> int:
        return self.symbols.shape[1]

    def pattern(self, i: int) -> FieldVector:
        return FieldVector(self.spec, self.symbols[i])

    def prefix(self, m: int) -> PatternDatabase:
        packed = None if self.packed is None else self.packed[:m]
        return PatternDatabase(self.spec, self.symbols[:m], self.seed, packed)

    def __eq__(self, other):
        if not isinstance(other, PatternDatabase):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.symbols, other.symbols)

    _MAGIC = b"LRDB"
    _HEADER = struct.Struct("<4sIIQQ")

    def save(self, path) -> None:
        """Flat binary: magic, r, n, M_c, seed (little-endian), then row-major bytes."""
        if self.spec.order > 256:
            raise ValueError("one byte per symbol needs r <= 256")
        seed = self.seed if isinstance(self.seed, int) else 0
        with open(path, "wb") as fh:
            fh.write(self._HEADER.pack(self._MAGIC, self.spec.order, self.n, len(self), seed))
            fh.write(np.ascontiguousarray(self.symbols, dtype=np.uint8).tobytes())

    @classmethod
    def load(cls, path) -> PatternDatabase:
        raw = Path(path).read_bytes()
        magic, r, n, mc, seed = cls._HEADER.unpack_from(raw)
        if magic != cls._MAGIC:
            raise ValueError(f"{path}: not a pattern database file")
        body = np.frombuffer(raw, dtype=np.uint8, offset=cls._HEADER.size)
        if body.size != n * mc:
            raise ValueError(f"{path}: expected {n * mc} symbols, found {body.size}")
        return cls(FieldSpec(r), body.reshape(mc, n), seed)


def generate_database(env: Environment, seed) -> PatternDatabase:
    mc = env.num_patterns
    if mc * env.n > env.symbol_budget:
        raise ResourceError(f"M_c = {mc} patterns of length {env.n} exceed the symbol budget {env.symbol_budget}")
    rng = stream(seed, "database") if isinstance(seed, (int, np.integer)) else as_generator(seed)
    provenance = seed if isinstance(seed, (int, np.integer)) else None
    if env.spec.order == 2 and env.qx.is_uniform():
        nbytes = -(-env.n // 8)
        raw = np.frombuffer(rng.bytes(mc * nbytes), dtype=np.uint8).reshape(mc, nbytes)
        bits = np.unpackbits(raw.reshape(-1), bitorder="little").reshape(mc, nbytes * 8)
        return PatternDatabase(env.spec, bits[:, : env.n], provenance, packed=raw)
    symbols = env.qx.sample(rng, (mc, env.n))
    return PatternDatabase(env.spec, symbols, provenance)


@dataclass(frozen=True)
class TestInstance:
    j: int
    z: FieldVector
    y: FieldVector = field(repr=False)


TestInstance.__test__ = False  # keep pytest from collecting it


def draw_test(db: PatternDatabase, noise: NoiseModel, seed) -> TestInstance:
    """Draw a uniform index j (0-based), noise z, and the observation y = x_j + z."""
    if len(db) == 0:
        raise ValueError("empty database")
    rng = stream(seed, "test") if isinstance(seed, (int, np.integer)) else as_generator(seed)
    j = int(rng.integers(len(db)))
    z = FieldVector(db.spec, noise.sample(db.n, rng))
    y = db.pattern(j) + z
    return TestInstance(j, z, y)
