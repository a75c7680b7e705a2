"""Oracle suites runnable from the command line.

Each suite checks an implementation against an independent reference
(exhaustive tables, dense loops, brute-force sums) and returns a
``SuiteResult``.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from .compressors import LdpcEnsembleSpec, sample_ldpc
from .decoders import BpConfig, bp_syndrome_decode, ml_syndrome_decode
from .environment import GilbertElliottNoise, IidNoise
from .gf import FieldSpec, FieldVector, SparseMatrix, dense_mat_vec, mat_vec_mul
from .info import Pmf
from .rng import stream

FIELD_ORDERS = (2, 3, 5, 7, 11, 13)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<16} {self.detail}  ({self.seconds:.2f}s)"


def field_axioms(orders=FIELD_ORDERS) -> tuple[bool, str]:
    """Exhaustive check of the field axioms on every (a, b, c) triple."""
    for r in orders:
        f = FieldSpec(r)
        elems = range(r)
        add = np.array([[f.add(a, b) for b in elems] for a in elems])
        mul = np.array([[f.mul(a, b) for b in elems] for a in elems])
        if not (np.array_equal(add, add.T) and np.array_equal(mul, mul.T)):
            return False, f"GF({r}): not commutative"
        # associativity and distributivity over all triples, via table lookups
        a, b, c = np.meshgrid(elems, elems, elems, indexing="ij")
        if not np.array_equal(add[add[a, b], c], add[a, add[b, c]]):
            return False, f"GF({r}): addition not associative"
        if not np.array_equal(mul[mul[a, b], c], mul[a, mul[b, c]]):
            return False, f"GF({r}): multiplication not associative"
        if not np.array_equal(mul[a, add[b, c]], add[mul[a, b], mul[a, c]]):
            return False, f"GF({r}): not distributive"
        if not (np.array_equal(add[0], np.arange(r)) and np.array_equal(mul[1], np.arange(r))):
            return False, f"GF({r}): identities"
        for x in elems:
            if f.add(x, f.neg(x)) != 0 or f.sub(x, x) != 0:
                return False, f"GF({r}): additive inverse of {x}"
            if x and f.mul(x, f.inv(x)) != 1:
                return False, f"GF({r}): multiplicative inverse of {x}"
    return True, f"orders {list(orders)}"


def sparse_vs_dense(instances: int = 1000, seed: int = 0) -> tuple[bool, str]:
    """Sparse products against a plain dense loop on random shapes and fields."""
    for t in range(instances):
        rng = stream(seed, "selftest-sparse", t)
        r = int(rng.choice(FIELD_ORDERS))
        spec = FieldSpec(r)
        rows, cols = (int(v) for v in rng.integers(1, 40, size=2))
        density = rng.uniform(0.05, 0.6)
        dense = rng.integers(1, r, size=(rows, cols)) * (rng.random((rows, cols)) < density)
        v = rng.integers(0, r, size=cols)
        got = mat_vec_mul(SparseMatrix.from_dense(spec, dense), FieldVector(spec, v))
        want = dense_mat_vec(dense.tolist(), v.tolist(), r)
        if got.elems.tolist() != want:
            return False, f"instance {t}: GF({r}) {rows}x{cols} mismatch"
    return True, f"{instances} instances"


GE_PARAMETER_SETS = (
    (0.1, 0.3, 0.01, 0.3),
    (0.05, 0.5, 0.0, 0.5),
    (0.4, 0.2, 0.2, 0.05),
)


def ge_brute_force(noise: GilbertElliottNoise, seqs) -> np.ndarray:
    """log2 P(z) as an explicit sum over every hidden state path, one per row of ``seqs``."""
    seqs = np.atleast_2d(np.asarray(seqs, dtype=np.int64))
    n = seqs.shape[1]
    paths = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64)  # (P, n)
    emit = np.stack([noise.q_good.probs, noise.q_bad.probs])
    path_prior = noise.stationary[paths[:, 0]] * noise.transition[paths[:, :-1], paths[:, 1:]].prod(axis=1)
    total = np.empty(seqs.shape[0])
    for lo in range(0, seqs.shape[0], 64):
        block = seqs[lo : lo + 64]
        lik = emit[paths[None, :, :], block[:, None, :]].prod(axis=2)  # (b, P)
        total[lo : lo + 64] = lik @ path_prior
    with np.errstate(divide="ignore"):
        return np.log2(total)


def ge_forward(max_len: int = 10, tol: float = 1e-10) -> tuple[bool, str]:
    """Forward recursion against the path sum for every binary sequence up to ``max_len``."""
    checked = 0
    for params in GE_PARAMETER_SETS:
        noise = GilbertElliottNoise(params[0], params[1], Pmf.bernoulli(params[2]), Pmf.bernoulli(params[3]))
        for n in range(1, max_len + 1):
            seqs = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.uint8)
            fwd = noise.log_likelihood(seqs)
            want = ge_brute_force(noise, seqs)
            same = (fwd == want) | (np.abs(fwd - want) <= tol)
            if not same.all():
                k = int(np.flatnonzero(~same)[0])
                return False, f"params {params}, z={seqs[k].tolist()}: {fwd[k]} vs {want[k]}"
            checked += len(seqs)
    # equal state pmfs collapse the chain to iid noise
    q = Pmf.bernoulli(0.11)
    degenerate = GilbertElliottNoise(0.2, 0.3, q, q)
    seqs = np.array(list(itertools.product((0, 1), repeat=8)), dtype=np.uint8)
    if not np.allclose(degenerate.log_likelihood(seqs), IidNoise(q).log_likelihood(seqs), rtol=0, atol=1e-12):
        return False, "degenerate chain differs from iid"
    return True, f"{checked} sequences"


def bp_vs_ml(count: int = 200, seed: int = 0, q: float = 0.05) -> tuple[bool, str, dict]:
    """BP against exhaustive ML on short (3,6)-regular codes.

    Syndromes come from weight-one noise so that the ML optimum is usually
    unique; instances whose optimum is tied are skipped.
    """
    spec = FieldSpec(2)
    noise = IidNoise(Pmf.bernoulli(q))
    matched = consistent = returned = unique = 0
    t = 0
    while unique < count:
        rng = stream(seed, "selftest-bp-ml", t)
        h = sample_ldpc(LdpcEnsembleSpec(16, 3, 6, spec, seed=int(rng.integers(2**31))))
        z = np.zeros(16, dtype=np.uint8)
        z[int(rng.integers(16))] = 1
        synd = mat_vec_mul(h, FieldVector(spec, z))
        t += 1
        ml = ml_syndrome_decode(h, synd, noise)
        if ml.failed or ml.ambiguous:
            continue
        unique += 1
        bp = bp_syndrome_decode(h, synd, noise.pmf, BpConfig(max_iterations=50))
        if bp.estimate is not None:
            returned += 1
            consistent += mat_vec_mul(h, bp.estimate) == synd
            matched += bp.estimate == ml.estimate
    stats = {"unique": unique, "matched": matched, "returned": returned, "consistent": consistent}
    ok = matched >= 0.95 * unique and consistent == returned
    return ok, f"{matched}/{unique} match ML, {consistent}/{returned} consistent", stats


def wilson_coverage(p: float = 0.1, trials: int = 200, reps: int = 2000, seed: int = 0) -> tuple[bool, str]:
    """Empirical coverage of the 95% Wilson interval on a synthetic Bernoulli stream."""
    from .harness import wilson_interval

    rng = stream(seed, "selftest-wilson")
    errors = rng.binomial(trials, p, size=reps)
    hits = 0
    for e in errors:
        lo, hi = wilson_interval(int(e), trials)
        hits += lo <= p <= hi
    cover = hits / reps
    return 0.93 <= cover <= 0.97, f"coverage {cover:.3f} at p={p}"


def uniformization(orders=(2, 3), samples: int = 100_000, q: float = 0.11, seed: int = 0) -> tuple[bool, str]:
    """x_i - x_j + z for independent uniform patterns is uniform whatever the noise."""
    worst = 0.0
    for r in orders:
        spec = FieldSpec(r)
        rng = stream(seed, "selftest-uniform", r)
        u = Pmf.uniform(spec)
        xi, xj = u.sample(rng, samples).astype(np.int64), u.sample(rng, samples).astype(np.int64)
        z = Pmf.symmetric(spec, q).sample(rng, samples).astype(np.int64)
        emp = np.bincount((xi - xj + z) % r, minlength=r) / samples
        worst = max(worst, 0.5 * float(np.abs(emp - 1.0 / r).sum()))
    return worst < 0.01, f"max total variation {worst:.4f}"


SUITES = {
    "field": field_axioms,
    "sparse": sparse_vs_dense,
    "ge-forward": ge_forward,
    "bp-vs-ml": lambda: bp_vs_ml()[:2],
    "wilson": wilson_coverage,
    "uniformization": uniformization,
}


def run_suites(names=None) -> list[SuiteResult]:
    out = []
    for name in names or SUITES:
        start = time.perf_counter()
        passed, detail = SUITES[name]()
        out.append(SuiteResult(name, bool(passed), detail, time.perf_counter() - start))
    return out
