import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linrec.compressors import (
    CompressorPair,
    Construction,
    LdpcEnsembleSpec,
    compress,
    count_four_cycles,
    extend_to_sensory,
    ldpc_pair,
    read_alist,
    sample_ldpc,
    truncation_pair,
    write_alist,
)
from linrec.gf import GF2, FieldSpec, FieldVector, SparseMatrix, gf2_rank


def brute_four_cycles(dense):
    # pairs of rows sharing k >= 2 columns contribute C(k, 2) cycles
    dense = np.asarray(dense) != 0
    total = 0
    for a, b in itertools.combinations(range(dense.shape[0]), 2):
        k = int((dense[a] & dense[b]).sum())
        total += k * (k - 1) // 2
    return total


# --- truncation ------------------------------------------------------------------


def test_truncation_keeps_prefix():
    pair = truncation_pair(10, 0.5, 0.7, GF2)
    x = FieldVector(GF2, np.random.default_rng(0).integers(0, 2, 10))
    assert compress(pair.H, x) == x[:5]
    assert compress(pair.G, x) == x[:7]
    assert pair.n_min == 5
    assert pair.construction is Construction.TRUNCATION


def test_full_rate_truncation_is_identity():
    spec = FieldSpec(3)
    pair = truncation_pair(9, 1.0, 1.0, spec)
    x = FieldVector(spec, np.random.default_rng(1).integers(0, 3, 9))
    assert compress(pair.H, x) == x and compress(pair.G, x) == x


def test_truncation_prefix_identities():
    spec = FieldSpec(5)
    pair = truncation_pair(40, 0.3, 0.6, spec)
    rng = np.random.default_rng(2)
    k = pair.n_min
    for _ in range(100):
        x = FieldVector(spec, rng.integers(0, 5, 40))
        y = FieldVector(spec, rng.integers(0, 5, 40))
        assert compress(pair.H, x)[:k] == x[:k]
        assert compress(pair.G, y)[:k] == y[:k]


@pytest.mark.parametrize("rate", [0.0, -0.1, 1.5])
def test_rate_out_of_range(rate):
    with pytest.raises(ValueError):
        truncation_pair(10, rate, 0.5, GF2)


def test_realised_rates_round():
    pair = truncation_pair(7, 0.5, 0.3, GF2)
    assert (pair.H.rows, pair.G.rows) == (4, 2)
    assert pair.rm == pytest.approx(4 / 7) and pair.rs == pytest.approx(2 / 7)


def test_pair_rejects_mismatched_matrices():
    with pytest.raises(ValueError):
        CompressorPair(SparseMatrix.identity_prefix(GF2, 2, 5), SparseMatrix.identity_prefix(GF2, 2, 6),
                       Construction.EXPLICIT)  # fmt: skip


# --- LDPC ensemble ---------------------------------------------------------------


def test_ldpc_regular_structure():
    h = sample_ldpc(LdpcEnsembleSpec(12, 3, 6, GF2, seed=0))
    assert h.shape == (6, 12)
    assert (h.col_weights() == 3).all()
    assert (h.row_weights() == 6).all()
    assert set(h.values.tolist()) == {1}


@pytest.mark.parametrize("r", [3, 5])
def test_ldpc_nonbinary_values(r):
    h = sample_ldpc(LdpcEnsembleSpec(30, 2, 4, FieldSpec(r), seed=1))
    assert (h.col_weights() == 2).all() and (h.row_weights() == 4).all()
    assert h.values.min() >= 1 and h.values.max() < r
    assert len(set(h.values.tolist())) > 1


def test_ldpc_seed_determinism():
    a = sample_ldpc(LdpcEnsembleSpec(60, 3, 6, GF2, seed=4))
    b = sample_ldpc(LdpcEnsembleSpec(60, 3, 6, GF2, seed=4))
    c = sample_ldpc(LdpcEnsembleSpec(60, 3, 6, GF2, seed=5))
    assert a == b and a != c


@pytest.mark.parametrize("n, dv, dc", [(10, 3, 4), (4, 3, 6), (2, 4, 4)])
def test_ldpc_infeasible(n, dv, dc):
    with pytest.raises(ValueError):
        LdpcEnsembleSpec(n, dv, dc, GF2)


def test_ldpc_rank_near_full():
    for seed in range(20):
        h = sample_ldpc(LdpcEnsembleSpec(1024, 3, 6, GF2, seed=seed))
        assert gf2_rank(h.to_dense()) >= h.rows - 2


def test_four_cycle_count_against_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(20):
        dense = (rng.random((8, 12)) < 0.35).astype(int)
        assert count_four_cycles(SparseMatrix.from_dense(GF2, dense)) == brute_four_cycles(dense)


def test_four_cycle_repair_at_moderate_length():
    h = sample_ldpc(LdpcEnsembleSpec(1200, 3, 6, GF2, seed=0))
    assert count_four_cycles(h) == 0


def test_syndrome_bits_uniform_over_random_inputs():
    for r in (2, 3):
        spec = FieldSpec(r)
        h = sample_ldpc(LdpcEnsembleSpec(60, 3, 6, spec, seed=7))
        x = np.random.default_rng(r).integers(0, r, (30_000, 60))
        synd = h.apply(x)
        for row in (0, 17):
            freq = np.bincount(synd[:, row], minlength=r) / synd.shape[0]
            np.testing.assert_allclose(freq, 1.0 / r, atol=0.015)


# --- sensory extension -----------------------------------------------------------


def test_extend_equal_rate_shares_matrix():
    h = sample_ldpc(LdpcEnsembleSpec(24, 3, 6, GF2, seed=0))
    pair = extend_to_sensory(h, 0.5)
    assert pair.G == pair.H == h
    assert pair.construction is Construction.LDPC_EXTENDED


def test_extend_first_block_identity():
    spec = FieldSpec(3)
    h = sample_ldpc(LdpcEnsembleSpec(60, 3, 6, spec, seed=2))
    pair = extend_to_sensory(h, 0.75)
    assert pair.G.rows == 45
    assert pair.G.top_rows(h.rows) == h
    rng = np.random.default_rng(0)
    for _ in range(50):
        y = FieldVector(spec, rng.integers(0, 3, 60))
        assert compress(pair.G, y)[: h.rows] == compress(h, y)


def test_extend_refuses_smaller_sensory_rate():
    h = sample_ldpc(LdpcEnsembleSpec(24, 3, 6, GF2, seed=0))
    with pytest.raises(ValueError):
        extend_to_sensory(h, 0.25)


def test_syndrome_identity():
    h = sample_ldpc(LdpcEnsembleSpec(48, 3, 6, GF2, seed=8))
    rng = np.random.default_rng(8)
    for _ in range(1000):
        x = FieldVector(GF2, rng.integers(0, 2, 48))
        z = FieldVector(GF2, (rng.random(48) < 0.1).astype(int))
        assert compress(h, x + z) - compress(h, x) == compress(h, z)


def test_ldpc_pair_orientation():
    a = ldpc_pair(60, 0.5, 0.75, 3, 6, GF2, seed=1)
    assert (a.H.rows, a.G.rows) == (30, 45)
    assert a.G.top_rows(30) == a.H
    b = ldpc_pair(60, 0.75, 0.5, 3, 6, GF2, seed=1)
    assert (b.H.rows, b.G.rows) == (45, 30)
    assert b.H.top_rows(30) == b.G
    with pytest.raises(ValueError):
        ldpc_pair(60, 0.4, 0.5, 3, 6, GF2)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 3, 5]), st.integers(0, 2**31 - 1))
def test_compressor_linearity(r, seed):
    spec = FieldSpec(r)
    pair = ldpc_pair(24, 0.5, 0.75, 3, 6, spec, seed=seed % 1000)
    rng = np.random.default_rng(seed)
    u = FieldVector(spec, rng.integers(0, r, 24))
    v = FieldVector(spec, rng.integers(0, r, 24))
    for m in (pair.H, pair.G):
        assert compress(m, u + v) == compress(m, u) + compress(m, v)


# --- alist -----------------------------------------------------------------------


@pytest.mark.parametrize("r", [2, 3, 7])
def test_alist_roundtrip(tmp_path, r):
    spec = FieldSpec(r)
    h = sample_ldpc(LdpcEnsembleSpec(30, 3, 6, spec, seed=3))
    path = tmp_path / "h.alist"
    write_alist(h, path)
    assert read_alist(path, spec) == h


def test_alist_irregular_padding(tmp_path):
    dense = [[1, 1, 0, 0], [0, 1, 1, 1], [0, 0, 0, 1]]
    h = SparseMatrix.from_dense(GF2, dense)
    path = tmp_path / "irr.alist"
    write_alist(h, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "4 3"
    assert lines[1] == "2 3"
    assert lines[2] == "1 2 1 2"
    assert lines[3] == "2 3 1"
    assert lines[4] == "1 0"  # column 1, zero padded
    assert read_alist(path) == h
