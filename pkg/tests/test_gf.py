import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linrec.gf import (
    GF2,
    FieldSpec,
    FieldVector,
    ShapeError,
    SparseMatrix,
    gf2_rank,
    mat_vec_mul,
    nullspace,
    pack_bits,
    packed_mat_vec_gf2,
    rank,
    row_reduce,
    solve,
    sub_rows,
    vec_add,
    vec_sub,
)

PRIMES = [2, 3, 5, 7, 11, 13]


def dense_oracle(dense, v, r):
    return (np.asarray(dense, dtype=np.int64) @ np.asarray(v, dtype=np.int64)) % r


# --- field scalars -------------------------------------------------------------


@pytest.mark.parametrize("r", [0, 1, 4, 6, 9, 15])
def test_non_prime_orders_rejected(r):
    with pytest.raises(ValueError):
        FieldSpec(r)


def test_small_examples():
    assert GF2.add(1, 1) == 0
    assert FieldSpec(7).inv(3) == 5
    assert FieldSpec(5).sub(0, 1) == 4


def test_inverse_of_zero_is_domain_error():
    with pytest.raises(ZeroDivisionError):
        FieldSpec(7).inv(0)


def test_out_of_range_scalar_rejected():
    with pytest.raises(ValueError):
        FieldSpec(5).add(5, 1)


@pytest.mark.parametrize("r", PRIMES)
def test_inverse_exhaustive(r):
    f = FieldSpec(r)
    for a in range(1, r):
        # brute-force search for the inverse
        want = next(x for x in range(1, r) if (a * x) % r == 1)
        assert f.inv(a) == want
        assert f.inverse_table[a] == want


@pytest.mark.parametrize("r", PRIMES)
def test_field_axioms_exhaustive(r):
    f = FieldSpec(r)
    elems = range(r)
    for a in elems:
        assert f.add(a, 0) == a and f.mul(a, 1) == a
        assert f.add(a, f.neg(a)) == 0
        for b in elems:
            assert f.add(a, b) == f.add(b, a)
            assert f.mul(a, b) == f.mul(b, a)
            assert f.sub(f.add(a, b), b) == a
            for c in elems:
                assert f.add(f.add(a, b), c) == f.add(a, f.add(b, c))
                assert f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c))
                assert f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c))


# --- vectors -------------------------------------------------------------------


def test_vector_rejects_out_of_range():
    with pytest.raises(ValueError):
        FieldVector(FieldSpec(3), [0, 1, 3])
    with pytest.raises(ValueError):
        FieldVector(FieldSpec(3), [-1, 0])


def test_vector_is_immutable():
    v = FieldVector(FieldSpec(5), [1, 2, 3])
    with pytest.raises(ValueError):
        v.elems[0] = 4


def test_vector_mismatch_is_shape_error():
    with pytest.raises(ShapeError):
        vec_add(FieldVector(GF2, [0, 1]), FieldVector(GF2, [0, 1, 1]))
    with pytest.raises(ShapeError):
        vec_sub(FieldVector(GF2, [0, 1]), FieldVector(FieldSpec(3), [0, 1]))


def test_v_minus_v_is_zero():
    v = FieldVector(FieldSpec(7), [0, 3, 6, 2])
    assert (v - v).is_zero()


@given(st.lists(st.integers(0, 1), min_size=1, max_size=40), st.data())
def test_gf2_add_equals_sub(u, data):
    v = data.draw(st.lists(st.integers(0, 1), min_size=len(u), max_size=len(u)))
    a, b = FieldVector(GF2, u), FieldVector(GF2, v)
    assert a + b == a - b


def test_add_then_sub_roundtrip_gf5():
    f = FieldSpec(5)
    rng = np.random.default_rng(1)
    for _ in range(1000):
        n = int(rng.integers(1, 20))
        u = FieldVector(f, rng.integers(0, 5, n))
        v = FieldVector(f, rng.integers(0, 5, n))
        assert (u + v) - v == u


@pytest.mark.parametrize("r", PRIMES + [131, 257])
def test_sub_rows_matches_modular_subtraction(r):
    rng = np.random.default_rng(r)
    f = FieldSpec(r)
    a = rng.integers(0, r, (50, 9)).astype(f.dtype)
    b = rng.integers(0, r, 9).astype(f.dtype)
    want = (a.astype(np.int64) - b.astype(np.int64)) % r
    np.testing.assert_array_equal(sub_rows(a, b, r).astype(np.int64), want)


def test_concat_and_slicing():
    f = FieldSpec(3)
    u = FieldVector(f, [1, 2])
    w = u.concat(FieldVector(f, [0]))
    assert list(w) == [1, 2, 0]
    assert w[:2] == u


# --- sparse matrices -----------------------------------------------------------


def test_sparse_rejects_duplicates_and_zero_values():
    with pytest.raises(ValueError):
        SparseMatrix(GF2, 2, 2, [(0, 0, 1), (0, 0, 1)])
    with pytest.raises(ValueError):
        SparseMatrix(FieldSpec(3), 2, 2, [(0, 0, 0)])
    with pytest.raises(ShapeError):
        SparseMatrix(GF2, 2, 2, [(2, 0, 1)])


def test_identity_prefix_truncates():
    f = FieldSpec(5)
    v = FieldVector(f, [4, 3, 2, 1, 0, 1])
    assert mat_vec_mul(SparseMatrix.identity_prefix(f, 3, 6), v) == v[:3]


def test_times_zero_is_zero():
    f = FieldSpec(3)
    m = SparseMatrix.from_dense(f, np.random.default_rng(0).integers(0, 3, (4, 8)))
    assert mat_vec_mul(m, FieldVector.zeros(f, 8)).is_zero()


def test_random_gf3_4x8_matches_dense():
    f = FieldSpec(3)
    rng = np.random.default_rng(42)
    dense = rng.integers(0, 3, (4, 8))
    v = rng.integers(0, 3, 8)
    got = mat_vec_mul(SparseMatrix.from_dense(f, dense), FieldVector(f, v))
    np.testing.assert_array_equal(got.elems, dense_oracle(dense, v, 3))


def test_dimension_mismatch():
    m = SparseMatrix.identity_prefix(GF2, 2, 4)
    with pytest.raises(ShapeError):
        mat_vec_mul(m, FieldVector.zeros(GF2, 5))
    with pytest.raises(ShapeError):
        mat_vec_mul(SparseMatrix.identity_prefix(FieldSpec(3), 2, 4), FieldVector.zeros(GF2, 4))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(PRIMES), st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**31 - 1))
def test_linearity(r, rows, cols, seed):
    f = FieldSpec(r)
    rng = np.random.default_rng(seed)
    m = SparseMatrix.from_dense(f, rng.integers(0, r, (rows, cols)))
    u = FieldVector(f, rng.integers(0, r, cols))
    v = FieldVector(f, rng.integers(0, r, cols))
    assert mat_vec_mul(m, u + v) == mat_vec_mul(m, u) + mat_vec_mul(m, v)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(PRIMES), st.integers(1, 10), st.integers(1, 10), st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_batched_apply_matches_rowwise(r, rows, cols, batch, seed):
    f = FieldSpec(r)
    rng = np.random.default_rng(seed)
    dense = rng.integers(0, r, (rows, cols))
    m = SparseMatrix.from_dense(f, dense)
    block = rng.integers(0, r, (batch, cols)).astype(f.dtype)
    want = np.stack([dense_oracle(dense, row, r) for row in block])
    np.testing.assert_array_equal(m.apply(block).astype(np.int64), want)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.integers(1, 150), st.integers(0, 2**31 - 1))
def test_packed_gf2_path_matches_generic(rows, cols, seed):
    rng = np.random.default_rng(seed)
    m = SparseMatrix.from_dense(GF2, rng.integers(0, 2, (rows, cols)))
    v = FieldVector(GF2, rng.integers(0, 2, cols))
    assert packed_mat_vec_gf2(m, v) == mat_vec_mul(m, v)


def test_pack_bits_layout():
    bits = np.zeros(70, dtype=np.uint8)
    bits[[0, 5, 64, 69]] = 1
    words = pack_bits(bits)[0]
    assert words.shape == (2,)
    assert int(words[0]) == (1 << 0) | (1 << 5)
    assert int(words[1]) == (1 << 0) | (1 << 5)


def test_dense_roundtrip_and_weights():
    f = FieldSpec(7)
    dense = np.array([[0, 3, 0], [1, 0, 6]])
    m = SparseMatrix.from_dense(f, dense)
    np.testing.assert_array_equal(m.to_dense(), dense)
    assert m.nnz == 3
    np.testing.assert_array_equal(m.row_weights(), [1, 2])
    np.testing.assert_array_equal(m.col_weights(), [1, 1, 1])
    assert m.top_rows(1) == SparseMatrix.from_dense(f, dense[:1])
    assert m.top_rows(1).vstack(SparseMatrix.from_dense(f, dense[1:])) == m


# --- linear algebra helpers ----------------------------------------------------


def brute_rank(dense, r):
    # size of the row space, counted by enumerating all combinations
    dense = np.asarray(dense, dtype=np.int64)
    k = dense.shape[0]
    coeffs = np.indices((r,) * k).reshape(k, -1).T
    span = {tuple(row) for row in (coeffs @ dense) % r}
    return round(np.log(len(span)) / np.log(r))


@pytest.mark.parametrize("r", [2, 3, 5])
def test_rank_matches_span_count(r):
    rng = np.random.default_rng(r)
    for _ in range(30):
        dense = rng.integers(0, r, (int(rng.integers(1, 5)), int(rng.integers(1, 6))))
        if r > 2:
            dense[rng.random(dense.shape) < 0.4] = 0
        assert rank(dense, FieldSpec(r)) == brute_rank(dense, r)


def test_gf2_rank_matches_generic_elimination():
    rng = np.random.default_rng(3)
    for _ in range(50):
        dense = rng.integers(0, 2, (int(rng.integers(1, 30)), int(rng.integers(1, 90))))
        assert gf2_rank(dense) == len(row_reduce(dense, GF2)[1])


@pytest.mark.parametrize("r", [2, 3, 7])
def test_solve_and_nullspace(r):
    f = FieldSpec(r)
    rng = np.random.default_rng(10 + r)
    for _ in range(30):
        dense = rng.integers(0, r, (4, 7))
        m = SparseMatrix.from_dense(f, dense)
        x = rng.integers(0, r, 7)
        rhs = FieldVector(f, dense_oracle(dense, x, r))
        sol = solve(m, rhs)
        assert sol is not None
        np.testing.assert_array_equal(dense_oracle(dense, sol.elems, r), rhs.elems)
        basis = nullspace(m)
        assert basis.shape[0] == 7 - rank(m)
        for b in basis:
            assert not dense_oracle(dense, b, r).any()


def test_solve_inconsistent_returns_none():
    m = SparseMatrix.from_dense(GF2, [[1, 1], [1, 1]])
    assert solve(m, FieldVector(GF2, [0, 1])) is None
