import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import entropy as scipy_entropy

from linrec.bounds import (
    Bound,
    RatePoint,
    ldpc_bound,
    syndrome_bound,
    thm1_bound,
    thm3_bound,
    truncation_bound,
    typicality_slack,
    worst_case_noise_bound,
)
from linrec.gf import GF2, FieldSpec
from linrec.info import Pmf, binary_entropy, entropy

# high-precision reference values (mpmath, 30 digits)
TRUNCATION_UNIFORM_011 = 0.250042020917736002180
LDPC_011 = 0.0000840418354720043595
WORST_R4_Q03 = 0.643220350552960527339
TRUNCATION_BERN02_BERN01_RATE075 = 0.268313084177502505657
WORST_R5_Q04_RATE06 = 0.330586500259616225323
SYNDROME_005 = 0.213603042884043871234


def test_truncation_bound_uniform_patterns():
    b = truncation_bound(0.5, 0.5, Pmf.uniform(GF2), Pmf.bernoulli(0.11))
    assert b == pytest.approx(TRUNCATION_UNIFORM_011, abs=1e-12)
    assert not b.floored


def test_truncation_bound_nonuniform_patterns():
    b = truncation_bound(0.9, 0.75, Pmf.bernoulli(0.2), Pmf.bernoulli(0.1))
    assert b == pytest.approx(TRUNCATION_BERN02_BERN01_RATE075, abs=1e-12)


def test_truncation_bound_rejects_mixed_fields():
    with pytest.raises(ValueError):
        truncation_bound(0.5, 0.5, Pmf.uniform(GF2), Pmf.uniform(FieldSpec(3)))


def test_ldpc_bound_value():
    assert ldpc_bound(0.5, 0.5, 0.11) == pytest.approx(LDPC_011, abs=1e-12)


def test_syndrome_bound_value():
    assert syndrome_bound(0.5, 0.5, binary_entropy(0.05)) == pytest.approx(SYNDROME_005, abs=1e-12)


def test_worst_case_composite_alphabet():
    b, probs = worst_case_noise_bound(4, 0.3, 1.0)
    assert b == pytest.approx(WORST_R4_Q03, abs=1e-12)
    np.testing.assert_allclose(probs, [0.7, 0.1, 0.1, 0.1])


def test_worst_case_prime_alphabet():
    b, _ = worst_case_noise_bound(5, 0.4, 0.6)
    assert b == pytest.approx(WORST_R5_Q04_RATE06, abs=1e-12)


def test_aliases():
    assert thm1_bound is truncation_bound and thm3_bound is syndrome_bound


def test_worst_case_binary_equals_ldpc_formula_on_grid():
    for q in np.linspace(0.01, 0.99, 50):
        for rate in (0.25, 0.5, 1.0):
            b, _ = worst_case_noise_bound(2, q, rate)
            assert abs(b.raw - rate * (1 - binary_entropy(q))) <= 1e-12


def test_worst_case_maximiser_beats_random_pmfs():
    r, q, rate = 5, 0.4, 1.0
    b, probs = worst_case_noise_bound(r, q, rate)
    assert rate * (math.log2(r) - scipy_entropy(probs, base=2)) == pytest.approx(b, abs=1e-12)
    rng = np.random.default_rng(0)
    for _ in range(200):
        tail = rng.dirichlet(np.ones(r - 1)) * q
        p = np.concatenate([[1 - q], tail])
        # any noise with the same zero mass leaves at least as much room for patterns
        assert rate * (math.log2(r) - scipy_entropy(p, base=2)) >= b - 1e-12


@pytest.mark.parametrize("q", [0.0, 1.0, -0.1])
def test_worst_case_rejects_degenerate_q(q):
    with pytest.raises(ValueError):
        worst_case_noise_bound(3, q, 1.0)


def test_worst_case_rejects_bad_alphabet():
    with pytest.raises(ValueError):
        worst_case_noise_bound(1, 0.3, 1.0)


def test_floor_and_flag():
    b = ldpc_bound(0.3, 0.5, 0.11)
    assert b == 0.0 and b.floored
    assert b.raw == pytest.approx(0.3 - binary_entropy(0.11))
    assert not Bound(0.2).floored
    b3 = syndrome_bound(0.2, 0.9, 0.5)
    assert b3 == 0.0 and b3.floored


def test_noiseless_truncation_reaches_pattern_entropy():
    spec = FieldSpec(3)
    b = truncation_bound(0.6, 0.8, Pmf.uniform(spec), Pmf.point(spec))
    assert b == pytest.approx(0.6 * math.log2(3), abs=1e-12)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        ldpc_bound(0.5, 0.5, 1.5)
    with pytest.raises(ValueError):
        syndrome_bound(0.5, 0.5, -0.1)
    with pytest.raises(ValueError):
        RatePoint(-0.1, 0.5, 0.5)


def test_typicality_slack():
    assert typicality_slack(0.5, 0.7, 0.1) == pytest.approx(0.15)


def test_truncation_dominates_ldpc_for_uniform_binary_patterns():
    grid = np.linspace(0.0, 0.5, 26)
    for q in grid:
        for rm in (0.25, 0.5, 0.75, 1.0):
            for rs in (0.25, 0.5, 1.0):
                t = truncation_bound(rm, rs, Pmf.uniform(GF2), Pmf.bernoulli(q))
                assert t.raw >= ldpc_bound(rm, rs, q).raw - 1e-12


@given(st.floats(0.0, 0.5), st.floats(0.0, 0.5), st.floats(0.05, 1.0))
def test_bounds_monotone_in_noise(q1, q2, rate):
    lo, hi = sorted((q1, q2))
    u = Pmf.uniform(GF2)
    assert (
        truncation_bound(rate, rate, u, Pmf.bernoulli(lo)) >= truncation_bound(rate, rate, u, Pmf.bernoulli(hi)) - 1e-12
    )
    assert ldpc_bound(rate, rate, lo).raw >= ldpc_bound(rate, rate, hi).raw - 1e-12


@given(st.floats(0.01, 0.99), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_bounds_monotone_in_rates(q, a, b):
    lo, hi = sorted((a, b))
    u, z = Pmf.uniform(GF2), Pmf.bernoulli(q)
    assert truncation_bound(hi, hi, u, z) >= truncation_bound(lo, lo, u, z) - 1e-12
    assert syndrome_bound(hi, 1.0, entropy(z)).raw >= syndrome_bound(lo, 1.0, entropy(z)).raw - 1e-12
