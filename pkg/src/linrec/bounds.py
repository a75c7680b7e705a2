"""Achievable pattern-rate bounds.

Every bound is reported at epsilon = 0, i.e. the asymptotic boundary.  A
negative formal value means no positive pattern rate is guaranteed; it is
returned as 0 with ``floored`` set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .info import Pmf, binary_entropy, convolve, entropy


@dataclass(frozen=True)
class RatePoint:
    rc: float
    rm: float
    rs: float
    realized: bool = False

    def __post_init__(self):
        if min(self.rc, self.rm, self.rs) < 0:
            raise ValueError("rates must be nonnegative")


class Bound(float):
    """A bound value that remembers whether it was floored at zero."""

    floored: bool

    def __new__(cls, value: float):
        obj = super().__new__(cls, max(value, 0.0))
        obj.floored = value < 0
        obj.raw = float(value)
        return obj


def truncation_bound(rm: float, rs: float, qx: Pmf, qz: Pmf) -> Bound:
    """min(rm, rs) * (H(qx * qz) - H(qz)): truncation encoding with joint typicality."""
    if qx.spec != qz.spec:
        raise ValueError("qx and qz live over different fields")
    return Bound(min(rm, rs) * (entropy(convolve(qx, qz)) - entropy(qz)))


def typicality_slack(rm: float, rs: float, epsilon: float) -> float:
    """The 3*epsilon penalty the truncation recognizer pays at finite epsilon."""
    return 3.0 * epsilon * min(rm, rs)


def ldpc_bound(rm: float, rs: float, q: float) -> Bound:
    """min(rm, rs) - H2(q), the earlier LDPC design for binary patterns."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    return Bound(min(rm, rs) - binary_entropy(q))


def syndrome_bound(rm: float, rs: float, rz: float) -> Bound:
    """min(rm, rs) - R_z for a good linear code ensemble at noise entropy rate R_z."""
    if rz < 0:
        raise ValueError("noise entropy rate must be nonnegative")
    return Bound(min(rm, rs) - rz)


def worst_case_noise_bound(r: int, q: float, rate: float) -> tuple[Bound, np.ndarray]:
    """Least upper bound on R_c when only Q_z(0) = 1 - q is known.

    Uniform patterns over an alphabet of size r.  Returns the bound and the
    maximising noise probabilities (1 - q, q/(r-1), ..., q/(r-1)).  The
    formula needs no field arithmetic, so any r >= 2 is accepted; wrap the
    vector in a ``Pmf`` when r is prime.
    """
    if int(r) != r or r < 2:
        raise ValueError(f"alphabet size must be an integer >= 2, got {r}")
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    value = rate * (math.log2(r) + (1 - q) * math.log2(1 - q) + q * math.log2(q / (r - 1)))
    probs = np.full(int(r), q / (r - 1))
    probs[0] = 1.0 - q
    return Bound(value), probs


# names matching the bound_thm1 / bound_thm3 CSV columns
thm1_bound = truncation_bound
thm3_bound = syndrome_bound
