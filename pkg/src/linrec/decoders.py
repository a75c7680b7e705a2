"""Syndrome decoders used for noise estimation.

``bp_syndrome_decode`` runs sum-product on the Tanner graph of H with the
check constraints offset by the target syndrome.  ``ml_syndrome_decode``
enumerates the whole coset and is only meant for small instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .gf import FieldVector, ShapeError, SparseMatrix, nullspace, solve
from .info import Pmf

LLR_CAP = 50.0
TIE_TOL = 1e-9


@dataclass(frozen=True)
class BpConfig:
    max_iterations: int = 50
    damping: float = 0.0
    early_exit: bool = True

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError("damping must lie in [0, 1)")


@dataclass(frozen=True)
class DecodeOutcome:
    """Result of one noise estimation.

    ``estimate`` is None for the failure symbol e.  ``ambiguous`` is only
    ever set by the exhaustive oracle, when several coset members share the
    top likelihood.
    """

    estimate: FieldVector | None
    iterations: int = 0
    syndrome_ok: bool = False
    ambiguous: bool = False

    @property
    def failed(self) -> bool:
        return self.estimate is None


def syndromes(h: SparseMatrix, z: np.ndarray) -> np.ndarray:
    """H z for every row of ``z`` (shape (B, n)) -> (B, rows)."""
    return h.apply(np.atleast_2d(z))


class _Graph:
    """Edge bookkeeping for one parity-check matrix, shared across calls."""

    def __init__(self, h: SparseMatrix):
        self.h = h
        e = h.nnz
        self.check = np.asarray(h.row_idx)
        self.var = np.asarray(h.col_idx)
        self.vals = np.asarray(h.values)
        ones = np.ones(e)
        # incidence matrices turn per-node sums into sparse products
        self.check_sum = sp.csr_matrix((ones, (self.check, np.arange(e))), shape=(h.rows, e))
        self.var_sum = sp.csr_matrix((ones, (self.var, np.arange(e))), shape=(h.cols, e))
        self.check_groups = []
        weights = h.row_weights()
        starts = np.concatenate([[0], np.cumsum(weights)])
        for d in np.unique(weights):
            if d == 0:
                continue
            rows = np.flatnonzero(weights == d)
            self.check_groups.append((rows, starts[rows][:, None] + np.arange(d)[None, :]))
        self.empty_checks = np.flatnonzero(weights == 0)
        # regular degrees allow dense (B, nodes, degree) views of the edge arrays
        cw = h.col_weights()
        self.regular = bool(h.nnz) and weights.min() == weights.max() and cw.min() == cw.max()
        if self.regular:
            self.dc = int(weights[0])
            self.dv = int(cw[0])
            self.by_var = np.lexsort((self.check, self.var))  # edge ids grouped by variable


@lru_cache(maxsize=8)
def _graph(h: SparseMatrix) -> _Graph:
    return _Graph(h)


def bp_syndrome_decode(
    h: SparseMatrix, syndrome: FieldVector, channel: Pmf, cfg: BpConfig | None = None
) -> DecodeOutcome:
    if len(syndrome) != h.rows:
        raise ShapeError(f"syndrome length {len(syndrome)} != H rows {h.rows}")
    if syndrome.spec != h.spec or channel.spec != h.spec:
        raise ShapeError("H, syndrome and channel must share a field")
    est, ok, its = bp_decode_batch(h, syndrome.elems[None, :], channel, cfg)
    if not ok[0]:
        return DecodeOutcome(None, int(its[0]), False)
    return DecodeOutcome(FieldVector(h.spec, est[0]), int(its[0]), True)


def bp_decode_batch(h: SparseMatrix, synd: np.ndarray, channel: Pmf, cfg: BpConfig | None = None):
    """Decode many syndromes of the same H at once.

    Returns ``(estimates, ok, iterations)``: estimates has shape (B, n),
    ``ok[b]`` says whether row b satisfies its syndrome.
    """
    cfg = cfg or BpConfig()
    synd = np.atleast_2d(np.asarray(synd, dtype=np.int64))
    if synd.shape[1] != h.rows:
        raise ShapeError(f"syndromes have length {synd.shape[1]}, H has {h.rows} rows")
    if h.spec.order == 2:
        return _bp_gf2(h, synd, channel, cfg)
    return _bp_gfr(h, synd, channel, cfg)


def _satisfied(h: SparseMatrix, z: np.ndarray, synd: np.ndarray) -> np.ndarray:
    return (h.apply(z) == synd).all(axis=1)


def _bp_gf2(h, synd, channel, cfg):
    g = _graph(h)
    batch = synd.shape[0]
    with np.errstate(divide="ignore"):
        llr0 = np.log(channel.probs[0]) - np.log(channel.probs[1])
    llr0 = float(np.clip(llr0, -LLR_CAP, LLR_CAP))

    out = np.zeros((batch, h.cols), dtype=np.uint8)
    out[:] = llr0 < 0
    its = np.zeros(batch, dtype=np.int64)
    ok = _satisfied(h, out, synd)
    active = np.flatnonzero(~ok)
    if cfg.max_iterations == 0 or active.size == 0:
        return out, ok, its

    if g.regular:
        return _bp_gf2_regular(g, h, synd, llr0, cfg, out, ok, its, active)
    s_edge = synd[:, g.check]  # (B, E) syndrome bit of each edge's check
    v2c = np.full((batch, h.nnz), llr0)
    c2v = np.zeros((batch, h.nnz))
    for it in range(1, cfg.max_iterations + 1):
        t = np.tanh(0.5 * v2c[active])
        neg = t < 0
        logmag = np.log(np.maximum(np.abs(t), 1e-300))
        sum_log = (g.check_sum @ logmag.T).T
        sum_neg = np.rint((g.check_sum @ neg.T.astype(float)).T).astype(np.int64)
        ext_log = sum_log[:, g.check] - logmag
        ext_neg = (sum_neg[:, g.check] - neg + s_edge[active]) & 1
        mag = np.minimum(np.exp(ext_log), 1 - 1e-15)
        new = np.where(ext_neg == 1, -2.0, 2.0) * np.arctanh(mag)
        if cfg.damping:
            new = (1 - cfg.damping) * new + cfg.damping * c2v[active]
        c2v[active] = new
        total = llr0 + (g.var_sum @ new.T).T
        v2c[active] = np.clip(total[:, g.var] - new, -LLR_CAP, LLR_CAP)
        hard = (total < 0).astype(np.uint8)
        good = _satisfied(h, hard, synd[active])
        out[active] = hard
        its[active] = it
        if cfg.early_exit:
            ok[active[good]] = True
            active = active[~good]
            if active.size == 0:
                break
        elif it == cfg.max_iterations:
            ok[active] = good
    return out, ok, its


def _bp_gf2_regular(g, h, synd, llr0, cfg, out, ok, its, active):
    # messages live as (B, dc, m): slot k of every check is one contiguous row
    m, n, dc, dv = h.rows, h.cols, g.dc, g.dv
    slot_major = np.arange(m * dc).reshape(m, dc).T.reshape(-1)  # (k, c) -> edge id
    to_var = np.argsort(slot_major)[g.by_var]  # var-grouped edge -> slot-major position
    from_var = np.argsort(to_var)

    sign = np.where(synd[active] == 1, -1.0, 1.0)
    v2c = np.full((active.size, dc, m), llr0)
    c2v = np.zeros((active.size, dc, m)) if cfg.damping else None
    for it in range(1, cfg.max_iterations + 1):
        b = active.size
        t = np.tanh(0.5 * v2c)
        # leave-one-out products by prefix/suffix sweeps over the dc slots
        fwd = np.empty_like(t)
        fwd[:, 0] = sign
        for k in range(1, dc):
            np.multiply(fwd[:, k - 1], t[:, k - 1], out=fwd[:, k])
        acc = t[:, dc - 1].copy()
        for k in range(dc - 2, -1, -1):
            fwd[:, k] *= acc
            acc *= t[:, k]
        np.clip(fwd, -1 + 1e-15, 1 - 1e-15, out=fwd)
        new = np.arctanh(fwd, out=fwd)
        new *= 2.0
        if c2v is not None:
            new = (1 - cfg.damping) * new + cfg.damping * c2v
            c2v = new
        per_var = new.reshape(b, -1)[:, to_var].reshape(b, n, dv)
        total = per_var.sum(axis=2)
        total += llr0
        ext = total[:, :, None] - per_var
        v2c = np.clip(ext.reshape(b, -1)[:, from_var], -LLR_CAP, LLR_CAP).reshape(b, dc, m)
        hard = (total < 0).astype(np.uint8)
        good = _satisfied(h, hard, synd[active])
        out[active] = hard
        its[active] = it
        if cfg.early_exit:
            if good.any():
                ok[active[good]] = True
                keep = ~good
                active, v2c, sign = active[keep], v2c[keep], sign[keep]
                if c2v is not None:
                    c2v = c2v[keep]
                if active.size == 0:
                    break
        elif it == cfg.max_iterations:
            ok[active] = good
    return out, ok, its


def _conv_index(r: int) -> np.ndarray:
    k = np.arange(r)
    return (k[:, None] - k[None, :]) % r  # [k, a] -> k - a


def _bp_gfr(h, synd, channel, cfg):
    g = _graph(h)
    spec = h.spec
    r = spec.order
    batch = synd.shape[0]
    inv = spec.inverse_table
    cidx = _conv_index(r)
    a = np.arange(r)
    # value h*a for each edge and symbol a, and the matching un-scaling gather
    scaled = (g.vals[:, None] * a[None, :]) % r  # (E, r)
    logch = np.log(np.maximum(channel.probs, 1e-300))

    out = np.zeros((batch, h.cols), dtype=spec.dtype)
    out[:] = int(np.argmax(channel.probs))
    its = np.zeros(batch, dtype=np.int64)
    ok = _satisfied(h, out, synd)
    active = np.flatnonzero(~ok)
    if cfg.max_iterations == 0 or active.size == 0:
        return out, ok, its

    v2c = np.broadcast_to(channel.probs, (batch, h.nnz, r)).copy()
    c2v = np.full((batch, h.nnz, r), 1.0 / r)
    unscale = np.empty((h.nnz, r), dtype=np.int64)
    for e in range(h.nnz):
        unscale[e] = (a * inv[g.vals[e]]) % r  # b -> h^{-1} b

    def conv(p, q):
        return np.einsum("...a,...ka->...k", p, q[..., cidx])

    for it in range(1, cfg.max_iterations + 1):
        msg = v2c[active]
        b = msg.shape[0]
        # distribution of w = h*z on each edge: w_dist[b] = msg[h^{-1} b]
        w_dist = np.take_along_axis(msg, np.broadcast_to(unscale, msg.shape), axis=2)
        new = np.empty_like(msg)
        for rows, eidx in g.check_groups:
            d = eidx.shape[1]
            wd = w_dist[:, eidx]  # (b, C, d, r)
            prefix = [np.zeros((b, rows.size, r))]
            prefix[0][..., 0] = 1.0
            for k in range(d - 1):
                prefix.append(conv(prefix[-1], wd[:, :, k]))
            suffix = np.zeros((b, rows.size, r))
            suffix[..., 0] = 1.0
            s = synd[active][:, rows]  # (b, C)
            for k in range(d - 1, -1, -1):
                rest = conv(prefix[k], suffix)  # sum of w over the other edges
                # z_k = a is consistent when rest = s - h*a
                need = (s[:, :, None] - scaled[eidx[:, k]][None, :, :]) % r
                m = np.take_along_axis(rest, need, axis=2)
                new[:, eidx[:, k]] = m / np.maximum(m.sum(axis=2, keepdims=True), 1e-300)
                suffix = conv(suffix, wd[:, :, k])
        if cfg.damping:
            new = (1 - cfg.damping) * new + cfg.damping * c2v[active]
        c2v[active] = new
        logm = np.log(np.maximum(new, 1e-300))
        total = logch + np.stack([(g.var_sum @ logm[:, :, k].T).T for k in range(r)], axis=2)
        ext = total[:, g.var] - logm
        ext -= ext.max(axis=2, keepdims=True)
        pv = np.exp(ext)
        v2c[active] = pv / pv.sum(axis=2, keepdims=True)
        hard = np.argmax(total, axis=2).astype(spec.dtype)
        good = _satisfied(h, hard, synd[active])
        out[active] = hard
        its[active] = it
        if cfg.early_exit:
            ok[active[good]] = True
            active = active[~good]
            if active.size == 0:
                break
        elif it == cfg.max_iterations:
            ok[active] = good
    return out, ok, its


class InstanceTooLarge(ValueError):
    pass


ML_MAX_SPACE = 2**24


def coset(h: SparseMatrix, syndrome: FieldVector):
    """(particular solution, nullspace basis) of {z : Hz = syndrome}, or None if empty."""
    part = solve(h, syndrome)
    if part is None:
        return None
    return part, nullspace(h)


def ml_syndrome_decode(h: SparseMatrix, syndrome: FieldVector, noise, max_space: int = ML_MAX_SPACE) -> DecodeOutcome:
    """Most likely member of the coset of ``syndrome`` under ``noise``.

    Ties within a relative 1e-9 go to the lexicographically smallest vector
    and set ``ambiguous``.
    """
    r = h.spec.order
    if r**h.cols > max_space:
        raise InstanceTooLarge(f"GF({r})^{h.cols} is too large to enumerate (limit {max_space})")
    if len(syndrome) != h.rows:
        raise ShapeError(f"syndrome length {len(syndrome)} != H rows {h.rows}")
    found = coset(h, syndrome)
    if found is None:
        return DecodeOutcome(None, 0, False)
    part, basis = found
    members = _enumerate_coset(part.elems, basis, r)
    scores = np.asarray(noise.log_likelihood(members), dtype=float).reshape(-1)
    best = scores.max()
    if not np.isfinite(best):
        return DecodeOutcome(None, 0, False)
    tied = np.flatnonzero(scores >= best - TIE_TOL * max(1.0, abs(best)))
    cands = members[tied]
    pick = cands[np.lexsort(cands.T[::-1])[0]]
    est = FieldVector(h.spec, pick)
    return DecodeOutcome(est, 0, True, ambiguous=tied.size > 1)


def _enumerate_coset(part: np.ndarray, basis: np.ndarray, r: int) -> np.ndarray:
    k = basis.shape[0]
    if k == 0:
        return part[None, :].astype(np.int64)
    coeffs = np.indices((r,) * k).reshape(k, -1).T
    return (coeffs @ basis + part.astype(np.int64)) % r
