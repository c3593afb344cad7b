"""Systematic encoder and sum-product decoder for lifted codes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .lifting import LiftedCode

LLR_CLIP = 20.0


class EncoderError(RuntimeError):
    pass


# GF(2) helpers -----------------------------------------------------------------

def gf2_rank(a) -> int:
    a = np.array(a, dtype=np.uint8) & 1
    r = 0
    for c in range(a.shape[1]):
        piv = np.flatnonzero(a[r:, c])
        if piv.size == 0:
            continue
        p = r + piv[0]
        a[[r, p]] = a[[p, r]]
        hit = np.flatnonzero(a[:, c])
        hit = hit[hit != r]
        a[hit] ^= a[r]
        r += 1
        if r == a.shape[0]:
            break
    return r


def gf2_left_inverse(a):
    """Left inverse L of a full-column-rank (m, n) matrix over GF(2): L @ a = I_n.

    L has shape (n, m); raises EncoderError when the columns are dependent.
    """
    a = np.array(a, dtype=np.uint8) & 1
    m, n = a.shape
    aug = np.concatenate([a, np.eye(m, dtype=np.uint8)], axis=1)
    r = 0
    for c in range(n):
        piv = np.flatnonzero(aug[r:, c])
        if piv.size == 0:
            raise EncoderError("parity part is rank deficient")
        p = r + piv[0]
        aug[[r, p]] = aug[[p, r]]
        hit = np.flatnonzero(aug[:, c])
        hit = hit[hit != r]
        aug[hit] ^= aug[r]
        r += 1
    # rows of aug[:n, n:] are the combinations of original rows giving identity
    return aug[:n, n:]


# encoder ------------------------------------------------------------------------

def parity_columns(proto) -> np.ndarray:
    """Protograph columns holding parity: 'p' nodes, topped up with the last 's' nodes."""
    p = list(proto.parity_vars)
    s = [j for j in range(proto.num_vars) if j not in p]
    need = proto.num_checks - len(p)
    if need < 0:
        raise EncoderError("more parity nodes than checks")
    return np.array(sorted(p + (s[len(s) - need:] if need else [])), dtype=np.intp)


@dataclass
class EncoderPlan:
    info_bits: np.ndarray     # codeword positions carrying the message
    parity_bits: np.ndarray
    rounds: list              # [(h rows, cols)] resolved together, one unknown each
    gaps: np.ndarray          # parity positions fixed symbolically
    residual: np.ndarray      # rows left over for the gap system
    effect: np.ndarray        # (G, n) codeword change per unit gap value
    solve: np.ndarray         # (G, R) maps residual syndromes to gap values
    h_residual: sp.csr_matrix

    @property
    def num_gaps(self) -> int:
        return int(self.gaps.size)


def _peel(h: sp.csr_matrix, parity: np.ndarray):
    m = h.shape[0]
    hp = h[:, parity].tocsr().astype(np.int32)
    known = np.zeros(parity.size, dtype=bool)
    used = np.zeros(m, dtype=bool)
    rounds, gaps = [], []
    hc = hp.tocsc()
    while not known.all():
        unknown = hp @ (~known).astype(np.int32)
        rows = np.flatnonzero((unknown == 1) & ~used)
        if rows.size == 0:
            # promote the unknown column touching the most nearly-solved rows
            cand = np.flatnonzero(~known)
            live = (~used) & (unknown > 0)
            score = np.array([np.sum(1.0 / unknown[hc.indices[hc.indptr[j]:hc.indptr[j + 1]]]
                                     * live[hc.indices[hc.indptr[j]:hc.indptr[j + 1]]])
                              for j in cand])
            j = cand[np.argmax(score)]
            known[j] = True
            gaps.append(j)
            continue
        sub = sp.csr_matrix(hp[rows].multiply((~known).astype(np.int32)[None, :]))
        sub.eliminate_zeros()
        cols = sub.indices[sub.indptr[:-1]]
        cols, first = np.unique(cols, return_index=True)
        rows = rows[first]
        known[cols] = True
        used[rows] = True
        rounds.append((rows, parity[cols]))
    return rounds, parity[np.array(gaps, dtype=np.intp)], np.flatnonzero(~used)


def _run_rounds(plan_rounds, xt: np.ndarray) -> None:
    """Fill parity positions of frames ``xt`` (n, F) in place, unknowns start at 0."""
    for hr, cols in plan_rounds:
        xt[cols] = (hr @ xt) & 1


def build_encoder(code: LiftedCode) -> EncoderPlan:
    h = code.h.tocsr().astype(np.int64)
    pcols = parity_columns(code.proto)
    parity = np.concatenate([np.arange(j * code.q, (j + 1) * code.q) for j in pcols])
    info = np.setdiff1d(np.arange(code.n), parity)
    rounds, gaps, residual = _peel(h, parity)
    rounds = [(h[rows], cols) for rows, cols in rounds]
    g = gaps.size
    if g:
        xt = np.zeros((code.n, g), dtype=np.int64)
        xt[gaps, np.arange(g)] = 1
        _run_rounds(rounds, xt)
        resp = ((h[residual] @ xt) & 1).astype(np.uint8)   # (R, G)
        sel = gf2_left_inverse(resp)                       # (G, R)
        effect = xt.T.astype(np.uint8)
    else:
        sel = np.zeros((0, residual.size), dtype=np.uint8)
        effect = np.zeros((0, code.n), dtype=np.uint8)
    return EncoderPlan(info, parity, rounds, gaps, residual, effect, sel, h[residual])


def encoder_plan(code: LiftedCode) -> EncoderPlan:
    if code.encoder_plan is None:
        code.encoder_plan = build_encoder(code)
    return code.encoder_plan


def encode(code: LiftedCode, message) -> np.ndarray:
    """Systematic codeword(s) for ``message`` of shape (k,) or (F, k)."""
    plan = encoder_plan(code)
    msg = np.asarray(message, dtype=np.int64)
    single = msg.ndim == 1
    msg = np.atleast_2d(msg)
    if msg.shape[1] != plan.info_bits.size:
        raise ValueError(f"message length must be {plan.info_bits.size}")
    xt = np.zeros((code.n, msg.shape[0]), dtype=np.int64)
    xt[plan.info_bits] = (msg & 1).T
    _run_rounds(plan.rounds, xt)
    if plan.num_gaps:
        gv = (plan.solve.astype(np.int64) @ ((plan.h_residual @ xt) & 1)) & 1
        xt ^= (plan.effect.T.astype(np.int64) @ gv) & 1
    out = np.ascontiguousarray(xt.T).astype(np.uint8)
    if (syndrome(code.h, out) != 0).any():
        raise EncoderError("encoder produced a nonzero syndrome")
    return out[0] if single else out


def syndrome(h, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    return ((h @ x.T).T & 1).astype(np.uint8)


def info_positions(code: LiftedCode) -> np.ndarray:
    return encoder_plan(code).info_bits


# decoder ------------------------------------------------------------------------

@dataclass
class _Graph:
    var: np.ndarray           # per edge, edges sorted by check
    check_id: np.ndarray      # per edge, index among non-empty checks
    check_start: np.ndarray   # first edge of each non-empty check
    to_var: sp.csr_matrix     # (n, E) sums edge values per variable
    h: sp.csr_matrix


def _graph(h) -> _Graph:
    h = sp.csr_matrix(h, dtype=np.int64)
    h.sort_indices()
    m, n = h.shape
    deg = np.diff(h.indptr)
    var = h.indices.astype(np.intp)
    check_id = np.repeat(np.arange(np.count_nonzero(deg)), deg[deg > 0])
    e = var.size
    to_var = sp.csr_matrix((np.ones(e), (var, np.arange(e))), shape=(n, e))
    return _Graph(var, check_id, h.indptr[:-1][deg > 0], to_var, h)


def _phi(x):
    # -log tanh(x/2), x > 0
    return -np.log(np.tanh(x / 2.0))


@dataclass
class DecodeResult:
    bits: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray


def bp_decode_batch(h, llr, max_iters: int = 100, graph: _Graph | None = None) -> DecodeResult:
    """Flooding sum-product on frames ``llr`` (F, n).

    A frame stops once its hard decisions satisfy every check and no
    posterior is exactly zero.
    """
    g = graph or _graph(h)
    llr = np.clip(np.atleast_2d(np.asarray(llr, dtype=float)), -LLR_CLIP, LLR_CLIP)
    f = llr.shape[0]
    bits = (llr < 0).astype(np.uint8)
    iters = np.zeros(f, dtype=np.int64)
    conv = np.zeros(f, dtype=bool)
    active = np.arange(f)
    lt = np.ascontiguousarray(llr.T)               # (n, F) for the live frames
    c2v = np.zeros((g.var.size, f))                # (E, F)
    for it in range(1, max_iters + 1):
        v2c = np.clip((lt + g.to_var @ c2v)[g.var] - c2v, -LLR_CLIP, LLR_CLIP)
        mag = np.abs(v2c)
        zero = mag == 0
        ph = _phi(np.where(zero, 1.0, mag))
        ph[zero] = 0.0
        rest = np.add.reduceat(ph, g.check_start, axis=0)[g.check_id] - ph
        out = np.minimum(_phi(np.maximum(rest, 1e-300)), LLR_CLIP)
        # an erased neighbour silences the message; signs multiply
        nz = np.add.reduceat(zero.astype(np.int32), g.check_start, axis=0)[g.check_id] - zero
        out[nz > 0] = 0.0
        neg = v2c < 0
        odd = (np.add.reduceat(neg.astype(np.int32), g.check_start, axis=0)[g.check_id] - neg) & 1
        out[odd == 1] *= -1.0
        c2v = out
        post = lt + g.to_var @ c2v
        hard = (post < 0).astype(np.int64)
        ok = ~((g.h @ hard) & 1).any(axis=0) & (post != 0).all(axis=0)
        bits[active] = hard.T
        iters[active] = it
        conv[active[ok]] = True
        if ok.all():
            break
        if ok.any():
            keep = ~ok
            active, lt, c2v = active[keep], lt[:, keep], c2v[:, keep]
    return DecodeResult(bits, iters, conv)


def bp_decode(code_or_h, llr, max_iters: int = 100):
    """Decode one frame; returns (bits, iterations, converged)."""
    h = code_or_h.h if isinstance(code_or_h, LiftedCode) else code_or_h
    res = bp_decode_batch(h, np.asarray(llr)[None, :], max_iters)
    return res.bits[0], int(res.iterations[0]), bool(res.converged[0])
