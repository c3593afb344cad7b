"""Circulant lifting of protographs and alist import/export.

Every protograph edge becomes a q x q circulant: copy i of the check joins
copy (i + shift) mod q of the variable.  Shifts are picked greedily edge by
edge, rejecting any value that closes a 4-cycle with the shifts already
placed and, among the rest, taking one that closes the fewest 6-cycles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .protograph import Protograph, expand_edges


class LiftError(RuntimeError):
    pass


@dataclass
class LiftedCode:
    proto: Protograph
    q: int
    edges: np.ndarray      # (E, 2) protograph (check, var) per edge, parallel edges repeated
    shifts: np.ndarray     # (E,)
    h: sp.csr_matrix = field(repr=False)
    encoder_plan: object = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.proto.num_vars * self.q

    @property
    def m(self) -> int:
        return self.proto.num_checks * self.q

    def var_block(self, j: int) -> slice:
        return slice(j * self.q, (j + 1) * self.q)

    def bit_mask(self, var_mask) -> np.ndarray:
        """Expand a per-protograph-variable mask to the lifted bits."""
        return np.repeat(np.asarray(var_mask, dtype=bool), self.q)

    def shift_table(self) -> str:
        lines = ["check var shift"]
        lines += [f"{c} {v} {s}" for (c, v), s in zip(self.edges, self.shifts)]
        return "\n".join(lines) + "\n"


def circulant_matrix(proto: Protograph, q: int, edges, shifts) -> sp.csr_matrix:
    edges = np.asarray(edges).reshape(-1, 2)
    i = np.arange(q)
    rows = (edges[:, 0, None] * q + i[None, :]).ravel()
    cols = (edges[:, 1, None] * q + (i[None, :] + np.asarray(shifts)[:, None]) % q).ravel()
    h = sp.csr_matrix((np.ones(rows.size, dtype=np.uint8), (rows, cols)),
                      shape=(proto.num_checks * q, proto.num_vars * q))
    if h.max() > 1:
        raise LiftError("parallel edges share a shift")
    return h


def _cycle_profile(edges, shifts, assigned, new, q, depth):
    """Residue histograms of closing shifts for cycles through ``new``.

    Returns {length: histogram} for lengths 4, 6, ... up to ``depth + 1``.
    Walks leave the variable of ``new`` and must come back to its check;
    consecutive edges differ and only assigned edges are used.  A cycle
    closes when s_new equals the returned residue.  Cycles passing through
    ``new`` more than once are not seen here; the caller covers the 4-cycle
    case among parallel edges.
    """
    c0, v0 = edges[new]
    idx = np.flatnonzero(assigned)
    hists = {length: np.zeros(q, dtype=np.int64) for length in range(4, depth + 2, 2)}
    if idx.size == 0:
        return hists
    ec, ev, es = edges[idx, 0], edges[idx, 1], shifts[idx]
    k = idx.size
    # cnt[t, r]: walks ending on edge t with accumulated value r
    cnt = np.zeros((k, q), dtype=np.int64)
    for t in np.flatnonzero(ev == v0):
        cnt[t, (-es[t]) % q] += 1
    at_check = True  # the walk now sits at the check end of its last edge
    for step in range(2, depth + 1):
        if at_check:
            sign = +1
            share = ec[:, None] == ec[None, :]
        else:
            sign = -1
            share = ev[:, None] == ev[None, :]
        new_cnt = np.zeros_like(cnt)
        for t in range(k):
            src = np.flatnonzero(share[:, t])
            src = src[src != t]
            if src.size:
                acc = cnt[src].sum(axis=0)
                new_cnt[t] = np.roll(acc, sign * es[t])
        cnt = new_cnt
        at_check = not at_check
        if at_check:
            closing = cnt[ec == c0].sum(axis=0)
            # s_new + r = 0 closes the cycle
            hists[step + 1] = np.roll(closing[::-1], 1)
    return hists


def _choose_shifts(edges, q, rng, avoid_six: bool, strict: bool, avoid_eight: bool = False):
    e = len(edges)
    shifts = np.zeros(e, dtype=np.int64)
    assigned = np.zeros(e, dtype=bool)
    for new in rng.permutation(e):
        depth = 7 if avoid_eight else 5 if avoid_six else 3
        hists = _cycle_profile(edges, shifts, assigned, new, q, depth)
        four = hists[4]
        six = hists.get(6, np.zeros(q, dtype=np.int64))
        eight = hists.get(8, np.zeros(q, dtype=np.int64))
        bad = np.zeros(q, dtype=bool)
        c, v = edges[new]
        par = shifts[np.flatnonzero(assigned & (edges[:, 0] == c) & (edges[:, 1] == v))]
        for a in par:
            bad[a] = True                    # parallel edges need distinct shifts
            if q % 2 == 0:                   # 2(s-a) = 0 closes a 4-cycle
                four[(a + q // 2) % q] += 1
        # 2s = a + b for two other parallel shifts: a 4-cycle using the new edge twice
        s = np.arange(q)
        for i, a in enumerate(par):
            for b in par[i + 1:]:
                four[(2 * s - a - b) % q == 0] += 1
        if strict:
            bad |= four > 0
        ok = np.flatnonzero(~bad)
        if ok.size == 0:
            return None
        # lexicographic: 4-cycles (non-strict only), then 6-cycles, then 8-cycles
        score = eight[ok] + (six[ok] * (eight.sum() + 1))
        if not strict:
            score = score + four[ok] * (score.max() + 1)
        best = ok[score == score.min()]
        shifts[new] = best[rng.integers(best.size)]
        assigned[new] = True
    return shifts


def lift(g: Protograph, q: int, seed=None, retries: int = 20, avoid_six: bool = True,
         strict: bool = True, avoid_eight: bool = False) -> LiftedCode:
    """Quasi-cyclic lift of ``g`` with circulant size ``q`` (girth >= 6 on success).

    ``strict=False`` only minimises 4-cycles, for toy sizes where they cannot
    be avoided.  ``avoid_eight`` also breaks ties by 8-cycle count (slower).
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    ce, ve = expand_edges(g.base)
    edges = np.stack([ce, ve], axis=1)
    if q == 1:
        if g.base.max() > 1:
            raise LiftError("q=1 cannot carry parallel edges")
        shifts = np.zeros(len(edges), dtype=np.int64)
        return LiftedCode(g, 1, edges, shifts, circulant_matrix(g, 1, edges, shifts))
    if g.base.max() > q:
        raise LiftError(f"multiplicity {g.base.max()} exceeds q={q}")
    rng = np.random.default_rng(seed)
    for _ in range(retries):
        shifts = _choose_shifts(edges, q, rng, avoid_six, strict, avoid_eight)
        if shifts is not None:
            return LiftedCode(g, q, edges, shifts, circulant_matrix(g, q, edges, shifts))
    raise LiftError(f"no 4-cycle-free circulant assignment found for q={q}; try a larger q")


def count_short_cycles(h) -> int:
    """Number of 4-cycles in the Tanner graph of ``h`` (pairs of rows sharing >= 2 columns)."""
    h = sp.csr_matrix(h, dtype=np.int64)
    ov = (h @ h.T).tocoo()
    mask = ov.row < ov.col
    v = ov.data[mask]
    return int((v * (v - 1) // 2).sum())


# alist -----------------------------------------------------------------------

def write_alist(h, path) -> None:
    h = sp.csc_matrix(h)
    m, n = h.shape
    hr = h.tocsr()
    col_deg = np.diff(h.indptr)
    row_deg = np.diff(hr.indptr)
    lines = [f"{n} {m}", f"{col_deg.max()} {row_deg.max()}",
             " ".join(map(str, col_deg)), " ".join(map(str, row_deg))]
    for j in range(n):
        rows = sorted(h.indices[h.indptr[j]:h.indptr[j + 1]] + 1)
        lines.append(" ".join(map(str, rows + [0] * (col_deg.max() - len(rows)))))
    for i in range(m):
        cols = sorted(hr.indices[hr.indptr[i]:hr.indptr[i + 1]] + 1)
        lines.append(" ".join(map(str, cols + [0] * (row_deg.max() - len(cols)))))
    Path(path).write_text("\n".join(lines) + "\n")


def read_alist(path) -> sp.csr_matrix:
    tok = Path(path).read_text().split()
    it = iter(int(t) for t in tok)
    n, m = next(it), next(it)
    max_c, max_r = next(it), next(it)
    col_deg = [next(it) for _ in range(n)]
    row_deg = [next(it) for _ in range(m)]
    rows, cols = [], []
    for j in range(n):
        ent = [next(it) for _ in range(max_c)]
        nz = [x for x in ent if x]
        if len(nz) != col_deg[j]:
            raise ValueError(f"alist column {j} degree mismatch")
        rows += [x - 1 for x in nz]
        cols += [j] * len(nz)
    h = sp.csr_matrix((np.ones(len(rows), dtype=np.uint8), (rows, cols)), shape=(m, n))
    hr = h.tocsr()
    for i in range(m):
        ent = [next(it) for _ in range(max_r)]
        nz = sorted(x - 1 for x in ent if x)
        if nz != sorted(hr.indices[hr.indptr[i]:hr.indptr[i + 1]].tolist()) or len(nz) != row_deg[i]:
            raise ValueError(f"alist row {i} inconsistent with column lists")
    return h
