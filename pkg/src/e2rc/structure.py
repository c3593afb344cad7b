"""Deterministic E2RC parity structure, k-SR classification and puncturing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .protograph import Protograph

INF = math.inf


def build_h2_base(m: int) -> Protograph:
    """Square E2RC parity protograph with ``m = 2**t`` checks.

    Starts from one check joined to a degree-1 variable.  Every doubling stage
    splits each check: the first offspring keeps all parity connections, the
    second starts empty (inserted right after it), and a fresh degree-2
    variable joins the pair.
    """
    if m < 1 or m & (m - 1):
        raise ValueError(f"m must be a power of two, got {m}")
    rows = [[0]]  # per check: list of variable indices
    labels = ["c0"]
    n_vars = 1
    while len(rows) < m:
        new_rows, new_labels = [], []
        for r, lab in zip(rows, labels):
            new_rows += [r + [n_vars], [n_vars]]
            new_labels += [lab + "1", lab + "2"]
            n_vars += 1
        rows, labels = new_rows, new_labels
    base = np.zeros((m, m), dtype=np.int64)
    for i, r in enumerate(rows):
        base[i, r] = 1
    return Protograph(base, ("p",) * m, check_labels=tuple(labels),
                      var_labels=tuple(f"v{j}" for j in range(m)))


def replicated_h2_base(m: int) -> Protograph:
    """Base graph seen by density evolution when the H2 base is replicated.

    Replicas are joined so the full parity part keeps a single weight-1
    column: the degree-1 nodes of successive copies form an accumulator
    chain, which in the base graph is a double edge between ``c0`` and its
    degree-1 node.  Without this every extrinsic message leaving the parity
    part stays bounded by the channel and decoding cannot reach MI 1.
    """
    g = build_h2_base(m)
    base = g.base.copy()
    j = int(np.flatnonzero(base.sum(axis=0) == 1)[0])
    base[np.flatnonzero(base[:, j])[0], j] = 2
    return Protograph(base, g.roles, check_labels=g.check_labels, var_labels=g.var_labels)


@dataclass(frozen=True)
class SRProfile:
    """k-SR level of every parity variable (``math.inf`` if never recovered)."""

    level: dict

    def census(self) -> dict:
        out = {}
        for k in self.level.values():
            out[k] = out.get(k, 0) + 1
        return dict(sorted(out.items()))

    @property
    def complete(self) -> bool:
        return all(math.isfinite(k) for k in self.level.values())


def sr_classify(g: Protograph) -> SRProfile:
    """Erasure peeling with every parity bit erased and the rest known.

    In round k a parity variable is recovered if some check sees it as its
    only unresolved edge given the state after round k-1.  Edge multiplicity
    counts, so a double edge to one unknown never resolves it.
    """
    parity = g.parity_vars
    if not parity:
        raise ValueError("protograph has no parity variables")
    resolved = np.array([r != "p" for r in g.roles])
    level = {}
    k = 0
    while True:
        k += 1
        open_edges = g.base * (~resolved)[None, :]
        hits = open_edges.sum(axis=1) == 1
        newly = np.zeros_like(resolved)
        for c in np.flatnonzero(hits):
            newly[np.flatnonzero(open_edges[c])] = True
        newly &= ~resolved
        if not newly.any():
            break
        for v in np.flatnonzero(newly):
            level[int(v)] = k
        resolved |= newly
    for v in parity:
        level.setdefault(v, INF)
    return SRProfile(dict(sorted(level.items())))


def puncture_order(profile: SRProfile) -> list[int]:
    """Parity variables by ascending SR level, newest (highest index) first."""
    if not profile.complete:
        raise ValueError("parity structure has unrecoverable nodes")
    return sorted(profile.level, key=lambda v: (profile.level[v], -v))


def puncture_mask(g: Protograph, num_punctured: int) -> np.ndarray:
    """Variable-level mask puncturing the first ``num_punctured`` nodes of the order."""
    order = puncture_order(sr_classify(g))
    if not 0 <= num_punctured <= len(order):
        raise ValueError(f"cannot puncture {num_punctured} of {len(order)} parity nodes")
    mask = np.zeros(g.num_vars, dtype=bool)
    mask[order[:num_punctured]] = True
    return mask


def achievable_rates(m: int, k_sys: int) -> list[Fraction]:
    return [Fraction(k_sys, k_sys + m - p) for p in range(m)]


def punctured_count(m: int, k_sys: int, target_rate) -> int:
    """Number of parity nodes to puncture so that k_sys/(k_sys+m-p) == target."""
    target = Fraction(target_rate).limit_denominator(10_000)
    sent = Fraction(k_sys) / target
    p = k_sys + m - sent
    if sent.denominator != 1 or not 0 <= p <= m - 1:
        rates = ", ".join(str(r) for r in achievable_rates(m, k_sys))
        raise ValueError(f"rate {target} not achievable; achievable rates: {rates}")
    return int(p)


def puncture_mask_for_rate(m: int, k_sys: int, target_rate) -> np.ndarray:
    """Per-parity mask of the ``m``-node E2RC base for the requested rate."""
    p = punctured_count(m, k_sys, target_rate)
    return puncture_mask(build_h2_base(m), p)


def lower_triangular_order(base: np.ndarray) -> tuple[list[int], list[int]] | None:
    """Greedy pivoting: (row order, column order) making ``base`` lower triangular.

    Returns None when some step finds no row with a single remaining column.
    """
    active_rows = set(range(base.shape[0]))
    active_cols = set(range(base.shape[1]))
    rows, cols = [], []
    while active_rows:
        for r in sorted(active_rows):
            live = [c for c in active_cols if base[r, c]]
            if len(live) == 1 and base[r, live[0]] == 1:
                rows.append(r)
                cols.append(live[0])
                active_rows.discard(r)
                active_cols.discard(live[0])
                break
        else:
            return None
    return rows, cols
