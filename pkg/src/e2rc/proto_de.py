"""Protograph thresholds by reciprocal-channel-approximation density evolution.

Messages are reliabilities ``s`` (the variance of a consistent Gaussian LLR,
so the mutual information is ``J(sqrt(s))``).  Variable nodes add
reliabilities; check nodes work in the reciprocal domain
``R(s) = J^-1(1 - J(sqrt(s)))**2``, i.e. ``C(s) + C(R(s)) = 1``.

Parallel edges between the same check and variable always carry identical
messages, so each (check, variable) pair is one edge type weighted by its
multiplicity.  Many protographs can be evolved together as one disjoint
union, each with its own channel; threshold bisection then runs in lockstep.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .infotheory import (ChannelParam, SIGMA_MAX, ebn0_db, j_fn, j_inv_fn,
                         j_table, shannon_ebn0_db)
from .protograph import Protograph

S_CAP = SIGMA_MAX ** 2
CONVERGED_MI = 1.0 - 1e-6
S_CONVERGED = float(j_inv_fn(CONVERGED_MI)) ** 2
RESOLUTION_DB = 1e-4


@lru_cache(maxsize=1)
def _reciprocal_table():
    sigma = np.asarray(j_table()[0])
    r = j_inv_fn(1.0 - j_fn(sigma)) ** 2
    return float(sigma[1] - sigma[0]), r, np.append(np.diff(r), 0.0)


def reciprocal(s):
    """R(s): reliability of the reciprocal channel (capped at S_CAP for s=0).

    Linear interpolation in sqrt(s) on the uniform J grid, by direct indexing.
    """
    h, r, slope = _reciprocal_table()
    t = np.minimum(np.sqrt(s) / h, r.size - 1)
    i = t.astype(np.intp)
    return r[i] + (t - i) * slope[i]


@dataclass
class DeState:
    """Per edge-type reliabilities after a DE run on a union of protographs."""

    var_to_check: np.ndarray
    check_to_var: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray

    def mutual_info(self) -> np.ndarray:
        return j_fn(np.sqrt(self.check_to_var))


class _Union:
    """Disjoint union of protographs flattened into edge-type arrays."""

    def __init__(self, graphs: Sequence[Protograph]):
        chk, var, mult, gid, punct = [], [], [], [], []
        c_off = v_off = 0
        for k, g in enumerate(graphs):
            r, c = np.nonzero(g.base)
            chk.append(r + c_off)
            var.append(c + v_off)
            mult.append(g.base[r, c])
            gid.append(np.full(r.size, k))
            punct.append(g.punctured)
            c_off += g.num_checks
            v_off += g.num_vars
        self.graphs = list(graphs)
        self.chk = np.concatenate(chk)
        self.var = np.concatenate(var)
        self.mult = np.concatenate(mult).astype(float)
        self.gid = np.concatenate(gid)
        self.punct = np.concatenate(punct)
        self.var_gid = np.repeat(np.arange(len(graphs)), [g.num_vars for g in graphs])
        self.n_checks, self.n_vars = c_off, v_off
        # edge types are grouped by graph, in order
        self.starts = np.searchsorted(self.gid, np.arange(len(graphs)))

    def per_graph_min(self, x):
        return np.minimum.reduceat(x, self.starts)

    def per_graph_max(self, x):
        return np.maximum.reduceat(x, self.starts)


def evolve(graphs: Sequence[Protograph], noise_variance, max_iters: int = 10000,
           stall_tol: float = 1e-9, start: np.ndarray | None = None) -> DeState:
    """Run RCA density evolution from all-zero messages (or from ``start``).

    ``start`` holds check-to-variable reliabilities; any point below the
    least fixed point of the channel reaches the same limit, which is what
    threshold bisection relies on when it restarts from a failing channel.

    ``noise_variance`` is a scalar or one value per graph.  A graph stops when
    every check-to-variable reliability reaches ``S_CONVERGED`` (mutual
    information 1 - 1e-6), when no message grows by more than ``stall_tol``
    (a non-trivial fixed point), or after ``max_iters`` iterations.
    """
    u = graphs if isinstance(graphs, _Union) else _Union(graphs)
    ng = len(u.graphs)
    sig2 = np.broadcast_to(np.asarray(noise_variance, dtype=float), (ng,))
    ch = np.where(u.punct, 0.0, 4.0 / sig2[u.var_gid])[u.var]
    c2v = np.zeros(u.chk.size) if start is None else np.array(start, dtype=float)
    v2c = np.zeros(u.chk.size)
    active = np.ones(ng, dtype=bool)
    converged = np.zeros(ng, dtype=bool)
    iters = np.zeros(ng, dtype=int)
    for it in range(1, max_iters + 1):
        vsum = np.bincount(u.var, weights=u.mult * c2v, minlength=u.n_vars)
        v2c = ch + vsum[u.var] - c2v
        r = reciprocal(v2c)
        csum = np.bincount(u.chk, weights=u.mult * r, minlength=u.n_checks)
        new = reciprocal(np.maximum(csum[u.chk] - r, 0.0))
        grow = u.per_graph_max(new - c2v)
        # frozen graphs keep their messages
        keep = active[u.gid]
        c2v = np.where(keep, new, c2v)
        iters[active] = it
        done_conv = active & (u.per_graph_min(c2v) >= S_CONVERGED)
        done_stall = active & ~done_conv & (grow <= stall_tol)
        converged |= done_conv
        active &= ~(done_conv | done_stall)
        if not active.any():
            break
    return DeState(v2c, c2v, iters, converged)


def _lockstep_thresholds(graphs: Sequence[Protograph], max_iters: int,
                         resolution_db: float) -> list[float | None]:
    """Eb/N0 thresholds (dB) of all graphs by simultaneous bisection."""
    graphs = list(graphs)
    ng = len(graphs)
    if ng == 0:
        return []
    rates = np.array([g.rate for g in graphs])
    u = _Union(graphs)

    def ok(db, start=None):
        sig2 = 1.0 / (2.0 * rates * 10.0 ** (db / 10.0))
        return evolve(u, sig2, max_iters, start=start)

    def run(db, start=None):
        return ok(db, start).converged

    shannon = np.array([shannon_ebn0_db(r) for r in rates])
    hi = shannon + 2.0
    good = run(hi)
    for extra in (6.0, 20.0):
        if good.all():
            break
        hi = np.where(good, hi, shannon + extra)
        good = run(hi)
    lo = shannon - 0.25
    bad_lo = ~run(lo)
    while not bad_lo.all():
        lo = np.where(bad_lo, lo, lo - 1.0)
        bad_lo |= ~run(lo)
    # graphs that never converge sit at a hopeless level where DE stalls fast
    lo = np.where(good, lo, hi)
    floor = ok(lo).check_to_var
    while (hi - lo).max() > resolution_db:
        mid = 0.5 * (lo + hi)
        st = ok(mid, floor)
        res = st.converged
        hi = np.where(good & res, mid, hi)
        lo = np.where(good & ~res, mid, lo)
        failed = (good & ~res)[u.gid]
        floor = np.where(failed, st.check_to_var, floor)
    return [float(h) if g else None for h, g in zip(hi, good)]


def rca_thresholds(graphs: Sequence[Protograph], max_iters: int = 10000,
                   resolution_db: float = RESOLUTION_DB,
                   chunk: int = 256) -> list[float | None]:
    """Eb/N0 thresholds in dB (None when decoding never succeeds)."""
    out = []
    graphs = list(graphs)
    for lo in range(0, len(graphs), chunk):
        out += _lockstep_thresholds(graphs[lo:lo + chunk], max_iters, resolution_db)
    return out


def rca_threshold(g: Protograph, max_iters: int = 10000) -> ChannelParam | None:
    """Largest noise variance at which DE drives every edge to MI 1.

    Returns None if the protograph cannot be decoded at any noise level, for
    instance when all variables are punctured.
    """
    if g.punctured.all():
        return None
    db = rca_thresholds([g], max_iters)[0]
    if db is None:
        return None
    return ChannelParam.from_ebn0(db, g.rate)


@dataclass(frozen=True)
class ThresholdRow:
    rate: float
    sigma_n2: float
    ebn0_db: float
    gap_db: float

    @classmethod
    def from_ebn0(cls, db: float | None, rate: float) -> "ThresholdRow":
        if db is None:
            return cls(rate, math.nan, math.nan, math.nan)
        sig2 = ChannelParam.from_ebn0(db, rate).noise_variance
        return cls(rate, sig2, db, db - shannon_ebn0_db(rate))

    @classmethod
    def from_channel(cls, chan: ChannelParam, rate: float) -> "ThresholdRow":
        return cls.from_ebn0(ebn0_db(chan, rate), rate)


def family_threshold_report(family: Sequence[tuple[Protograph, Sequence[bool]]],
                            max_iters: int = 10000) -> list[ThresholdRow]:
    """Threshold, Eb/N0 and gap for each (protograph, puncture mask) pair."""
    graphs = [g.with_punctured(mask) for g, mask in family]
    dbs = rca_thresholds(graphs, max_iters)
    return [ThresholdRow.from_ebn0(db, g.rate) for db, g in zip(dbs, graphs)]


def write_threshold_report(rows: Sequence[ThresholdRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rate", "sigma_n2", "ebn0_db", "gap_db"])
        for r in rows:
            w.writerow([f"{r.rate:.10g}", f"{r.sigma_n2:.10g}",
                        f"{r.ebn0_db:.6f}", f"{r.gap_db:.6f}"])


def read_threshold_report(path) -> list[ThresholdRow]:
    with open(path, newline="") as fh:
        return [ThresholdRow(*(float(row[k]) for k in ("rate", "sigma_n2", "ebn0_db", "gap_db")))
                for row in csv.DictReader(fh)]
