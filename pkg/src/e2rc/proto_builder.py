"""Rate-compatible protograph families by check splitting.

Columns tagged ``s`` are old nodes (present in the starting protograph);
columns tagged ``p`` are the degree-2 parity nodes created by splits.  A
split replaces check c0 by c01 and c02: c01 keeps every edge c0 had to new
nodes plus the old-node share ``s01``, c02 gets ``s02``, and a fresh
degree-2 node joins the two.  Reversing the order in which new nodes were
added gives the nested puncture patterns of the family.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .infotheory import shannon_ebn0_db
from .proto_de import S_CONVERGED, reciprocal, rca_thresholds
from .protograph import Protograph

log = logging.getLogger(__name__)

ThresholdFn = Callable[[Sequence[Protograph]], Sequence[float | None]]


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class SplitPattern:
    s01: tuple
    s02: tuple

    def __post_init__(self):
        a, b = tuple(int(x) for x in self.s01), tuple(int(x) for x in self.s02)
        if len(a) != len(b):
            raise SplitError("pattern halves differ in length")
        if min(a + b, default=0) < 0:
            raise SplitError("negative entry in split pattern")
        object.__setattr__(self, "s01", a)
        object.__setattr__(self, "s02", b)

    @property
    def s0(self) -> tuple:
        return tuple(x + y for x, y in zip(self.s01, self.s02))

    @property
    def is_equal_split(self) -> bool:
        return all(abs(x - y) <= 1 for x, y in zip(self.s01, self.s02))

    def swapped(self) -> "SplitPattern":
        return SplitPattern(self.s02, self.s01)

    def __str__(self):
        return " ".join(map(str, self.s01)) + " | " + " ".join(map(str, self.s02))


def old_nodes(g: Protograph) -> list[int]:
    return [j for j, r in enumerate(g.roles) if r == "s"]


def check_split(g: Protograph, check: int, pattern: SplitPattern) -> Protograph:
    """Split ``check`` into c01 (at the same index) and c02 (right after it)."""
    old = old_nodes(g)
    row = g.base[check]
    if pattern.s0 != tuple(int(row[j]) for j in old):
        raise SplitError(f"pattern does not sum to the old-node edges of check {check}")
    if not any(pattern.s02):
        raise SplitError("c02 would only see the new node")
    c01 = np.where([r == "p" for r in g.roles], row, 0)
    c01[old] = pattern.s01
    if not c01.any():
        raise SplitError("c01 would only see the new node")
    c02 = np.zeros_like(row)
    c02[old] = pattern.s02
    base = np.vstack([g.base[:check], c01, c02, g.base[check + 1:]])
    col = np.zeros((base.shape[0], 1), dtype=np.int64)
    col[check] = col[check + 1] = 1
    base = np.hstack([base, col])
    clabels = list(g.check_labels or (f"c{i}" for i in range(g.num_checks)))
    parent = clabels[check]
    clabels[check:check + 1] = [parent + "1", parent + "2"]
    vlabels = list(g.var_labels or (f"v{j}" for j in range(g.num_vars)))
    vlabels.append(f"v{g.num_vars}")
    return Protograph(base, g.roles + ("p",), np.append(g.punctured, False),
                      tuple(clabels), tuple(vlabels))


def enumerate_equal_splits(s0: Sequence[int], budget: int | None = None) -> list[SplitPattern]:
    """All splits with |s01[i] - s02[i]| <= 1, in a fixed order.

    Even entries are halved; each odd entry gives its larger half either to
    s01 (first) or to s02.  The list is cut after ``budget`` patterns.
    """
    if budget is not None and budget < 1:
        raise ValueError("budget must be >= 1")
    s0 = [int(x) for x in s0]
    odd = [i for i, x in enumerate(s0) if x % 2]
    out = []
    for bits in itertools.product((0, 1), repeat=len(odd)):
        a = [x // 2 for x in s0]
        b = [x // 2 for x in s0]
        for i, bit in zip(odd, bits):
            (b if bit else a)[i] += 1
        out.append(SplitPattern(a, b))
        if budget is not None and len(out) >= budget:
            break
    return out


@dataclass(frozen=True)
class StageRecord:
    stage: int
    check: str
    pattern: SplitPattern
    new_node: int
    threshold_db: float | None


@dataclass
class ProtographFamily:
    start: Protograph
    mother: Protograph
    stage_log: list = field(default_factory=list)

    @property
    def addition_order(self) -> list[int]:
        return [rec.new_node for rec in self.stage_log]

    def masks(self) -> list[np.ndarray]:
        """Puncture masks from the highest rate (all new nodes punctured) down."""
        order = self.addition_order
        out = []
        for j in range(len(order), -1, -1):
            mask = np.zeros(self.mother.num_vars, dtype=bool)
            mask[order[len(order) - j:]] = True
            out.append(mask)
        return out

    def members(self) -> list[Protograph]:
        return [self.mother.with_punctured(m) for m in self.masks()]

    def rates(self) -> list[float]:
        return [g.rate for g in self.members()]

    def write(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        (d / "mother.proto").write_text(self.mother.to_text())
        for k, g in enumerate(self.members()):
            (d / f"member_{k:02d}.proto").write_text(g.to_text())
        (d / "stage_log.txt").write_text(format_stage_log(self.stage_log))


def format_stage_log(log_: Sequence[StageRecord]) -> str:
    lines = ["# stage check pattern(s01 | s02) new_node threshold_db"]
    for r in log_:
        th = "nan" if r.threshold_db is None else f"{r.threshold_db:.4f}"
        lines.append(f"{r.stage} {r.check} {r.pattern} v{r.new_node} {th}")
    return "\n".join(lines) + "\n"


def default_threshold_fn(graphs: Sequence[Protograph]) -> list[float | None]:
    return rca_thresholds(graphs)


def _candidates(g: Protograph, pending: list[str], budget):
    """(check index, pattern, protograph) for every admissible next split."""
    labels = g.check_labels
    old = old_nodes(g)
    is_new = np.array([r == "p" for r in g.roles])
    out = []
    for i, lab in enumerate(labels):
        if lab not in pending:
            continue
        row = g.base[i]
        pats = enumerate_equal_splits([row[j] for j in old], budget)
        if not (row[is_new]).any():
            # offspring are interchangeable; keep one orientation
            pats = [p for p in pats if p.s01 >= p.s02]
        for p in pats:
            try:
                out.append((i, p, check_split(g, i, p)))
            except SplitError:
                continue
    return out


def build_family(start: Protograph, stages: int, pattern_budget: int | None = None,
                 threshold_fn: ThresholdFn = default_threshold_fn) -> ProtographFamily:
    """Greedy stage-wise splitting of every check, best intermediate threshold first."""
    if start.num_checks < 1:
        raise ValueError("start protograph has no checks")
    labels = start.check_labels or tuple(f"c{i}" for i in range(start.num_checks))
    g = Protograph(start.base, start.roles, start.punctured, labels,
                   start.var_labels or tuple(f"v{j}" for j in range(start.num_vars)))
    records = []
    for stage in range(1, stages + 1):
        pending = list(g.check_labels)
        while pending:
            cands = _candidates(g, pending, pattern_budget)
            if not cands:
                raise SplitError(f"no admissible split for checks {pending}")
            ths = threshold_fn([c[2] for c in cands])
            key = lambda k: (math.inf if ths[k] is None else ths[k], cands[k][0],
                             cands[k][1].s01)
            best = min(range(len(cands)), key=key)
            i, pat, g_new = cands[best]
            parent = g.check_labels[i]
            pending.remove(parent)
            records.append(StageRecord(stage, parent, pat, g_new.num_vars - 1, ths[best]))
            log.info("stage %d: split %s -> %s (%.4f dB)", stage, parent, pat,
                     math.nan if ths[best] is None else ths[best])
            g = g_new
    return ProtographFamily(start, g, records)


# starting-protograph search --------------------------------------------------

def _spread(degrees: Sequence[int], m0: int) -> np.ndarray:
    """Spread each variable's degree over ``m0`` checks as evenly as possible."""
    base = np.zeros((m0, len(degrees)), dtype=np.int64)
    offset = 0
    for j, d in enumerate(degrees):
        q, r = divmod(int(d), m0)
        base[:, j] = q
        rows = (offset + np.arange(r)) % m0
        base[rows, j] += 1
        offset += r
    return base


def degree_vectors(n0: int, d_v_max: int, min_deg: int = 3):
    """Nonincreasing degree vectors of length ``n0`` with entries in [min_deg, d_v_max]."""
    for comb in itertools.combinations_with_replacement(range(d_v_max, min_deg - 1, -1), n0):
        yield comb


def _single_check_converges(deg: np.ndarray, s_ch: float, max_iters: int) -> np.ndarray:
    """RCA DE on many one-check protographs at once (rows of ``deg``)."""
    n = deg.shape[0]
    ok = np.zeros(n, dtype=bool)
    idx = np.arange(n)
    d = deg.astype(float)
    c2v = np.zeros_like(d)
    for _ in range(max_iters):
        v2c = s_ch + (d - 1.0) * c2v
        r = reciprocal(v2c)
        tot = (d * r).sum(axis=1, keepdims=True)
        new = reciprocal(np.maximum(tot - r, 0.0))
        grow = (new - c2v).max(axis=1)
        c2v = new
        done = c2v.min(axis=1) >= S_CONVERGED
        ok[idx[done]] = True
        keep = ~done & (grow > 1e-9)
        idx, d, c2v = idx[keep], d[keep], c2v[keep]
        if idx.size == 0:
            break
    return ok


def screen_single_check(candidates: np.ndarray, rate: float, ebn0_db: float,
                        max_iters: int = 2000, chunk: int = 200_000) -> np.ndarray:
    """Mask of one-check candidates whose DE converges at ``ebn0_db``."""
    s2 = 1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0))
    out = np.zeros(len(candidates), dtype=bool)
    for lo in range(0, len(candidates), chunk):
        out[lo:lo + chunk] = _single_check_converges(candidates[lo:lo + chunk], 4.0 / s2,
                                                      max_iters)
    return out


def rank_starting_protographs(m0: int, n0: int, d_v_max: int, min_deg: int = 3,
                              threshold_fn: ThresholdFn = default_threshold_fn,
                              top: int = 10) -> list[tuple[float, Protograph]]:
    """Best ``top`` starting protographs as (threshold dB, protograph), best first.

    One-check spaces are first screened by vectorised DE at a decreasing
    sequence of Eb/N0 levels so only the strongest few hundred candidates
    reach the exact threshold bisection.
    """
    if m0 < 1 or n0 <= m0:
        raise ValueError("need n0 > m0 >= 1")
    vecs = np.array(list(degree_vectors(n0, d_v_max, min_deg)), dtype=np.int64)
    if vecs.size == 0:
        raise ValueError("empty search space")
    rate = (n0 - m0) / n0
    if m0 == 1 and len(vecs) > 4 * top:
        shannon = shannon_ebn0_db(rate)
        alive = np.ones(len(vecs), dtype=bool)
        for gap in (3.0, 1.5, 1.0, 0.6, 0.4, 0.3, 0.25):
            passed = np.zeros_like(alive)
            passed[alive] = screen_single_check(vecs[alive], rate, shannon + gap)
            if passed.sum() < 4 * top:
                break
            alive = passed
        vecs = vecs[alive]
    graphs = [Protograph(_spread(v, m0), ("s",) * n0) for v in vecs]
    ths = threshold_fn(graphs)
    ranked = sorted(((t, k) for k, t in enumerate(ths) if t is not None))
    return [(t, graphs[k]) for t, k in ranked[:top]]


def search_starting_protograph(m0: int, n0: int, d_v_max: int, min_deg: int = 3,
                               threshold_fn: ThresholdFn = default_threshold_fn) -> Protograph:
    ranked = rank_starting_protographs(m0, n0, d_v_max, min_deg, threshold_fn, top=1)
    if not ranked:
        raise ValueError("no candidate decodes at any tested channel")
    return ranked[0][1]
