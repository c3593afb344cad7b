"""Degree-distribution design for semi-structured E2RC codes.

The systematic part (variable nodes of degrees 2..d_v_max attached through
the random interleaver) is optimised by linear programming against the
inverted EXIT curve of the deterministic parity part.  Thresholds of
punctured rates follow from the same tunnel test with the puncture mask
applied to the parity part.

Rate of a semi-structured code: with E_L interleaver edges the systematic
part holds K = E_L * sum_d lambda_d / d nodes, and the parity part holds
M = m nodes and m checks.  Written per interleaver edge, M / E_L equals
sum_d rho_d / d over the edge-perspective left-socket distribution, so the
rate is K / (K + M) and does not depend on E_L.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from .exit_engine import (ExitCurve, StructuredComponent, structured_exit_curve,
                          structured_exit_point, uniform_grid)
from .infotheory import (ChannelParam, DegreeDistribution, j_fn, j_inv_fn,
                         shannon_ebn0_db)
from .proto_de import ThresholdRow
from .structure import puncture_mask_for_rate, replicated_h2_base

log = logging.getLogger(__name__)

MARGIN = 1e-5
MIN_DEGREE = 2
RATE_TOL = 0.005


class InfeasibleError(RuntimeError):
    """No degree distribution opens the tunnel at the requested channel."""


def e2rc_structure(m: int, check_degrees) -> StructuredComponent:
    """E2RC parity base of size ``m`` whose checks have the given total degrees."""
    h2 = replicated_h2_base(m)
    deg = np.broadcast_to(np.asarray(check_degrees, dtype=np.int64), (m,))
    sockets = deg - h2.base.sum(axis=1)
    if (sockets < 0).any():
        raise ValueError("check degree below the parity row weight")
    return StructuredComponent(h2, sockets)


@dataclass(frozen=True)
class SemiStructuredSpec:
    m: int
    lam: DegreeDistribution
    check_degrees: tuple
    d_v_max: int
    k_sys: int | None = None

    def __post_init__(self):
        deg = tuple(int(d) for d in np.broadcast_to(self.check_degrees, (self.m,)))
        object.__setattr__(self, "check_degrees", deg)
        if self.k_sys is None:
            object.__setattr__(self, "k_sys", self.m)
        if self.lam.max_degree > self.d_v_max:
            raise ValueError("lambda uses a degree above d_v_max")

    def structure(self) -> StructuredComponent:
        return e2rc_structure(self.m, self.check_degrees)

    @property
    def left_check_dist(self) -> DegreeDistribution:
        """Edge-perspective distribution of left-socket counts per check."""
        comp = self.structure()
        out = {}
        for s in comp.left_sockets:
            if s:
                out[int(s)] = out.get(int(s), 0.0) + float(s)
        return DegreeDistribution.normalized(out)

    @property
    def rate(self) -> float:
        return rate_of(self)


def rate_of(spec: SemiStructuredSpec) -> float:
    """Mother-code rate K / (K + M); see the module docstring."""
    k = spec.lam.inverse_mean()
    mt = spec.left_check_dist.inverse_mean()
    if k <= 0 or mt <= 0:
        raise ValueError("degenerate degree distributions")
    return k / (k + mt)


def rate_for_objective(objective: float, comp: StructuredComponent) -> float:
    mt = comp.proto.num_checks / comp.num_left_edges
    return objective / (objective + mt)


# EXIT-curve inversion and the tunnel constraint -----------------------------

@dataclass(frozen=True)
class InverseCurve:
    """I_A,S as a function of I_E,S; +inf above the attainable maximum."""

    curve: ExitCurve

    @property
    def top(self) -> float:
        return float(self.curve.i_a[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.curve.i_a, self.curve.i_e)
        return np.where(x > self.top, np.inf, out)


def invert_curve(curve: ExitCurve) -> ExitCurve:
    """Swap the axes; a flat run maps to its leftmost preimage."""
    if np.any(np.diff(curve.i_e) < 0):
        raise ValueError("curve must be nondecreasing to be inverted")
    ys, first = np.unique(curve.i_e, return_index=True)
    if ys.size < 2:
        raise ValueError("constant curve has no inverse")
    return ExitCurve(ys, curve.i_a[first])


def structured_inverse(comp: StructuredComponent, num_points: int = 10000) -> InverseCurve:
    """Inverse structured curve including the I_A = 1 endpoint."""
    fwd = structured_exit_curve(comp, num_points)
    top = max(structured_exit_point(comp, 1.0), float(fwd.i_e[-1]))
    full = ExitCurve(np.append(fwd.i_a, 1.0), np.append(fwd.i_e, top))
    return InverseCurve(invert_curve(full))


def variable_terms(degrees, x, chan: ChannelParam | None) -> np.ndarray:
    """Matrix F[i, k] = J(sqrt((d_k - 1) J^-1(x_i)^2 + sigma_ch^2))."""
    s_ch = 0.0 if chan is None else chan.channel_msg_variance()
    a2 = j_inv_fn(np.asarray(x, dtype=float)) ** 2
    d = np.asarray(degrees, dtype=float)
    return j_fn(np.sqrt(np.multiply.outer(a2, d - 1.0) + s_ch))


def _constraint_rows(inv: InverseCurve, chan: ChannelParam, degrees, grid: int,
                     margin: float):
    """Tunnel rows over the grid points lying in the attainable I_E,S range.

    Both curves run into 1 at the top, so the margin is capped at half the
    remaining distance to 1; a fixed margin there would be unattainable.
    """
    x = uniform_grid(grid)
    x = x[x < inv.top]
    b = inv(x)
    return variable_terms(degrees, x, chan), b + np.minimum(margin, 0.5 * (1.0 - b))


def tunnel_open(lam: DegreeDistribution, chan: ChannelParam, inv: InverseCurve,
                grid: int = 10000, margin: float = 0.0) -> bool:
    f, b = _constraint_rows(inv, chan, lam.degrees(), grid, margin)
    return bool(np.all(f @ lam.fractions() > b))


@dataclass
class LpResult:
    lam: DegreeDistribution
    objective: float


def _solve_lp(blocks, degrees) -> LpResult:
    a = np.vstack([f for f, _ in blocks])
    b = np.concatenate([r for _, r in blocks])
    if np.any(~np.isfinite(b)):
        raise InfeasibleError("no open tunnel at this channel")
    c = -1.0 / np.asarray(degrees, dtype=float)
    res = linprog(c, A_ub=-a, b_ub=-b, A_eq=np.ones((1, len(degrees))), b_eq=[1.0],
                  bounds=[(0, None)] * len(degrees), method="highs")
    if res.status != 0:
        raise InfeasibleError("no open tunnel at this channel")
    lam = np.maximum(res.x, 0.0)
    dist = DegreeDistribution.normalized({int(d): v for d, v in zip(degrees, lam)})
    return LpResult(dist, float(-res.fun))


def optimize_lambda(chan: ChannelParam, inv_structured: InverseCurve | ExitCurve,
                    d_v_max: int, grid: int = 10000, margin: float = MARGIN,
                    min_degree: int = MIN_DEGREE) -> DegreeDistribution:
    """Maximise sum(lambda_d / d) subject to the tunnel constraint."""
    return _optimize([(chan, _as_inverse(inv_structured))], d_v_max, grid, margin,
                     min_degree).lam


def _as_inverse(inv) -> InverseCurve:
    return inv if isinstance(inv, InverseCurve) else InverseCurve(inv)


def _optimize(pairs, d_v_max, grid, margin, min_degree) -> LpResult:
    if d_v_max < min_degree:
        raise ValueError("d_v_max below the minimum degree")
    degrees = np.arange(min_degree, d_v_max + 1)
    blocks = [_constraint_rows(inv, chan, degrees, grid, margin) for chan, inv in pairs]
    return _solve_lp(blocks, degrees)


# thresholds and design drivers ----------------------------------------------

def channel_at_gap(gap: float, rate: float) -> ChannelParam:
    return ChannelParam.from_ebn0(shannon_ebn0_db(rate) + gap, rate)


def _component(structure: StructuredComponent, m: int, k_sys: int, rate) -> StructuredComponent:
    """Structure with the parity puncture mask of ``rate`` applied."""
    mask = puncture_mask_for_rate(m, k_sys, rate)
    return structure.with_punctured(mask)


def predict_threshold(spec: SemiStructuredSpec, rate, grid: int = 10000,
                      resolution: float = 1e-4) -> ChannelParam:
    """Largest noise variance at which the EXIT tunnel is open at ``rate``."""
    comp = _component(spec.structure(), spec.m, spec.k_sys, rate)

    def ok(s2):
        chan = ChannelParam(s2)
        return tunnel_open(spec.lam, chan, structured_inverse(comp.at(chan), grid), grid)

    lo, hi = 1e-3, ChannelParam.from_ebn0(shannon_ebn0_db(float(Fraction(rate))),
                                          float(Fraction(rate))).noise_variance
    if not ok(lo):
        raise InfeasibleError(f"tunnel closed even at noise variance {lo}")
    if ok(hi):  # should not happen above capacity; keep the bracket valid
        return ChannelParam(hi)
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return ChannelParam(lo)


def threshold_row(spec: SemiStructuredSpec, rate, **kw) -> ThresholdRow:
    r = float(Fraction(rate))
    return ThresholdRow.from_channel(predict_threshold(spec, rate, **kw), r)


def design_at_rate(target_rate, structure: StructuredComponent, d_v_max: int,
                   step_db: float = 0.01, gap_cap_db: float = 2.0, grid: int = 10000,
                   margin: float = MARGIN, k_sys: int | None = None,
                   m: int | None = None) -> tuple[SemiStructuredSpec, float]:
    """Sweep the gap upward from capacity until the LP reaches ``target_rate``.

    Returns the spec and the gap (dB) at which it was found.
    """
    r = float(Fraction(target_rate))
    if not 0.0 < r < 1.0:
        raise ValueError("target rate must lie in (0, 1)")
    m = structure.proto.num_checks if m is None else m
    n_steps = int(round(gap_cap_db / step_db))
    for k in range(n_steps + 1):
        gap = k * step_db
        chan = channel_at_gap(gap, r)
        inv = structured_inverse(structure.at(chan), grid)
        try:
            res = _optimize([(chan, inv)], d_v_max, grid, margin, MIN_DEGREE)
        except InfeasibleError:
            continue
        if rate_for_objective(res.objective, structure) >= r:
            spec = SemiStructuredSpec(m, res.lam, tuple(structure.check_degrees), d_v_max, k_sys)
            return spec, gap
    raise InfeasibleError(f"rate {target_rate} not reached within {gap_cap_db} dB of capacity")


@dataclass(frozen=True)
class JointDesignSpec:
    rates: tuple
    g_min: float = 0.0
    g_max: float = 1.0
    g_step: float = 0.01
    rate_tol: float = RATE_TOL

    def __post_init__(self):
        rates = tuple(Fraction(r) for r in self.rates)
        if not rates:
            raise ValueError("need at least one rate")
        if not self.g_min < self.g_max:
            raise ValueError("g_min must be below g_max")
        object.__setattr__(self, "rates", rates)

    @property
    def mother_rate(self) -> Fraction:
        return min(self.rates)


@dataclass
class JointResult:
    lam: DegreeDistribution
    gap: float
    rate: float
    history: list = field(default_factory=list)


def joint_optimize(jspec: JointDesignSpec, structure: StructuredComponent, d_v_max: int,
                   grid: int = 10000, margin: float = MARGIN,
                   k_sys: int | None = None) -> JointResult:
    """Smallest swept gap g whose joint LP over all rates reaches the mother rate.

    The structured curves for every rate are recomputed at sigma(g, R_i)
    under that rate's puncture mask, and one LP carries all constraints.
    """
    m = structure.proto.num_checks
    k_sys = m if k_sys is None else k_sys
    comps = {r: _component(structure, m, k_sys, r) for r in jspec.rates}
    target = float(jspec.mother_rate) - jspec.rate_tol
    best = None
    history = []
    n_steps = int(math.floor((jspec.g_max - jspec.g_min) / jspec.g_step + 1e-9))
    for k in range(n_steps + 1):
        g = jspec.g_min + k * jspec.g_step
        pairs = []
        for r, comp in comps.items():
            chan = channel_at_gap(g, float(r))
            pairs.append((chan, structured_inverse(comp.at(chan), grid)))
        try:
            res = _optimize(pairs, d_v_max, grid, margin, MIN_DEGREE)
        except InfeasibleError:
            history.append((g, math.nan))
            continue
        rate = rate_for_objective(res.objective, structure)
        history.append((g, rate))
        log.info("g=%.3f rate=%.5f", g, rate)
        if best is None or rate > best.rate:
            best = JointResult(res.lam, g, rate)
        if rate >= target:
            return JointResult(res.lam, g, rate, history)
    msg = f"no acceptable design up to g={jspec.g_max} dB"
    if best is not None:
        msg += f"; best rate {best.rate:.5f} at g={best.gap:.2f} with lambda {best.lam}"
    raise InfeasibleError(msg)


# outputs -------------------------------------------------------------------

def write_lambda(lam: DegreeDistribution, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["degree", "fraction"])
        for d, f in lam.entries.items():
            w.writerow([d, f"{f:.10f}"])


def read_lambda(path) -> DegreeDistribution:
    with open(path, newline="") as fh:
        return DegreeDistribution.normalized(
            {int(r["degree"]): float(r["fraction"]) for r in csv.DictReader(fh)})
