"""EXIT functions of protograph-structured code components.

A structured component is a small protograph (the deterministic parity
part) whose checks also carry ``left_sockets`` edges into the random
interleaver.  A-priori information enters on those left edges; the
extrinsic output is the average MI leaving on them.  All copies of the
replicated protograph carry identical MI, so the base graph suffices.

Two solvers are provided: a fixed-point iteration on per-edge MI values
(fast, analytical) and a Monte-Carlo sum-product oracle on a randomly
lifted copy of the component.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .infotheory import ChannelParam, DegreeDistribution, exit_variable, j_fn, j_inv_fn
from .protograph import Protograph, expand_edges

EPS_THRESH = 1e-6
MAX_SWEEPS = 100_000


class ExitConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class StructuredComponent:
    proto: Protograph
    left_sockets: np.ndarray
    chan: ChannelParam | None = None

    def __post_init__(self):
        sockets = np.array(self.left_sockets, dtype=np.int64).reshape(-1)
        if sockets.shape != (self.proto.num_checks,):
            raise ValueError("need one left-socket count per check")
        if (sockets < 0).any():
            raise ValueError("left socket counts must be >= 0")
        if sockets.sum() == 0:
            raise ValueError("component has no left edges")
        sockets.setflags(write=False)
        object.__setattr__(self, "left_sockets", sockets)

    def at(self, chan: ChannelParam) -> "StructuredComponent":
        return replace(self, chan=chan)

    def with_punctured(self, mask) -> "StructuredComponent":
        return replace(self, proto=self.proto.with_punctured(mask))

    @property
    def check_degrees(self) -> np.ndarray:
        return self.left_sockets + self.proto.base.sum(axis=1)

    @property
    def num_left_edges(self) -> int:
        return int(self.left_sockets.sum())

    @property
    def num_right_edges(self) -> int:
        return int(self.proto.base.sum())

    def left_check_distribution(self) -> DegreeDistribution:
        """Edge-perspective distribution of total check degrees seen from E_L."""
        out = {}
        for d, s in zip(self.check_degrees, self.left_sockets):
            if s:
                out[int(d)] = out.get(int(d), 0.0) + float(s)
        return DegreeDistribution.normalized(out)

    def channel_variances(self) -> np.ndarray:
        if self.chan is None:
            raise ValueError("component has no channel attached")
        s = self.chan.channel_msg_variance()
        return np.where(self.proto.punctured, 0.0, s)


@dataclass(frozen=True)
class ExitCurve:
    i_a: np.ndarray
    i_e: np.ndarray

    def __post_init__(self):
        a = np.array(self.i_a, dtype=float)
        e = np.array(self.i_e, dtype=float)
        if a.shape != e.shape or a.ndim != 1 or a.size < 2:
            raise ValueError("curve needs matching 1-D arrays of length >= 2")
        if np.any(np.diff(a) <= 0):
            raise ValueError("I_A must be strictly increasing")
        if np.any(np.diff(e) < -1e-9):
            raise ValueError("I_E must be nondecreasing")
        if a.min() < 0 or a.max() > 1 or e.min() < -1e-12 or e.max() > 1 + 1e-12:
            raise ValueError("MI values must lie in [0, 1]")
        for arr in (a, e):
            arr.setflags(write=False)
        object.__setattr__(self, "i_a", a)
        object.__setattr__(self, "i_e", np.clip(e, 0.0, 1.0))

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.i_a.tolist(), self.i_e.tolist()))

    def __len__(self):
        return self.i_a.size

    def __call__(self, x):
        return np.interp(x, self.i_a, self.i_e)


def uniform_grid(num_points: int) -> np.ndarray:
    """``num_points`` equally spaced values k/num_points covering [0, 1)."""
    if num_points < 2:
        raise ValueError("num_points must be >= 2")
    return np.arange(num_points) / num_points


class _Layout:
    """Edge bookkeeping of a component; right edges are sorted by check."""

    def __init__(self, comp: StructuredComponent):
        ce, ve = expand_edges(comp.proto.base)
        self.ce, self.ve = ce, ve
        self.m, self.n = comp.proto.base.shape
        self.check_starts = np.searchsorted(ce, np.arange(self.m))
        self.var_order = np.argsort(ve, kind="stable")
        self.var_starts = np.searchsorted(ve[self.var_order], np.arange(self.n))
        self.left = comp.left_sockets.astype(float)
        self.ch = comp.channel_variances()

    def check_sum(self, x):
        return np.add.reduceat(x, self.check_starts, axis=1)

    def var_sum(self, x):
        return np.add.reduceat(x[:, self.var_order], self.var_starts, axis=1)


def _check_out(lay: _Layout, v2c, left_term):
    b = j_inv_fn(1.0 - v2c) ** 2
    tot = lay.check_sum(b) + lay.left * left_term
    return 1.0 - j_fn(np.sqrt(np.maximum(tot[:, lay.ce] - b, 0.0))), tot


def _var_out(lay: _Layout, c2v):
    a = j_inv_fn(c2v) ** 2
    tot = lay.var_sum(a) + lay.ch
    return j_fn(np.sqrt(np.maximum(tot[:, lay.ve] - a, 0.0)))


def _left_out(lay: _Layout, v2c, left_term):
    """Average extrinsic MI over E_L, weighted by sockets per check."""
    b = j_inv_fn(1.0 - v2c) ** 2
    tot = lay.check_sum(b) + (lay.left - 1.0).clip(min=0.0) * left_term
    out = 1.0 - j_fn(np.sqrt(tot))
    return out @ lay.left / lay.left.sum()


def _solve(lay: _Layout, i_a: np.ndarray, v2c, c2v, eps: float, max_sweeps: int):
    """Fixed-point sweeps for a batch of I_A values; returns final states."""
    left_term = (j_inv_fn(1.0 - i_a) ** 2)[:, None]
    active = np.arange(i_a.size)
    for sweep in range(max_sweeps):
        if active.size == 0:
            break
        lt = left_term[active]
        new, _ = _check_out(lay, v2c[active], lt)
        resid = np.sqrt(((new - c2v[active]) ** 2).sum(axis=1))
        c2v[active] = new
        # the zero initialisation is not a computed set; never stop on sweep 0
        done = (resid < eps) & (sweep > 0)
        still = active[~done]
        if still.size:
            v2c[still] = _var_out(lay, c2v[still])
        active = still
    else:
        if active.size:
            raise ExitConvergenceError(
                f"fixed point not reached after {max_sweeps} sweeps (residual {resid.max():.3g})")
    return v2c, c2v


def structured_exit_points(comp: StructuredComponent, i_a, eps: float = EPS_THRESH,
                           max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """Vectorised cold-start solver; each I_A value is an independent problem."""
    ia = np.atleast_1d(np.asarray(i_a, dtype=float))
    if np.any(ia < 0) or np.any(ia > 1):
        raise ValueError("I_A must lie in [0, 1]")
    lay = _Layout(comp)
    shape = (ia.size, lay.ce.size)
    v2c, _ = _solve(lay, ia, np.zeros(shape), np.zeros(shape), eps, max_sweeps)
    return _left_out(lay, v2c, (j_inv_fn(1.0 - ia) ** 2)[:, None])


def structured_exit_point(comp: StructuredComponent, i_a_in: float, **kw) -> float:
    """Extrinsic MI on the left edges for a-priori MI ``i_a_in``."""
    return float(structured_exit_points(comp, [i_a_in], **kw)[0])


def structured_exit_curve(comp: StructuredComponent, num_points: int = 10000,
                          warm_start: bool = False, chunk: int = 4096,
                          eps: float = EPS_THRESH) -> ExitCurve:
    """Tabulate the structured EXIT function on the uniform grid over [0, 1).

    Cold start (default) solves every grid point from zero in batches.  With
    ``warm_start`` the points are solved in order, each starting from the
    previous point's fixed point, which lies below the next one.
    """
    grid = uniform_grid(num_points)
    if not warm_start:
        out = np.concatenate([structured_exit_points(comp, grid[i:i + chunk], eps)
                              for i in range(0, grid.size, chunk)])
        return ExitCurve(grid, np.maximum.accumulate(out))
    lay = _Layout(comp)
    v2c = np.zeros((1, lay.ce.size))
    c2v = np.zeros((1, lay.ce.size))
    out = np.empty(grid.size)
    for k, x in enumerate(grid):
        v2c, c2v = _solve(lay, np.array([x]), v2c, c2v, eps, MAX_SWEEPS)
        out[k] = _left_out(lay, v2c, np.array([[j_inv_fn(1.0 - x) ** 2]]))[0]
    return ExitCurve(grid, np.maximum.accumulate(out))


def unstructured_exit_curve(lam: DegreeDistribution, chan: ChannelParam | None,
                            num_points: int = 10000, punctured: bool = False) -> ExitCurve:
    grid = uniform_grid(num_points)
    return ExitCurve(grid, exit_variable(lam, grid, chan, punctured))


# Monte-Carlo oracle ---------------------------------------------------------

LLR_CLIP = 50.0


def _phi(x):
    x = np.clip(x, 1e-12, LLR_CLIP)
    return np.log1p(2.0 / np.expm1(x))


def _mi_estimate(llr) -> np.ndarray:
    """Per-row MI of LLRs for the all-zero codeword (bit sign +1)."""
    return 1.0 - np.logaddexp(0.0, -llr).mean(axis=-1) / math.log(2.0)


def monte_carlo_exit_points(comp: StructuredComponent, i_a, num_samples: int,
                            seed=None, max_sweeps: int = 200,
                            stability: float = 1e-4,
                            max_batch: int = 4_000_000) -> np.ndarray:
    """Monte-Carlo estimate of the structured EXIT function at each ``i_a``.

    The component is lifted ``Q = ceil(num_samples / |E_L|)`` times with
    random permutations per protograph edge, the all-zero word is sent,
    left edges receive consistent-Gaussian a-priori LLRs and flooding
    sum-product runs until messages move less than ``stability``.  Points
    are processed in batches of at most ``max_batch`` messages, each with
    its own child seed, so results depend only on ``seed`` and the batching.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    ia = np.atleast_1d(np.asarray(i_a, dtype=float))
    q = max(1, math.ceil(num_samples / comp.num_left_edges))
    per_point = q * (comp.num_right_edges + comp.num_left_edges)
    step = max(1, max_batch // per_point)
    groups = [ia[k:k + step] for k in range(0, ia.size, step)]
    seeds = np.random.SeedSequence(seed).spawn(len(groups))
    return np.concatenate([_mc_batch(comp, g, q, np.random.default_rng(sd),
                                     max_sweeps, stability)
                           for g, sd in zip(groups, seeds)])


def _mc_batch(comp, ia, q, rng, max_sweeps, stability):
    p = ia.size
    base = comp.proto.base
    m, n = base.shape
    ce, ve = expand_edges(base)
    perms = np.array([rng.permutation(q) for _ in range(ce.size)])
    chk = (ce[:, None] * q + np.arange(q)[None, :]).reshape(-1)
    var = (ve[:, None] * q + perms).reshape(-1)
    n_chk, n_var = m * q, n * q
    lchk = np.repeat(np.arange(m), comp.left_sockets)
    lchk = (lchk[:, None] * q + np.arange(q)[None, :]).reshape(-1)
    # a-priori and channel observations, one row per I_A value
    sig = np.where(ia >= 1.0, np.inf, j_inv_fn(np.minimum(ia, 1.0)))[:, None]
    z = rng.standard_normal((p, lchk.size))
    with np.errstate(invalid="ignore"):
        la = np.where(np.isinf(sig), LLR_CLIP, sig * sig / 2.0 + sig * z)
    la = np.clip(la, -LLR_CLIP, LLR_CLIP)
    s2 = comp.chan.noise_variance
    y = 1.0 + math.sqrt(s2) * rng.standard_normal((p, n_var))
    lch = 2.0 * y / s2
    lch[:, np.repeat(comp.proto.punctured, q)] = 0.0

    row_c = np.arange(p)[:, None] * n_chk
    row_v = np.arange(p)[:, None] * n_var
    chk_flat = (row_c + chk).reshape(-1)
    lchk_flat = (row_c + lchk).reshape(-1)
    var_flat = (row_v + var).reshape(-1)

    def check_pass(v2c):
        """Check totals: sum of phi magnitudes and sign parity per check."""
        mag = np.bincount(chk_flat, _phi(np.abs(v2c)).reshape(-1), p * n_chk)
        mag += np.bincount(lchk_flat, _phi(np.abs(la)).reshape(-1), p * n_chk)
        neg = np.bincount(chk_flat, (v2c < 0).reshape(-1), p * n_chk)
        neg += np.bincount(lchk_flat, (la < 0).reshape(-1), p * n_chk)
        return mag.reshape(p, n_chk), neg.reshape(p, n_chk).astype(np.int64) & 1

    def extrinsic(msg, idx, mag, neg):
        rest = np.maximum(mag[np.arange(p)[:, None], idx] - _phi(np.abs(msg)), 0.0)
        par = neg[np.arange(p)[:, None], idx] ^ (msg < 0)
        return np.where(par, -1.0, 1.0) * np.minimum(_phi(rest), LLR_CLIP)

    v2c = lch[:, var]
    c2v = np.zeros_like(v2c)
    for _ in range(max_sweeps):
        mag, neg = check_pass(v2c)
        new = extrinsic(v2c, chk, mag, neg)
        moved = np.abs(new - c2v).max() if new.size else 0.0
        c2v = new
        tot = lch + np.bincount(var_flat, c2v.reshape(-1), p * n_var).reshape(p, n_var)
        v2c = np.clip(tot[:, var] - c2v, -LLR_CLIP, LLR_CLIP)
        if moved < stability:
            break
    mag, neg = check_pass(v2c)
    out = extrinsic(la, lchk, mag, neg)
    return _mi_estimate(out)


def monte_carlo_exit(comp: StructuredComponent, i_a_in: float, num_samples: int,
                     seed=None) -> float:
    return float(monte_carlo_exit_points(comp, [i_a_in], num_samples, seed)[0])


def curve_mae(curve: ExitCurve, i_a: Sequence[float], i_e: Sequence[float]) -> float:
    """Maximum absolute error of ``curve`` against reference points."""
    return float(np.max(np.abs(curve(np.asarray(i_a)) - np.asarray(i_e))))


def write_curve(curve: ExitCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i_a", "i_e"])
        for a, e in zip(curve.i_a, curve.i_e):
            w.writerow([f"{a:.17g}", f"{e:.17g}"])


def read_curve(path) -> ExitCurve:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return ExitCurve([float(r["i_a"]) for r in rows], [float(r["i_e"]) for r in rows])
