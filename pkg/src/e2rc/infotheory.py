"""Mutual-information kernels for the binary-input AWGN channel.

The J-function maps the standard deviation ``sigma`` of a consistent
Gaussian LLR (mean ``sigma**2 / 2``, variance ``sigma**2``) to the mutual
information between the LLR and the transmitted bit.  It is tabulated once
per process by quadrature of the defining integral and then evaluated by
linear interpolation, which keeps the absolute error below 1e-6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np
from scipy.optimize import brentq

SIGMA_STEP = 0.002
SIGMA_MAX = 25.0
# one-sided tolerance used when comparing MI values against 1
MI_ONE = 1.0 - 1e-15


@lru_cache(maxsize=1)
def _table() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Tabulate J on a uniform sigma grid by trapezoidal Gaussian quadrature.

    Returns ``(sigma, J(sigma), Jinv_x, Jinv_sigma)`` where the last pair is
    the strictly increasing part of the map used for inversion.
    """
    sigma = np.arange(0.0, SIGMA_MAX + SIGMA_STEP / 2, SIGMA_STEP)
    z = np.linspace(-10.0, 10.0, 2001)
    w = np.exp(-0.5 * z * z)
    w /= w.sum()
    loss = np.empty_like(sigma)
    for lo in range(0, sigma.size, 512):
        s = sigma[lo:lo + 512, None]
        llr = 0.5 * s * s + s * z
        loss[lo:lo + 512] = np.logaddexp(0.0, -llr) @ w
    j = 1.0 - loss / math.log(2.0)
    j[0] = 0.0
    j = np.maximum.accumulate(np.clip(j, 0.0, 1.0))
    keep = np.concatenate(([True], np.diff(j) > 0))
    for arr in (sigma, j):
        arr.setflags(write=False)
    return sigma, j, j[keep], sigma[keep]


def j_table() -> tuple[np.ndarray, np.ndarray]:
    """The (sigma, J(sigma)) tabulation grid."""
    s, j, _, _ = _table()
    return s, j


def j_fn(sigma):
    """Vectorised J without argument checks (hot path)."""
    s, j, _, _ = _table()
    return np.interp(sigma, s, j)


def j_inv_fn(mi):
    """Vectorised J^-1, clamped: values >= 1 map to the largest tabulated sigma."""
    _, _, jx, js = _table()
    return np.interp(mi, jx, js)


def j_function(sigma):
    """Mutual information of a consistent Gaussian LLR with std ``sigma``."""
    arr = np.asarray(sigma, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("j_function: sigma must be >= 0")
    out = j_fn(arr)
    return float(out) if out.ndim == 0 else out


def j_inverse(mi):
    """Inverse of :func:`j_function` on ``[0, 1)``.

    ``mi == 1`` means perfect information and has no finite preimage; callers
    have to special-case it, so it raises like any other out-of-domain value.
    """
    arr = np.asarray(mi, dtype=float)
    if np.any(arr < 0) or np.any(arr >= 1) or np.any(np.isnan(arr)):
        raise ValueError("j_inverse: mutual information must lie in [0, 1)")
    out = j_inv_fn(arr)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ChannelParam:
    """BIAWGN channel with BPSK +-1 signalling and noise variance ``noise_variance``."""

    noise_variance: float

    def __post_init__(self):
        if not self.noise_variance > 0:
            raise ValueError("noise_variance must be > 0")

    def channel_msg_variance(self, punctured: bool = False) -> float:
        return 0.0 if punctured else 4.0 / self.noise_variance

    @classmethod
    def from_ebn0(cls, ebn0: float, rate: float) -> "ChannelParam":
        return cls(1.0 / (2.0 * rate * 10.0 ** (ebn0 / 10.0)))


@dataclass(frozen=True)
class DegreeDistribution:
    """Edge-perspective degree distribution ``{degree: fraction}``."""

    entries: Mapping[int, float]

    def __post_init__(self):
        clean = {}
        for d, f in dict(self.entries).items():
            d = int(d)
            if d < 1:
                raise ValueError(f"degree {d} < 1")
            if f < -1e-12:
                raise ValueError(f"negative fraction for degree {d}")
            if f > 0:
                clean[d] = float(f)
        total = sum(clean.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"fractions sum to {total!r}, expected 1")
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    @classmethod
    def normalized(cls, entries: Mapping[int, float]) -> "DegreeDistribution":
        total = sum(v for v in entries.values() if v > 0)
        return cls({d: max(v, 0.0) / total for d, v in entries.items()})

    @classmethod
    def parse(cls, text: str) -> "DegreeDistribution":
        """Parse ``"3:0.4243,7:0.5757"``; fractions are renormalised."""
        pairs = [p.split(":") for p in text.replace(" ", "").split(",") if p]
        return cls.normalized({int(d): float(f) for d, f in pairs})

    def __str__(self) -> str:
        return ",".join(f"{d}:{f:.6f}" for d, f in self.entries.items())

    @property
    def max_degree(self) -> int:
        return max(self.entries)

    def inverse_mean(self) -> float:
        """sum(fraction / degree): nodes per edge."""
        return sum(f / d for d, f in self.entries.items())

    def degrees(self) -> np.ndarray:
        return np.array(list(self.entries), dtype=float)

    def fractions(self) -> np.ndarray:
        return np.array(list(self.entries.values()), dtype=float)


def biawgn_capacity(chan: ChannelParam) -> float:
    """Capacity in bits per channel use; equals J(2 / sigma_n)."""
    return float(j_fn(2.0 / math.sqrt(chan.noise_variance)))


def shannon_noise_for_rate(rate: float) -> ChannelParam:
    """Noise variance at which the BIAWGN capacity equals ``rate``."""
    if not 0.0 < rate < 1.0:
        raise ValueError("rate must lie in (0, 1)")
    # capacity(sigma2) is decreasing; bracket in log-domain
    f = lambda lv: biawgn_capacity(ChannelParam(math.exp(lv))) - rate
    lv = brentq(f, math.log(1e-4), math.log(1e4), xtol=1e-13, rtol=1e-13)
    return ChannelParam(math.exp(lv))


def ebn0_db(chan: ChannelParam, rate: float) -> float:
    """Eb/N0 in dB for unit-energy BPSK: 10 log10(1 / (2 R sigma_n^2))."""
    return 10.0 * math.log10(1.0 / (2.0 * rate * chan.noise_variance))


def shannon_ebn0_db(rate: float) -> float:
    return ebn0_db(shannon_noise_for_rate(rate), rate)


def gap_db(chan: ChannelParam, rate: float) -> float:
    return ebn0_db(chan, rate) - shannon_ebn0_db(rate)


def exit_variable(lam: DegreeDistribution, i_a, chan: ChannelParam | None,
                  punctured: bool = False):
    """Variable-node EXIT function.

    ``sum_d lam_d J(sqrt((d - 1) J^-1(i_a)^2 + sigma_ch^2))``.  ``chan=None``
    or ``punctured=True`` means no channel observation.
    """
    ia = np.asarray(i_a, dtype=float)
    s_ch = 0.0 if chan is None else chan.channel_msg_variance(punctured)
    sat = ia >= MI_ONE
    a2 = j_inv_fn(np.where(sat, 0.0, ia)) ** 2
    d, f = lam.degrees(), lam.fractions()
    terms = j_fn(np.sqrt(np.multiply.outer(a2, d - 1.0) + s_ch))
    out = terms @ f
    out = np.where(sat, 1.0, out)
    return float(out) if out.ndim == 0 else out


def exit_check(rho: DegreeDistribution, i_a):
    """Check-node EXIT function ``1 - sum_d rho_d J(sqrt(d - 1) J^-1(1 - i_a))``."""
    ia = np.asarray(i_a, dtype=float)
    b = j_inv_fn(1.0 - ia)
    d, f = rho.degrees(), rho.fractions()
    terms = j_fn(np.multiply.outer(b, np.sqrt(d - 1.0)))
    out = np.clip(1.0 - terms @ f, 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out
