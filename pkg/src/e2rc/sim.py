"""Monte-Carlo BER/FER harness for lifted codes over BIAWGN with puncturing."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .codec import _graph, bp_decode_batch, encode, encoder_plan
from .lifting import LiftedCode
from .structure import puncture_mask

MIN_FRAME_ERRORS = 100
MAX_FRAMES = 10_000_000
BATCH = 64
CSV_FIELDS = ("ebn0_db", "rate", "frames", "bit_errors", "frame_errors", "ber", "fer", "avg_iters")


@dataclass
class SimRow:
    ebn0_db: float
    rate: float
    frames: int = 0
    bit_errors: int = 0
    frame_errors: int = 0
    iterations: int = 0
    info_bits: int = 0

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.info_bits) if self.frames else float("nan")

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else float("nan")

    @property
    def avg_iters(self) -> float:
        return self.iterations / self.frames if self.frames else float("nan")

    def add(self, frames, bit_errors, frame_errors, iterations) -> None:
        self.frames += frames
        self.bit_errors += bit_errors
        self.frame_errors += frame_errors
        self.iterations += iterations

    def as_dict(self) -> dict:
        return {"ebn0_db": self.ebn0_db, "rate": self.rate, "frames": self.frames,
                "bit_errors": self.bit_errors, "frame_errors": self.frame_errors,
                "ber": self.ber, "fer": self.fer, "avg_iters": self.avg_iters}


@dataclass
class SimResult:
    rate: float
    rows: list = field(default_factory=list)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
            w.writeheader()
            for r in self.rows:
                d = r.as_dict()
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in d.items()})

    @classmethod
    def read_csv(cls, path) -> "SimResult":
        with open(path, newline="") as fh:
            recs = list(csv.DictReader(fh))
        if not recs:
            raise ValueError(f"{path}: no rows")
        res = cls(float(recs[0]["rate"]))
        for d in recs:
            frames = int(d["frames"])
            ber = float(d["ber"])
            bits = int(round(int(d["bit_errors"]) / (ber * frames))) if ber > 0 else 1
            row = SimRow(float(d["ebn0_db"]), float(d["rate"]), info_bits=bits)
            row.add(frames, int(d["bit_errors"]), int(d["frame_errors"]),
                    int(round(float(d["avg_iters"]) * frames)))
            res.rows.append(row)
        return res

    def ber_curve(self):
        return (np.array([r.ebn0_db for r in self.rows]),
                np.array([r.ber for r in self.rows]))


def noise_variance(ebn0_db: float, rate: float) -> float:
    return 1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0))


def code_rate(code: LiftedCode, bit_mask) -> float:
    k = encoder_plan(code).info_bits.size
    return k / int(np.count_nonzero(~np.asarray(bit_mask, dtype=bool)))


def _batch(code, graph, punct, rate, ebn0_db, frames, seed_seq, max_iters):
    rng = np.random.default_rng(seed_seq)
    plan = encoder_plan(code)
    msg = rng.integers(0, 2, size=(frames, plan.info_bits.size), dtype=np.int64)
    x = encode(code, msg)
    sigma2 = noise_variance(ebn0_db, rate)
    y = (1.0 - 2.0 * x) + rng.normal(0.0, np.sqrt(sigma2), size=x.shape)
    llr = 2.0 * y / sigma2
    llr[:, punct] = 0.0
    res = bp_decode_batch(code.h, llr, max_iters, graph)
    err = res.bits[:, plan.info_bits] != x[:, plan.info_bits]
    per_frame = err.sum(axis=1)
    return frames, int(per_frame.sum()), int(np.count_nonzero(per_frame)), int(res.iterations.sum())


def simulate(code: LiftedCode, masks, ebn0_list, min_frame_errors: int = MIN_FRAME_ERRORS,
             max_frames: int = MAX_FRAMES, seed: int = 0, threads: int = 1,
             batch: int = BATCH, max_iters: int = 100, stop_at_clean: bool = False):
    """One SimResult per puncture mask (protograph-level masks).

    Each batch draws from its own generator keyed by (mask, Eb/N0, batch)
    index, so counts only depend on the seed and the number of batches run.
    Stopping is tested after every round of ``threads`` batches.  With
    ``stop_at_clean`` a rate skips the remaining (higher) Eb/N0 points once a
    point ends with zero bit errors.
    """
    graph = _graph(code.h)
    encoder_plan(code)
    out = []
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        for ri, mask in enumerate(masks):
            punct = code.bit_mask(mask)
            rate = code_rate(code, punct)
            res = SimResult(rate)
            for ei, ebn0 in enumerate(ebn0_list):
                row = SimRow(float(ebn0), rate, info_bits=encoder_plan(code).info_bits.size)
                b = 0
                while row.frame_errors < min_frame_errors and row.frames < max_frames:
                    jobs = []
                    for _ in range(max(threads, 1)):
                        n = min(batch, max_frames - row.frames - sum(j[0] for j in jobs))
                        if n <= 0:
                            break
                        ss = np.random.SeedSequence(seed, spawn_key=(ri, ei, b))
                        jobs.append((n, ss))
                        b += 1
                    args = [(code, graph, punct, rate, ebn0, n, ss, max_iters) for n, ss in jobs]
                    parts = (pool.map(lambda a: _batch(*a), args) if pool
                             else [_batch(*a) for a in args])
                    for p in parts:
                        row.add(*p)
                res.rows.append(row)
                if stop_at_clean and row.bit_errors == 0:
                    break
            out.append(res)
    finally:
        if pool:
            pool.shutdown()
    return out


def measured_threshold(result: SimResult, target_ber: float = 1e-4) -> float:
    """Eb/N0 where the BER curve first drops to ``target_ber`` (log-linear interpolation)."""
    x, y = result.ber_curve()
    order = np.argsort(x)
    x, y = x[order], y[order]
    for i in range(len(x)):
        if y[i] <= target_ber:
            if i == 0:
                return float(x[0])
            y0 = np.log10(max(y[i - 1], 1e-300))
            y1 = np.log10(max(y[i], 1e-300))
            t = (np.log10(target_ber) - y0) / (y1 - y0) if y1 != y0 else 1.0
            return float(x[i - 1] + t * (x[i] - x[i - 1]))
    return float("inf")


def rate_masks(proto, rates) -> list:
    """Protograph puncture masks for rates given as 'k/n' strings or Fractions."""
    out = []
    for r in rates:
        r = Fraction(r)
        n_t = proto.num_info / r
        if n_t.denominator != 1:
            raise ValueError(f"rate {r} not reachable with whole protograph nodes")
        out.append(puncture_mask(proto, proto.num_vars - int(n_t)))
    return out
