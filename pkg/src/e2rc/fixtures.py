"""Reference protographs and degree distributions used by tests and jobs."""

import numpy as np

from .exit_engine import StructuredComponent
from .infotheory import ChannelParam, DegreeDistribution
from .protograph import Protograph
from .structure import build_h2_base, replicated_h2_base

START_DEGREES = (20, 8, 3, 3, 3, 3, 3, 3, 3)

# 8 x 16 mother protograph; columns 0-8 are old nodes, 9-15 the degree-2
# parity nodes added by check-splitting
PROTOGRAPH_1 = np.array([
    [3, 1, 1, 0, 1, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0],
    [2, 1, 0, 1, 0, 0, 1, 0, 1, 1, 1, 0, 1, 0, 0, 0],
    [3, 1, 0, 0, 0, 0, 1, 0, 1, 0, 1, 0, 0, 0, 1, 0],
    [2, 1, 1, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0],
    [3, 1, 0, 0, 1, 1, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0],
    [2, 1, 0, 1, 0, 0, 1, 0, 0, 1, 0, 1, 0, 1, 0, 0],
    [3, 1, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1],
    [2, 1, 1, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1],
])
PROTOGRAPH_1_GAPS = {  # rate numerator 8 over denominator -> gap to capacity, dB
    9: 0.235, 10: 0.253, 11: 0.270, 12: 0.246,
    13: 0.278, 14: 0.275, 15: 0.274, 16: 0.270,
}

CODE0_LAMBDA = DegreeDistribution({3: 0.4243, 7: 0.5757})
CODE0_RHO = DegreeDistribution({6: 0.339623, 7: 0.660377})
CODE1_LAMBDA = DegreeDistribution({3: 0.305825, 7: 0.213474, 8: 0.181737, 20: 0.298964})
CODE2_LAMBDA = DegreeDistribution({3: 0.309090, 6: 0.278794, 20: 0.412116})
CODE1_THRESHOLDS_DB = (0.40, 0.85, 1.40, 2.45, 3.44)
CODE2_GAPS_DB = (0.29, 0.30, 0.25, 0.29, 0.295)
JOINT_RATES = ("8/16", "8/14", "8/12", "8/10", "8/9")
TABLE1_NOISE_VARIANCE = 0.95775


def starting_protograph() -> Protograph:
    """One check, nine old variables.

    The last degree-3 node is the parity bit of the high-rate code; it is
    tagged as an old ("s") node so it stays transmitted at every rate.
    """
    return Protograph(np.array([START_DEGREES]), ("s",) * 9, check_labels=("c0",),
                      var_labels=tuple(f"v{j}" for j in range(9)))


def protograph_1() -> Protograph:
    return Protograph(PROTOGRAPH_1, ("s",) * 9 + ("p",) * 7,
                      var_labels=tuple(f"v{j}" for j in range(16)))


def regular_36() -> Protograph:
    return Protograph(np.array([[3, 3]]), ("s", "s"))


def e2rc_component(m: int = 128, check_degree: int = 8,
                   chained: bool = True) -> StructuredComponent:
    """E2RC parity base of size ``m``, all checks of total degree ``check_degree``.

    ``chained=False`` keeps the plain tree (one degree-1 node per copy); the
    size-128, degree-8 comparison needs it because the chained base puts
    nine parity edges on its first check.
    """
    h2 = replicated_h2_base(m) if chained else build_h2_base(m)
    return StructuredComponent(h2, check_degree - h2.base.sum(axis=1))


def table1_component() -> StructuredComponent:
    return e2rc_component(128, 8, chained=False).at(ChannelParam(TABLE1_NOISE_VARIANCE))


def ira_component(m: int = 4, check_degree: int = 8) -> StructuredComponent:
    """Accumulator ring: check i joins parity nodes i-1 and i (mod m)."""
    base = np.zeros((m, m), dtype=np.int64)
    for i in range(m):
        base[i, i] += 1
        base[i, (i - 1) % m] += 1
    return StructuredComponent(Protograph(base, ("p",) * m), np.full(m, check_degree - 2))


def code_checks(rho: DegreeDistribution, m: int = 32) -> np.ndarray:
    """Per-check total degrees realising an edge-perspective check distribution.

    Node fractions are rounded to whole checks; the larger degrees go to the
    checks with the most parity edges so the left degrees stay concentrated.
    """
    h2 = replicated_h2_base(m)
    degs = np.array(sorted(rho.entries))
    node = np.array([rho.entries[d] / d for d in degs])
    counts = np.floor(node / node.sum() * m + 0.5).astype(int)
    counts[-1] = m - counts[:-1].sum()
    per_check = np.repeat(degs, counts)  # ascending
    order = np.argsort(h2.base.sum(axis=1), kind="stable")
    out = np.empty(m, dtype=int)
    out[order] = per_check
    return out
