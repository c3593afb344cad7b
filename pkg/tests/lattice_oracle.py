"""Brute-force degree optimisation over a 0.01 lattice of the simplex."""

import itertools

import numpy as np

from e2rc.exit_engine import uniform_grid
from e2rc.infotheory import DegreeDistribution, exit_variable


def lattice_optimum(chan, inv, degrees, grid, margin, step=0.01):
    """Best sum(lambda/d) over lattice points whose tunnel stays open.

    The variable-side curve comes from the closed-form EXIT function, not
    from the LP rows.  Returns (objective, lambda) or (None, None).
    """
    x = uniform_grid(grid)
    x = x[x < inv.top]
    need = inv(x)
    need = need + np.minimum(margin, 0.5 * (1.0 - need))
    curves = {d: exit_variable(DegreeDistribution({d: 1.0}), x, chan) for d in degrees}
    units = int(round(1 / step))
    best, best_lam = None, None
    for head in itertools.product(range(units + 1), repeat=len(degrees) - 1):
        if sum(head) > units:
            continue
        counts = list(head) + [units - sum(head)]
        lam = np.array(counts) / units
        ie = sum(f * curves[d] for f, d in zip(lam, degrees))
        if np.all(ie > need):
            obj = float(np.sum(lam / np.asarray(degrees)))
            if best is None or obj > best:
                best, best_lam = obj, lam
    return best, best_lam
