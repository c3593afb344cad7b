import math

import numpy as np
import pytest

from e2rc.protograph import Protograph
from e2rc.structure import (achievable_rates, build_h2_base, lower_triangular_order,
                            puncture_mask, puncture_mask_for_rate, puncture_order,
                            replicated_h2_base, sr_classify)


def test_h2_base_m1():
    g = build_h2_base(1)
    assert g.base.tolist() == [[1]]
    assert sr_classify(g).level == {0: 1}
    assert puncture_order(sr_classify(g)) == [0]


def test_h2_base_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        build_h2_base(6)


@pytest.mark.parametrize("t", range(1, 7))
def test_h2_halving_census(t):
    m = 2 ** t
    g = build_h2_base(m)
    census = sr_classify(g).census()
    for k in range(1, t + 1):
        assert census[k] == m // 2 ** k
    # the leftover degree-1 node is the single deepest one
    assert sum(census.values()) == m
    assert census[t + 1] == 1


@pytest.mark.parametrize("m", [2, 8, 32])
def test_h2_columns_and_triangular(m):
    g = build_h2_base(m)
    assert set(g.base.sum(axis=0).tolist()) <= {1, 2}
    order = lower_triangular_order(g.base)
    assert order is not None
    rows, cols = order
    tri = g.base[np.ix_(rows, cols)]
    assert np.all(np.triu(tri, 1) == 0)


def test_replicated_base_has_double_edge():
    g = replicated_h2_base(8)
    h = build_h2_base(8)
    diff = g.base - h.base
    assert diff.sum() == 1 and g.base.max() == 2


def test_fig2_gadget_levels():
    # one systematic node; checks chain three parity nodes
    base = np.array([[1, 1, 0, 0],
                     [1, 1, 1, 0],
                     [1, 0, 1, 1]])
    g = Protograph(base, ("s", "p", "p", "p"))
    assert sr_classify(g).level == {1: 1, 2: 2, 3: 3}


def test_single_check_degree_one():
    g = Protograph(np.array([[1, 1]]), ("s", "p"))
    assert sr_classify(g).level == {1: 1}


def test_unrecoverable_node_is_infinite():
    g = Protograph(np.array([[1, 2]]), ("s", "p"))
    prof = sr_classify(g)
    assert prof.level[1] == math.inf
    with pytest.raises(ValueError):
        puncture_order(prof)


def test_puncture_order_m8():
    prof = sr_classify(build_h2_base(8))
    order = puncture_order(prof)
    assert sorted(order) == list(range(8))
    ones = {v for v, k in prof.level.items() if k == 1}
    assert set(order[:4]) == ones


def test_rate_masks_m8():
    assert not puncture_mask_for_rate(8, 8, "8/16").any()
    m12 = puncture_mask_for_rate(8, 8, "8/12")
    prof = sr_classify(build_h2_base(8))
    assert set(np.flatnonzero(m12)) == {v for v, k in prof.level.items() if k == 1}
    m9 = puncture_mask_for_rate(8, 8, "8/9")
    assert m9.sum() == 7
    deepest = max(prof.level, key=lambda v: (prof.level[v], -v))
    assert not m9[deepest]
    with pytest.raises(ValueError, match="achievable"):
        puncture_mask_for_rate(8, 8, "3/4")


def test_masks_nested():
    g = build_h2_base(32)
    masks = [puncture_mask(g, p) for p in range(32)]
    for a, b in zip(masks, masks[1:]):
        assert np.all(b[a])
        assert b.sum() == a.sum() + 1
    assert len(achievable_rates(32, 32)) == 32
