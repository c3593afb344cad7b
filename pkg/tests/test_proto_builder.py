import numpy as np
import pytest

from e2rc.fixtures import starting_protograph
from e2rc.proto_builder import (SplitError, SplitPattern, build_family, check_split,
                                enumerate_equal_splits, rank_starting_protographs)
from e2rc.proto_de import rca_thresholds
from e2rc.protograph import Protograph
from e2rc.structure import sr_classify

S01 = (10, 4, 2, 1, 2, 1, 2, 1, 2)
S02 = (10, 4, 1, 2, 1, 2, 1, 2, 1)


def random_start(rng, m0):
    n0 = int(rng.integers(m0 + 2, m0 + 6))
    base = rng.integers(1, 5, size=(m0, n0))
    return Protograph(base, ("s",) * n0)


def random_threshold_fn(seed):
    rng = np.random.default_rng(seed)
    return lambda graphs: rng.random(len(graphs)).tolist()


def test_stage_one_split_of_start():
    g = starting_protograph()
    pats = enumerate_equal_splits(g.base[0])
    assert len(pats) == 128
    assert all(p.is_equal_split for p in pats)
    assert SplitPattern(S01, S02) in pats
    child = check_split(g, 0, SplitPattern(S01, S02))
    assert child.base.tolist() == [list(S01) + [1], list(S02) + [1]]
    assert child.roles[-1] == "p"
    assert child.rate == pytest.approx(8 / 10)


def test_enumeration_edge_cases():
    assert len(enumerate_equal_splits([4, 2, 6])) == 1
    assert len(enumerate_equal_splits([3, 3, 3], budget=5)) == 5
    with pytest.raises(ValueError):
        enumerate_equal_splits([3], budget=0)


def test_bad_splits_rejected():
    g = starting_protograph()
    with pytest.raises(SplitError):
        check_split(g, 0, SplitPattern((1,) * 9, (1,) * 9))
    s0 = tuple(int(x) for x in g.base[0])
    with pytest.raises(SplitError):
        check_split(g, 0, SplitPattern(s0, (0,) * 9))
    with pytest.raises(SplitError):
        SplitPattern((1, -1), (0, 2))


@pytest.mark.parametrize("m0,k", [(1, 1), (1, 2), (2, 2), (1, 3), (3, 3)])
def test_sr_census_after_k_stages(m0, k):
    rng = np.random.default_rng(100 * m0 + k)
    start = random_start(rng, m0)
    fam = build_family(start, k, threshold_fn=random_threshold_fn(k))
    census = sr_classify(fam.mother).census()
    want = {j: m0 * 2 ** (k - j) for j in range(1, k + 1)}
    assert census == want


def test_stages_zero_returns_start():
    g = starting_protograph()
    fam = build_family(g, 0)
    assert fam.mother == g
    assert len(fam.masks()) == 1 and fam.stage_log == []


def test_family_masks_are_nested():
    rng = np.random.default_rng(5)
    fam = build_family(random_start(rng, 2), 2, threshold_fn=random_threshold_fn(1))
    masks = fam.masks()
    assert masks[0].sum() == len(fam.addition_order)
    for a, b in zip(masks, masks[1:]):
        assert np.all(b <= a)
    rates = fam.rates()
    assert rates == sorted(rates, reverse=True)


def test_split_then_puncture_keeps_threshold():
    rng = np.random.default_rng(11)
    g = random_start(rng, 1)
    pat = enumerate_equal_splits(g.base[0])[0]
    child = check_split(g, 0, pat)
    punct = child.with_punctured([False] * g.num_vars + [True])
    a, b = rca_thresholds([g, punct])
    assert abs(a - b) <= 2e-4


def test_two_node_search_matches_brute_force():
    ranked = rank_starting_protographs(1, 2, 8, top=5)
    brute = []
    for d1 in range(3, 9):
        for d2 in range(3, d1 + 1):
            brute.append(Protograph([[d1, d2]], ("s", "s")))
    ths = rca_thresholds(brute)
    best = min(t for t in ths if t is not None)
    assert ranked[0][0] == pytest.approx(best, abs=1e-9)
    dbs = [t for t, _ in ranked]
    assert dbs == sorted(dbs) and len(ranked) == 5
