import numpy as np
import pytest

from e2rc.fixtures import protograph_1
from e2rc.lifting import (LiftError, circulant_matrix, count_short_cycles, lift, read_alist,
                          write_alist)
from e2rc.protograph import Protograph, expand_edges


def test_q1_is_binary_image():
    g = Protograph([[1, 1, 0], [0, 1, 1]], ("s", "p", "p"))
    code = lift(g, 1)
    assert code.h.toarray().tolist() == g.base.tolist()
    with pytest.raises(LiftError):
        lift(protograph_1(), 1)
    with pytest.raises(LiftError):
        lift(Protograph([[3, 1]], ("s", "p")), 2)
    with pytest.raises(ValueError):
        lift(g, 0)


def test_large_lift_has_girth_six():
    code = lift(protograph_1(), 1024, seed=3)
    assert code.n == 16384
    assert count_short_cycles(code.h) == 0


def test_row_and_column_weights():
    g = protograph_1()
    code = lift(g, 64, seed=1)
    h = code.h.tocsr()
    rows = np.diff(h.indptr)
    cols = np.diff(h.tocsc().indptr)
    assert np.array_equal(rows, np.repeat(g.base.sum(axis=1), 64))
    assert np.array_equal(cols, np.repeat(g.base.sum(axis=0), 64))
    assert h.max() == 1


def test_column_permutation_equivariance():
    g = protograph_1()
    code = lift(g, 64, seed=2)
    rng = np.random.default_rng(0)
    perm = rng.permutation(g.num_vars)
    gp = g.permute_vars(perm)
    where = np.argsort(perm)             # old column -> new column
    edges = code.edges.copy()
    edges[:, 1] = where[edges[:, 1]]
    hp = circulant_matrix(gp, 64, edges, code.shifts)
    cols = np.concatenate([np.arange(j * 64, (j + 1) * 64) for j in perm])
    assert (hp != code.h[:, cols]).nnz == 0


def test_small_q_needs_relaxed_mode():
    g = protograph_1()
    with pytest.raises(LiftError):
        lift(g, 4, seed=0, retries=2)
    code = lift(g, 4, seed=0, strict=False)
    assert code.h.max() == 1


def test_eight_cycle_mode_keeps_girth():
    code = lift(protograph_1(), 64, seed=4, avoid_eight=True)
    assert count_short_cycles(code.h) == 0


def test_count_short_cycles_small():
    h = np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1]])
    # rows (0,1) share 2 columns, (1,2) share 2, (0,2) share 1
    assert count_short_cycles(h) == 2


def test_alist_roundtrip(tmp_path):
    code = lift(protograph_1(), 16, seed=5, strict=False)
    write_alist(code.h, tmp_path / "c.alist")
    back = read_alist(tmp_path / "c.alist")
    assert back.shape == code.h.shape
    assert (back != code.h).nnz == 0
    text = (tmp_path / "c.alist").read_text().split("\n")
    text[4] = "1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0"[: len(text[4])]
    (tmp_path / "bad.alist").write_text("\n".join(text))
    with pytest.raises(ValueError):
        read_alist(tmp_path / "bad.alist")


def test_shift_table():
    code = lift(protograph_1(), 8, seed=1, strict=False)
    lines = code.shift_table().strip().split("\n")
    assert lines[0] == "check var shift"
    ce, _ = expand_edges(protograph_1().base)
    assert len(lines) == 1 + ce.size
    assert all(0 <= int(l.split()[2]) < 8 for l in lines[1:])


@pytest.mark.parametrize("seed", range(4))
def test_triple_edges_close_no_four_cycles(seed):
    # protograph-1 has multiplicity-3 entries; 2b = a + c must be excluded too
    assert count_short_cycles(lift(protograph_1(), 64, seed=seed).h) == 0
