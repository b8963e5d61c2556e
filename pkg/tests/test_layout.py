import itertools
import math

import numpy as np
import pytest

from qmaze.instances import maze18
from qmaze.layout import (
    Layout,
    UnfoldInfeasible,
    append_sink_chain,
    couplings_from_csv,
    couplings_to_csv,
    layout_to_couplings,
    maze_couplings,
    unfold,
)
from qmaze.maze import GridSpec, MazeGraph, generate_maze


def euclid(p, q):
    return math.dist(tuple(p), tuple(q))


def t_maze():
    # chain 0-1-2, two-node tail 4-3 under the middle, one-node tail 5 at the end
    return MazeGraph(GridSpec(2, 3), frozenset({(0, 1), (1, 2), (1, 4), (4, 3), (2, 5)}), 0, 2)


def test_path_maze_unfolds_to_a_line():
    g = generate_maze(GridSpec(1, 6, 4))
    lay = unfold(g)
    assert lay.positions.tolist() == [[k, 0] for k in range(6)]
    assert lay.tails == ()


def test_t_shape_geometry():
    lay = unfold(t_maze())
    assert lay.main_chain == (0, 1, 2)
    assert dict(lay.tails) == {1: (4, 3), 2: (5,)}
    pos = lay.positions
    assert euclid(pos[4], pos[1]) == 1.0
    assert euclid(pos[4], pos[0]) == pytest.approx(math.sqrt(2))
    assert euclid(pos[4], pos[2]) == pytest.approx(math.sqrt(2))
    # tails alternate sides
    assert np.sign(pos[4][1]) == -np.sign(pos[5][1])


def test_maze18_layout_exhaustive_distances():
    g = maze18()
    g.validate()
    lay = unfold(g)
    assert lay.size == 18
    assert len(lay.main_chain) == 10
    assert sorted(len(t) for _, t in lay.tails) == [1, 1, 2, 2, 2]
    pts = [tuple(p) for p in lay.positions.tolist()]
    assert len(set(pts)) == 18
    for a, b in itertools.combinations(range(18), 2):
        d = euclid(pts[a], pts[b])
        if (a, b) in g.edges:
            assert d == 1.0
        else:
            assert d > 1.0, (a, b)


def test_branching_subtree_is_infeasible():
    # 3x3 maze whose hanging subtree branches: chain along the top row and right column
    edges = {(0, 1), (1, 2), (2, 5), (5, 8), (1, 4), (4, 3), (4, 7), (3, 6)}
    g = MazeGraph(GridSpec(3, 3), frozenset(edges), 0, 8)
    with pytest.raises(UnfoldInfeasible) as err:
        unfold(g)
    assert err.value.anchor == 1
    assert "1" in str(err.value)


def test_unit_pair_coupling():
    lay = Layout(np.array([[0, 0], [1, 0]]), (0, 1))
    K = layout_to_couplings(lay, 0.7)
    assert K.tolist() == [[0.0, 0.7], [0.7, 0.0]]


def test_t_shape_couplings():
    # chain 0-1-2 on the x axis, tail node 3 above the middle
    lay = Layout(np.array([[0, 0], [1, 0], [2, 0], [1, 1]]), (0, 1, 2), ((1, (3,)),))
    K = layout_to_couplings(lay, 1.0)
    assert K[3, 1] == 1.0
    assert K[3, 0] == pytest.approx(0.2)
    assert K[3, 2] == pytest.approx(0.2)
    assert K[0, 2] == 0.0


def test_straight_chain_is_tridiagonal():
    lay = unfold(generate_maze(GridSpec(1, 5, 0)))
    K = layout_to_couplings(lay, 0.4)
    expected = 0.4 * (np.eye(5, k=1) + np.eye(5, k=-1))
    assert np.array_equal(K, expected)
    assert np.array_equal(layout_to_couplings(lay, 0.4, nnn_ratio=0.0), expected)


@pytest.mark.parametrize("seed", range(5))
def test_coupling_support_and_symmetry(seed):
    g = maze18() if seed == 0 else t_maze()
    lay = unfold(g)
    K = layout_to_couplings(lay, 1.3)
    d2 = lay.squared_distances()
    assert np.array_equal(K, K.T)
    assert np.all(np.diag(K) == 0)
    assert np.all(K >= 0)
    assert np.array_equal(K != 0, (d2 == 1) | (d2 == 2))
    # with the diagonal couplings off, only maze edges survive
    K0 = layout_to_couplings(lay, 1.3, nnn_ratio=0.0)
    assert np.array_equal(K0, maze_couplings(g, 1.3))


def test_cutoff_drops_diagonals():
    lay = unfold(t_maze())
    K = layout_to_couplings(lay, 1.0, max_sq_distance=1)
    assert np.array_equal(K, maze_couplings(t_maze()))


def test_sink_chain_small():
    lay = unfold(generate_maze(GridSpec(1, 2, 0)))
    K = layout_to_couplings(lay, 1.0)
    K5, ext = append_sink_chain(K, lay, 3, 1.0)
    assert np.array_equal(K5, np.eye(5, k=1) + np.eye(5, k=-1))
    assert ext.sink == (2, 3, 4)
    assert ext.positions[2:].tolist() == [[2, 0], [3, 0], [4, 0]]


def test_sink_chain_on_maze18():
    lay = unfold(maze18())
    K = layout_to_couplings(lay, 0.4)
    K80, ext = append_sink_chain(K, lay, 62, 0.4)
    assert K80.shape == (80, 80)
    assert ext.sink == tuple(range(18, 80))
    # the only coupling between maze and sink is OUT -> first sink site
    cross = K80[:18, 18:]
    assert list(zip(*np.nonzero(cross))) == [(lay.out_node, 0)]
    assert np.array_equal(K80[:18, :18], K)


def test_sink_length_zero_is_identity():
    lay = unfold(maze18())
    K = layout_to_couplings(lay, 1.0)
    K2, ext = append_sink_chain(K, lay, 0)
    assert np.array_equal(K2, K)
    assert ext.sink == ()


def test_sink_chain_blocked_forward_raises():
    # a node diagonal to the forward exit blocks it; side exits sit diagonal to node 0
    lay = Layout(np.array([[0, 0], [1, 0], [3, 1]]), (0, 1), ((1, (2,)),))
    K = np.zeros((3, 3))
    K[0, 1] = K[1, 0] = 1.0
    with pytest.raises(UnfoldInfeasible) as err:
        append_sink_chain(K, lay, 2, 1.0)
    assert err.value.anchor == 1


def test_sink_chain_clears_maze_nodes():
    lay = unfold(maze18())
    _, ext = append_sink_chain(layout_to_couplings(lay, 1.0), lay, 62)
    maze_pts = ext.positions[:18]
    for k in ext.sink:
        d2 = ((maze_pts - ext.positions[k]) ** 2).sum(1)
        d2[lay.out_node] = 99
        assert d2.min() > 2


def test_layout_and_csv_round_trip(tmp_path):
    lay = unfold(maze18())
    lay.save(tmp_path / "l.json")
    back = Layout.load(tmp_path / "l.json")
    assert np.array_equal(back.positions, lay.positions)
    assert back.main_chain == lay.main_chain and back.tails == lay.tails
    K = layout_to_couplings(lay, 0.4)
    K2, i, o = couplings_from_csv(couplings_to_csv(K, lay.in_node, lay.out_node))
    assert np.array_equal(K, K2)
    assert (i, o) == (lay.in_node, lay.out_node)
