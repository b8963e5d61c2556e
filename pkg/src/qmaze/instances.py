"""Canned maze instances."""
from __future__ import annotations

from qmaze.maze import GridSpec, MazeGraph


def maze18() -> MazeGraph:
    """18-site chain-with-tails maze on a 2 x 9 grid.

    IN (0,0) drops to row 1, which is the rest of a 10-node main chain ending
    at OUT (1,8). Row 0 is cut into five dead ends of lengths 2, 1, 2, 1, 2,
    each hanging from the chain by one vertical edge at its end::

        IN  o---o   o   o---o   o   o---o
        |   |       |       |   |   |
        o---o---o---o---o---o---o---o---o OUT
    """
    spec = GridSpec(2, 9, 0)
    row0 = lambda c: spec.index(0, c)  # noqa: E731
    row1 = lambda c: spec.index(1, c)  # noqa: E731
    edges = {(row0(0), row1(0))}
    edges |= {(row1(c), row1(c + 1)) for c in range(8)}
    # (attachment column, other column of the dead end or None)
    for attach, extra in ((1, 2), (3, None), (5, 4), (6, None), (7, 8)):
        edges.add((row0(attach), row1(attach)))
        if extra is not None:
            edges.add((row0(attach), row0(extra)))
    return MazeGraph(spec, frozenset(edges), row0(0), row1(8))
