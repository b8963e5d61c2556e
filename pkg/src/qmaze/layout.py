"""Unfolding maze trees onto a waveguide lattice and deriving couplings.

The IN -> OUT path becomes a straight main chain along x; each subtree
hanging off a chain node must itself be a path and is laid straight out
along +y or -y. Couplings then follow from geometry alone: pitch-1 pairs get
the nearest-neighbour rate, diagonal (sqrt 2) pairs a fixed fraction of it.
All distance tests use integer squared distances.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from qmaze.maze import MazeGraph, extract_solution_path

DEFAULT_NNN_RATIO = 0.2
DEFAULT_SINK_LENGTH = 62


class UnfoldInfeasible(ValueError):
    def __init__(self, anchor: int, reason: str):
        super().__init__(f"cannot unfold at anchor node {anchor}: {reason}")
        self.anchor = anchor


@dataclass(frozen=True)
class Layout:
    positions: np.ndarray  # (n, 2) int, units of waveguide pitch
    main_chain: tuple[int, ...]
    tails: tuple[tuple[int, tuple[int, ...]], ...] = ()
    sink: tuple[int, ...] = ()
    edges: frozenset[tuple[int, int]] = field(default=frozenset())

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "positions", pos)
        if len({tuple(p) for p in pos.tolist()}) != len(pos):
            raise ValueError("layout positions must be distinct")

    @property
    def size(self) -> int:
        return len(self.positions)

    @property
    def in_node(self) -> int:
        return self.main_chain[0]

    @property
    def out_node(self) -> int:
        return self.main_chain[-1]

    def squared_distances(self) -> np.ndarray:
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return (diff**2).sum(axis=-1)

    def to_dict(self) -> dict:
        return {
            "positions": self.positions.tolist(),
            "main_chain": list(self.main_chain),
            "tails": [[a, list(t)] for a, t in self.tails],
            "sink": list(self.sink),
            "edges": [list(e) for e in sorted(self.edges)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Layout":
        return cls(
            positions=np.array(data["positions"], dtype=np.int64),
            main_chain=tuple(data["main_chain"]),
            tails=tuple((int(a), tuple(t)) for a, t in data.get("tails", [])),
            sink=tuple(data.get("sink", [])),
            edges=frozenset(tuple(sorted(e)) for e in data.get("edges", [])),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Layout":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _hanging_path(graph: MazeGraph, anchor: int, first: int) -> list[int]:
    tail = [first]
    prev, cur = anchor, first
    while True:
        children = [w for w in graph.neighbors(cur) if w != prev]
        if len(children) > 1:
            raise UnfoldInfeasible(anchor, f"hanging subtree branches at node {cur}")
        if not children:
            return tail
        prev, cur = cur, children[0]
        tail.append(cur)


def unfold(graph: MazeGraph) -> Layout:
    """Lay a tree maze out as a main chain with perpendicular side tails.

    Tails are placed in chain order, alternating sides; if the preferred side
    would put a tail node on, or at unit distance from, an already placed
    node (other than its own parent), the opposite side is tried before
    giving up with UnfoldInfeasible.
    """
    chain = extract_solution_path(graph)
    on_chain = set(chain)
    placed: dict[int, tuple[int, int]] = {node: (k, 0) for k, node in enumerate(chain)}
    tails = []
    side = 1
    for x, anchor in enumerate(chain):
        for first in sorted(v for v in graph.neighbors(anchor) if v not in on_chain):
            tail = _hanging_path(graph, anchor, first)
            for s in (side, -side):
                spots = [(x, s * (i + 1)) for i in range(len(tail))]
                if _tail_fits(spots, anchor, placed):
                    break
            else:
                raise UnfoldInfeasible(anchor, "both sides of the chain are blocked")
            placed.update(zip(tail, spots))
            tails.append((anchor, tuple(tail)))
            side = -s
    if len(placed) != graph.node_count:
        raise UnfoldInfeasible(chain[0], "layout does not cover every maze node")
    positions = np.array([placed[i] for i in range(graph.node_count)], dtype=np.int64)
    return Layout(positions, chain, tuple(tails), edges=graph.edges)


def _tail_fits(spots, anchor, placed) -> bool:
    if not placed:
        return True
    others = np.array([p for node, p in placed.items() if node != anchor])
    for i, (x, y) in enumerate(spots):
        d2 = (others[:, 0] - x) ** 2 + (others[:, 1] - y) ** 2
        if d2.min() < 2:
            return False
    return True


def layout_to_couplings(
    layout: Layout,
    T: float,
    nnn_ratio: float = DEFAULT_NNN_RATIO,
    max_sq_distance: int = 2,
) -> np.ndarray:
    """Symmetric coupling matrix from lattice geometry.

    Pairs at unit distance couple with ``T``; pairs at distance sqrt(2) with
    ``nnn_ratio * T``; anything further is dropped. ``max_sq_distance=1``
    disables the diagonal couplings entirely.
    """
    d2 = layout.squared_distances()
    K = np.zeros(d2.shape)
    K[d2 == 1] = T
    if max_sq_distance >= 2:
        K[d2 == 2] = nnn_ratio * T
    return K


def maze_couplings(graph: MazeGraph, T: float = 1.0) -> np.ndarray:
    """Plain adjacency couplings of a maze, without unfolding."""
    K = np.zeros((graph.node_count, graph.node_count))
    for a, b in graph.edges:
        K[a, b] = K[b, a] = T
    return K


def append_sink_chain(
    couplings: np.ndarray,
    layout: Layout,
    sink_length: int = DEFAULT_SINK_LENGTH,
    coupling: float | None = None,
) -> tuple[np.ndarray, Layout]:
    """Attach a straight waveguide chain to OUT.

    The chain continues the main chain's direction when that keeps every sink
    site further than sqrt(2) from all maze sites except OUT itself;
    otherwise the other three lattice directions are tried in turn. The
    returned layout lists the new indices in ``sink``.
    """
    n = couplings.shape[0]
    if sink_length == 0:
        return couplings.copy(), layout
    if coupling is None:
        coupling = float(couplings.max()) if couplings.size else 1.0
    out = layout.out_node
    origin = layout.positions[out]
    if len(layout.main_chain) > 1:
        forward = tuple(int(v) for v in origin - layout.positions[layout.main_chain[-2]])
    else:
        forward = (1, 0)
    directions = [forward] + [d for d in ((1, 0), (0, 1), (0, -1), (-1, 0)) if d != forward]
    others = np.delete(layout.positions, out, axis=0)
    steps = np.arange(1, sink_length + 1)[:, None]
    for d in directions:
        spots = origin[None, :] + steps * np.array(d)[None, :]
        if len(others) == 0:
            break
        d2 = ((spots[:, None, :] - others[None, :, :]) ** 2).sum(-1)
        if d2.min() > 2:
            break
    else:
        raise UnfoldInfeasible(out, "no free direction for the sink chain")

    m = n + sink_length
    K = np.zeros((m, m))
    K[:n, :n] = couplings
    chain = [out] + list(range(n, m))
    for a, b in zip(chain[:-1], chain[1:]):
        K[a, b] = K[b, a] = coupling
    sink_edges = frozenset((min(a, b), max(a, b)) for a, b in zip(chain[:-1], chain[1:]))
    extended = replace(
        layout,
        positions=np.vstack([layout.positions, spots]),
        sink=tuple(range(n, m)),
        edges=layout.edges | sink_edges,
    )
    return K, extended


def couplings_to_csv(K: np.ndarray, in_node: int = 0, out_node: int | None = None) -> str:
    """Coordinate-list CSV (upper triangle) with a size/terminal comment line."""
    n = K.shape[0]
    out_node = n - 1 if out_node is None else out_node
    buf = io.StringIO()
    buf.write(f"# size={n} in={in_node} out={out_node}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "value"])
    ii, jj = np.nonzero(np.triu(K, 1))
    for i, j in zip(ii.tolist(), jj.tolist()):
        w.writerow([i, j, repr(float(K[i, j]))])
    return buf.getvalue()


def couplings_from_csv(text: str) -> tuple[np.ndarray, int, int]:
    lines = text.splitlines()
    meta = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            for tok in line[1:].split():
                k, _, v = tok.partition("=")
                meta[k] = v
        elif line.strip():
            body.append(line)
    rows = list(csv.DictReader(body))
    n = int(meta["size"]) if "size" in meta else 1 + max(max(int(r["i"]), int(r["j"])) for r in rows)
    K = np.zeros((n, n))
    for r in rows:
        i, j, v = int(r["i"]), int(r["j"]), float(r["value"])
        K[i, j] = K[j, i] = v
    return K, int(meta.get("in", 0)), int(meta.get("out", n - 1))
