"""Perfect mazes on square lattices.

Mazes are spanning trees of the ``rows x cols`` grid graph, carved with an
iterative randomized depth-first search (the recursive backtracker). Nodes
are indexed row-major, ``index = row * cols + col``.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from qmaze._rng import RNG_ID, make_rng


class MazeError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    rows: int
    cols: int
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise MazeError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def index(self, row: int, col: int) -> int:
        return row * self.cols + col

    def coords(self, node: int) -> tuple[int, int]:
        return divmod(node, self.cols)

    def grid_neighbors(self, node: int) -> list[int]:
        r, c = self.coords(node)
        out = []
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < self.rows and 0 <= cc < self.cols:
                out.append(self.index(rr, cc))
        return out


@dataclass(frozen=True)
class MazeGraph:
    spec: GridSpec
    edges: frozenset[tuple[int, int]]
    in_node: int
    out_node: int
    _adj: dict[int, tuple[int, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        norm = frozenset((min(a, b), max(a, b)) for a, b in self.edges)
        object.__setattr__(self, "edges", norm)
        adj: dict[int, list[int]] = {i: [] for i in range(self.node_count)}
        for a, b in sorted(norm):
            for x in (a, b):
                if not 0 <= x < self.node_count:
                    raise MazeError(f"edge ({a}, {b}) references a node outside the grid")
            adj[a].append(b)
            adj[b].append(a)
        object.__setattr__(self, "_adj", {k: tuple(sorted(v)) for k, v in adj.items()})
        if self.in_node == self.out_node:
            raise MazeError("IN and OUT terminals must differ")

    @property
    def node_count(self) -> int:
        return self.spec.size

    def neighbors(self, node: int) -> tuple[int, ...]:
        return self._adj[node]

    def degree(self, node: int) -> int:
        return len(self._adj[node])

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def validate(self) -> None:
        """Raise MazeError unless this is a spanning tree of its grid."""
        n = self.node_count
        for a, b in self.edges:
            (ra, ca), (rb, cb) = self.spec.coords(a), self.spec.coords(b)
            if abs(ra - rb) + abs(ca - cb) != 1:
                raise MazeError(f"edge ({a}, {b}) does not join grid-adjacent nodes")
        if len(self.edges) != n - 1:
            raise MazeError(f"a tree on {n} nodes has {n - 1} edges, found {len(self.edges)}")
        if len(_reachable(self, 0)) != n:
            raise MazeError("maze graph is not connected")

    # --- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "rows": self.spec.rows,
            "cols": self.spec.cols,
            "seed": self.spec.seed,
            "rng_id": RNG_ID,
            "edges": [list(e) for e in self.sorted_edges()],
            "in": self.in_node,
            "out": self.out_node,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MazeGraph":
        rng_id = data.get("rng_id", RNG_ID)
        if rng_id != RNG_ID:
            raise MazeError(f"maze was generated with {rng_id!r}, this build uses {RNG_ID!r}")
        spec = GridSpec(int(data["rows"]), int(data["cols"]), int(data.get("seed", 0)))
        edges = frozenset((int(a), int(b)) for a, b in data["edges"])
        return cls(spec, edges, int(data["in"]), int(data["out"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "MazeGraph":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _reachable(graph: MazeGraph, start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in graph.neighbors(u):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def select_terminals(spec: GridSpec) -> tuple[int, int]:
    """IN at the (0, 0) corner, OUT at the opposite (rows-1, cols-1) corner."""
    return 0, spec.index(spec.rows - 1, spec.cols - 1)


def generate_maze(spec: GridSpec) -> MazeGraph:
    """Carve a perfect maze with a seeded iterative depth-first search.

    The start node is drawn from the RNG; at every step the unvisited grid
    neighbours of the stack top are shuffled and the first one is taken.
    When none are left the walk backs up one node. The result is a pure
    function of ``spec`` (same seed, same edges, bit for bit).
    """
    n = spec.size
    if n < 2:
        raise MazeError(f"a maze needs at least 2 nodes, got {spec.rows}x{spec.cols}")
    rng = make_rng(spec.seed)
    visited = [False] * n
    start = int(rng.integers(n))
    visited[start] = True
    stack = [start]
    edges = []
    while stack:
        u = stack[-1]
        fresh = [v for v in spec.grid_neighbors(u) if not visited[v]]
        if not fresh:
            stack.pop()
            continue
        rng.shuffle(fresh)
        v = fresh[0]
        visited[v] = True
        edges.append((u, v))
        stack.append(v)
    in_node, out_node = select_terminals(spec)
    return MazeGraph(spec, frozenset(edges), in_node, out_node)


def extract_solution_path(graph: MazeGraph) -> tuple[int, ...]:
    """The unique IN -> OUT path of a tree maze."""
    n = graph.node_count
    if len(graph.edges) != n - 1:
        raise MazeError(
            f"graph has {len(graph.edges)} edges for {n} nodes; not a tree (cycle or disconnected)"
        )
    parent = {graph.in_node: -1}
    stack = [graph.in_node]
    while stack:
        u = stack.pop()
        for v in graph.neighbors(u):
            if v not in parent:
                parent[v] = u
                stack.append(v)
    if len(parent) != n:
        raise MazeError("graph is not connected")
    path = [graph.out_node]
    while path[-1] != graph.in_node:
        path.append(parent[path[-1]])
    return tuple(reversed(path))
