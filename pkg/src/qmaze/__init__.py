"""Quantum stochastic walks through perfect mazes, abstract and photonic."""

__version__ = "0.1.0"

from qmaze.layout import (  # noqa: E402
    Layout,
    UnfoldInfeasible,
    append_sink_chain,
    layout_to_couplings,
    maze_couplings,
    unfold,
)
from qmaze.maze import GridSpec, MazeGraph, extract_solution_path, generate_maze, select_terminals  # noqa: E402
from qmaze.qsw import (  # noqa: E402
    QswParams,
    build_generator,
    evolve,
    evolve_expm,
    rhs,
    sweep_p,
    transfer_efficiency,
)

__all__ = [
    "GridSpec",
    "Layout",
    "MazeGraph",
    "QswParams",
    "UnfoldInfeasible",
    "append_sink_chain",
    "build_generator",
    "evolve",
    "evolve_expm",
    "extract_solution_path",
    "generate_maze",
    "layout_to_couplings",
    "maze_couplings",
    "rhs",
    "select_terminals",
    "sweep_p",
    "transfer_efficiency",
    "unfold",
]
