"""Figure-level experiment recipes and their on-disk result bundles.

A recipe is a pure function of an ExperimentConfig: same config text, same
CSV bytes. Each bundle directory holds the CSV tables, SVG previews and a
``manifest.json`` from which every table can be regenerated.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from qmaze import __version__
from qmaze._rng import RNG_ID
from qmaze.instances import maze18
from qmaze.layout import layout_to_couplings, maze_couplings, unfold
from qmaze.maze import GridSpec, MazeGraph, generate_maze
from qmaze.oracles import linear_array_benchmark, profile_variance
from qmaze.photonic import (
    PhotonicParams,
    build_array,
    calibrate_p,
    ensemble_efficiency,
    realization,
)
from qmaze.plots import Panel, Series, render
from qmaze.qsw import QswParams, build_generator, evolve_expm, final_efficiency, initial_state

log = logging.getLogger(__name__)

# wall-clock classes: ci <= 10 min, desk <= 2 h, long = unbounded
BUDGET = {"fig2": "desk", "si1": "desk", "fig4": "ci", "si5": "ci", "sqrw": "desk"}

_RUN_ONLY = ("out_dir", "threads")


@dataclass
class ExperimentConfig:
    recipe: str = "fig4"
    seed: int = 0
    # abstract Lindblad model, time in units of 1/T
    T: float = 1.0
    gamma: float = 1.0
    t_factor: float = 10.0
    sizes: tuple[int, ...] = (64, 100, 144, 256)
    p_set: tuple[float, ...] = (0.0, 0.1, 1.0)
    mazes_per_size: int = 5
    si1_sizes: tuple[int, ...] = (100, 144, 256)
    gammas: tuple[float, ...] = (0.1, 1.0, 10.0)
    p_step: float = 0.02
    # photonic array, mm and mm^-1
    kappa: float = 0.40
    nnn_ratio: float = 0.2
    dbeta_max: float = 0.40
    segment_length: float = 3.0
    sink_length: int = 62
    width_convention: str = "full"
    lengths: tuple[float, ...] = (10.0, 20.0, 30.0, 40.0, 50.0, 60.0)
    z_step: float = 1.0
    noise_seeds: int = 3
    realizations: int = 100
    calib_p_step: float = 0.01
    loss_db: float = 2.0
    loss_reference_length: float = 60.0
    maze_file: str = ""
    # linear-array benchmark
    array_count: int = 101
    array_length: float = 50.0
    array_dbetas: tuple[float, ...] = (0.0, 0.4, 1.0, 4.0)
    array_p_grid: tuple[float, ...] = (0.0, 0.1, 0.5, 1.0)
    array_realizations: int = 200
    # run options, not hashed
    out_dir: str = "results"
    threads: int = 1

    def to_text(self, include_run_options: bool = True) -> str:
        lines = []
        for f in dataclasses.fields(self):
            if not include_run_options and f.name in _RUN_ONLY:
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        defaults = cls()
        kwargs = {}
        names = {f.name for f in dataclasses.fields(cls)}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in names:
                raise ValueError(f"unknown or malformed config line: {raw!r}")
            kwargs[key] = _coerce(getattr(defaults, key), value)
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text())

    def updated(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text(include_run_options=False).encode()).hexdigest()[:16]


def _coerce(default, value: str):
    if isinstance(default, tuple):
        items = [v.strip() for v in value.split(",") if v.strip()]
        kind = type(default[0]) if default else float
        return tuple(kind(float(v)) if kind is int else kind(v) for v in items)
    if isinstance(default, bool):
        return value.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def to_csv(self, config_hash: str) -> str:
        lines = [f"# config_hash={config_hash}", ",".join(self.columns)]
        for r in self.rows:
            lines.append(",".join(_fmt(v) for v in r))
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class ResultBundle:
    recipe: str
    config: ExperimentConfig
    tables: dict[str, Table]
    figures: dict[str, str] = field(default_factory=dict)
    wall_clock: float = 0.0

    def csv(self, name: str) -> str:
        return self.tables[name].to_csv(self.config.config_hash)

    def manifest(self) -> dict:
        return {
            "recipe": self.recipe,
            "config": self.config.to_text(include_run_options=False),
            "config_hash": self.config.config_hash,
            "rng_id": RNG_ID,
            "code_version": __version__,
            "budget_class": BUDGET.get(self.recipe, "long"),
            "wall_clock_s": round(self.wall_clock, 3),
            "tables": {
                f"{name}.csv": hashlib.sha256(self.csv(name).encode()).hexdigest()
                for name in sorted(self.tables)
            },
        }

    def write(self, out_dir: str | Path | None = None) -> Path:
        out = Path(out_dir or self.config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name in sorted(self.tables):
            (out / f"{name}.csv").write_text(self.csv(name))
        for name, svg in sorted(self.figures.items()):
            (out / f"{name}.svg").write_text(svg)
        (out / "manifest.json").write_text(json.dumps(self.manifest(), indent=1) + "\n")
        return out


def _load_maze(cfg: ExperimentConfig) -> MazeGraph:
    return MazeGraph.load(cfg.maze_file) if cfg.maze_file else maze18()


def _grid(start: float, stop: float, step: float) -> np.ndarray:
    n = int(round((stop - start) / step))
    return np.round(start + step * np.arange(n + 1), 12)


def _photonic_params(cfg: ExperimentConfig, **over) -> PhotonicParams:
    base = dict(
        kappa=cfg.kappa,
        nnn_ratio=cfg.nnn_ratio,
        dbeta_max=cfg.dbeta_max,
        segment_length=cfg.segment_length,
        sink_length=cfg.sink_length,
        width_convention=cfg.width_convention,
    )
    base.update(over)
    return PhotonicParams(**base)


def _z_grid(cfg: ExperimentConfig) -> np.ndarray:
    z = _grid(0.0, max(cfg.lengths), cfg.z_step)
    return np.unique(np.concatenate([z, np.asarray(cfg.lengths, float)]))


# --- recipes -------------------------------------------------------------


def recipe_fig2_scaling(cfg: ExperimentConfig) -> ResultBundle:
    """E(p, t = t_factor * N) versus maze size, several seeded mazes per size."""
    runs = Table(("N", "maze_seed", "p", "E"))
    summary = Table(("N", "p", "median_E", "min_E", "max_E", "median_speedup"))
    for N in cfg.sizes:
        r = math.isqrt(N)
        if r * r != N:
            raise ValueError(f"maze sizes must be perfect squares, got {N}")
        per_maze = []
        for k in range(cfg.mazes_per_size):
            graph = generate_maze(GridSpec(r, r, cfg.seed + k))
            K = maze_couplings(graph, cfg.T)
            E = {
                p: final_efficiency(K, QswParams(p, cfg.gamma * cfg.T, graph.out_node), cfg.t_factor * N / cfg.T)
                for p in cfg.p_set
            }
            for p in cfg.p_set:
                runs.rows.append((N, cfg.seed + k, p, E[p]))
            per_maze.append(E)
            log.info("fig2 N=%d maze %d: %s", N, k, E)
        speedup = _median_speedup(per_maze)
        for p in cfg.p_set:
            vals = np.array([e[p] for e in per_maze])
            summary.rows.append((N, p, float(np.median(vals)), float(vals.min()), float(vals.max()), speedup))
    bundle = ResultBundle("fig2", cfg, {"fig2_runs": runs, "fig2_summary": summary})
    bundle.figures["fig2"] = render(
        [
            Panel(
                "E(p, t=10N) vs N",
                [
                    Series(f"p={p:g}", [r[0] for r in summary.rows if r[1] == p], [r[2] for r in summary.rows if r[1] == p])
                    for p in cfg.p_set
                ],
                "N",
                "median E",
            )
        ]
    )
    return bundle


def _median_speedup(per_maze: list[dict]) -> float:
    """Median over mazes of E(0.1) / max(E(0), E(1)); nan if those p are missing."""
    ratios = [e[0.1] / max(e[0.0], e[1.0]) for e in per_maze if {0.0, 0.1, 1.0} <= set(e)]
    return float(np.median(ratios)) if ratios else float("nan")


def recipe_si1_psweep(cfg: ExperimentConfig, p_range: tuple[float, float] = (0.02, 0.3)) -> ResultBundle:
    """E(p) for each (N, gamma) at t = t_factor * N, with the argmax summary."""
    from qmaze.qsw import sweep_p

    sweep = Table(("N", "gamma", "p", "E"))
    optimum = Table(("N", "gamma", "p_opt", "E_opt", "E_p0", "E_p1", "in_range"))
    p_grid = _grid(0.0, 1.0, cfg.p_step)
    panels = []
    for N in cfg.si1_sizes:
        r = math.isqrt(N)
        graph = generate_maze(GridSpec(r, r, cfg.seed))
        K = maze_couplings(graph, cfg.T)
        gammas = [g * cfg.T for g in cfg.gammas]
        rows = sweep_p(K, gammas, p_grid, cfg.t_factor * N / cfg.T, graph.in_node, graph.out_node, cfg.threads)
        panel = Panel(f"N={N}", [], "p", "E")
        for g in gammas:
            sel = [row for row in rows if row["gamma"] == g]
            ps = np.array([row["p"] for row in sel])
            Es = np.array([row["E"] for row in sel])
            for p, E in zip(ps, Es):
                sweep.rows.append((N, g, float(p), float(E)))
            i = int(np.argmax(Es))
            ok = bool(p_range[0] <= ps[i] <= p_range[1])
            if not ok:
                log.warning("si1 N=%d gamma=%g: argmax p=%g outside %s", N, g, ps[i], p_range)
            optimum.rows.append((N, g, float(ps[i]), float(Es[i]), float(Es[0]), float(Es[-1]), ok))
            panel.series.append(Series(f"gamma={g:g}", ps, Es))
        panels.append(panel)
    bundle = ResultBundle("si1", cfg, {"si1_sweep": sweep, "si1_optimum": optimum})
    bundle.figures["si1"] = render(panels)
    return bundle


def recipe_fig4_maze18(cfg: ExperimentConfig) -> ResultBundle:
    """Showcase maze: Lindblad curves, coherent and noisy photonic runs, calibration."""
    graph = _load_maze(cfg)
    layout = unfold(graph)
    z = _z_grid(cfg)
    noisy = _photonic_params(cfg)
    array = build_array(layout, noisy)
    coherent = realization(array, _photonic_params(cfg, dbeta_max=0.0), z, cfg.seed)["E"]
    seeds = [cfg.seed + k for k in range(cfg.noise_seeds)]
    per_seed = [realization(array, noisy, z, s)["E"] for s in seeds]
    ens = ensemble_efficiency(array, noisy, z, cfg.realizations, cfg.seed, cfg.threads)

    # Lindblad model on the maze alone, couplings in mm^-1 so t is z in mm
    K_maze = layout_to_couplings(layout, cfg.kappa, cfg.nnn_ratio)
    gamma_equiv = cfg.gamma * cfg.kappa
    theory = {}
    for p in (0.0, 0.1):
        spec = build_generator(K_maze, QswParams(p, gamma_equiv, layout.out_node))
        rhos = evolve_expm(initial_state(spec, layout.in_node), spec, z)
        theory[p] = rhos[:, spec.sink, spec.sink].real

    # the coherent array is the p=0, gamma=0 walk on the full coupling matrix
    spec = build_generator(array.couplings, QswParams(0.0, 0.0, layout.out_node))
    rhos = evolve_expm(initial_state(spec, layout.in_node), spec, z)
    same_ode = np.real(np.diagonal(rhos, axis1=1, axis2=2))[:, list(array.sink)].sum(axis=1)

    best_p, best_rms, residuals = calibrate_p(
        z, ens.mean, K_maze, gamma_equiv, _grid(0.0, 1.0, cfg.calib_p_step), layout.in_node, layout.out_node
    )

    t_theory = Table(("z_mm", "E_p0", "E_p0.1"), [(a, b, c) for a, b, c in zip(z, theory[0.0], theory[0.1])])
    t_noisy = Table(
        ("z_mm", "coherent") + tuple(f"noise{k + 1}" for k in range(len(seeds))),
        [(zz, c, *vals) for zz, c, *vals in zip(z, coherent, *per_seed)],
    )
    mean3 = np.mean(per_seed, axis=0) if per_seed else np.full_like(z, np.nan)
    t_avg = Table(
        ("z_mm", "coherent", "mean_noise_seeds", "ensemble_mean", "ensemble_std", "n"),
        [(a, b, c, d, e, ens.n) for a, b, c, d, e in zip(z, coherent, mean3, ens.mean, ens.std)],
    )
    t_cal = Table(("p", "rms"), sorted(residuals.items()))
    idx60 = int(np.argmin(np.abs(z - max(cfg.lengths))))
    t_checks = Table(
        ("check", "value"),
        [
            ("coherent_vs_lindblad_p0_max_abs", float(np.max(np.abs(coherent - same_ode)))),
            ("best_p", best_p),
            ("best_rms", best_rms),
            ("ensemble_mean_at_zmax", float(ens.mean[idx60])),
            ("coherent_at_zmax", float(coherent[idx60])),
        ],
    )
    bundle = ResultBundle(
        "fig4",
        cfg,
        {
            "fig4_theory": t_theory,
            "fig4_noisy": t_noisy,
            "fig4_average": t_avg,
            "fig4_calibration": t_cal,
            "fig4_checks": t_checks,
        },
    )
    lengths = np.isin(z, cfg.lengths)
    bundle.figures["fig4"] = render(
        [
            Panel("Lindblad model", [Series("QW p=0", z, theory[0.0]), Series("QSW p=0.1", z, theory[0.1])], "t (mm)", "E"),
            Panel(
                "coherent and noisy arrays",
                [Series("ordered", z[lengths], coherent[lengths])]
                + [Series(f"noise{k + 1}", z[lengths], tr[lengths]) for k, tr in enumerate(per_seed)],
                "t (mm)",
                "E",
            ),
            Panel(
                "ordered vs noise average",
                [Series("ordered", z[lengths], coherent[lengths]), Series(f"mean of {ens.n}", z[lengths], ens.mean[lengths])],
                "t (mm)",
                "E",
            ),
        ]
    )
    return bundle


def recipe_si5_loss_overestimation(cfg: ExperimentConfig) -> ResultBundle:
    """Measured-style sink fraction of a lossy array minus the lossless transfer.

    Both runs share a noise map, so the difference isolates the maze-only
    loss. Losses: ``loss_db`` per maze waveguide over ``loss_reference_length``.
    """
    graph = _load_maze(cfg)
    layout = unfold(graph)
    z = _z_grid(cfg)
    params = _photonic_params(cfg, maze_loss_db=cfg.loss_db, loss_reference_length=cfg.loss_reference_length)
    array = build_array(layout, params)
    over, measured, true, power = [], [], [], []
    for s in range(cfg.seed, cfg.seed + cfg.realizations):
        r = realization(array, params, z, s)
        m = r.get("measured", r["E"])
        over.append(m - r["E"])
        measured.append(m)
        true.append(r["E"])
        power.append(r.get("lossy_power", r["power"]))
    over = np.array(over)
    table = Table(
        ("z_mm", "mean_over", "std_over", "min_over", "mean_measured", "mean_true", "mean_output_power"),
        [
            row
            for row in zip(
                z,
                over.mean(0),
                over.std(0),
                over.min(0),
                np.mean(measured, 0),
                np.mean(true, 0),
                np.mean(power, 0),
            )
        ],
    )
    bundle = ResultBundle("si5", cfg, {"si5_overestimation": table})
    m, s = over.mean(0), over.std(0)
    bundle.figures["si5"] = render(
        [
            Panel(
                "overestimation of E",
                [Series("mean", z, m), Series("mean+std", z, m + s), Series("mean-std", z, m - s)],
                "t (mm)",
                "measured - true",
            )
        ]
    )
    return bundle


def recipe_sqrw_linear_array(cfg: ExperimentConfig) -> ResultBundle:
    res = linear_array_benchmark(
        cfg.array_dbetas,
        cfg.array_p_grid,
        count=cfg.array_count,
        length=cfg.array_length,
        kappa=cfg.kappa,
        n_realizations=cfg.array_realizations,
        segment_length=cfg.segment_length,
        base_seed=cfg.seed,
        width_convention=cfg.width_convention,
    )
    centre = cfg.array_count // 2
    profiles = Table(("waveguide_index", "mean_intensity", "std_intensity", "dbeta_max", "p"))
    for d in sorted(res.noisy_mean):
        for i, (m, s) in enumerate(zip(res.noisy_mean[d][-1], res.noisy_std[d][-1])):
            profiles.rows.append((i, float(m), float(s), d, ""))
    for p in sorted(res.lindblad):
        for i, m in enumerate(res.lindblad[p][-1]):
            profiles.rows.append((i, float(m), 0.0, "", p))
    exps = res.exponents()
    exponents = Table(("curve", "variance_exponent"), sorted(exps.items()))
    rms = Table(("dbeta_max", "p", "rms"), [(d, p, v) for (d, p), v in sorted(res.rms.items())])
    variance = Table(
        ("z_mm", *[f"dbeta={d:g}" for d in sorted(res.noisy_mean)], *[f"p={p:g}" for p in sorted(res.lindblad)]),
        [
            (z, *vals)
            for z, *vals in zip(
                res.z,
                *[profile_variance(res.noisy_mean[d], centre) for d in sorted(res.noisy_mean)],
                *[profile_variance(res.lindblad[p], centre) for p in sorted(res.lindblad)],
            )
        ],
    )
    bundle = ResultBundle(
        "sqrw",
        cfg,
        {"sqrw_profiles": profiles, "sqrw_exponents": exponents, "sqrw_rms": rms, "sqrw_variance": variance},
    )
    x = np.arange(cfg.array_count) - centre
    bundle.figures["sqrw"] = render(
        [
            Panel("noisy arrays", [Series(f"dbeta={d:g}", x, res.noisy_mean[d][-1]) for d in sorted(res.noisy_mean)], "n", "intensity"),
            Panel("Lindblad", [Series(f"p={p:g}", x, res.lindblad[p][-1]) for p in sorted(res.lindblad)], "n", "population"),
        ]
    )
    return bundle


RECIPES: dict[str, Callable[[ExperimentConfig], ResultBundle]] = {
    "fig2": recipe_fig2_scaling,
    "si1": recipe_si1_psweep,
    "fig4": recipe_fig4_maze18,
    "si5": recipe_si5_loss_overestimation,
    "sqrw": recipe_sqrw_linear_array,
}


def run_recipe(cfg: ExperimentConfig) -> ResultBundle:
    if cfg.recipe not in RECIPES:
        raise ValueError(f"unknown recipe {cfg.recipe!r}; choose from {sorted(RECIPES)}")
    start = time.perf_counter()
    bundle = RECIPES[cfg.recipe](cfg)
    bundle.wall_clock = time.perf_counter() - start
    return bundle


def regenerate(manifest_path: str | Path, out_dir: str | Path) -> ResultBundle:
    """Re-run the recipe recorded in a manifest and write it to ``out_dir``."""
    manifest = json.loads(Path(manifest_path).read_text())
    if manifest.get("rng_id") != RNG_ID:
        raise ValueError(f"manifest uses RNG {manifest.get('rng_id')!r}, this build has {RNG_ID!r}")
    cfg = ExperimentConfig.from_text(manifest["config"]).updated(out_dir=str(out_dir))
    bundle = run_recipe(cfg)
    bundle.write(out_dir)
    return bundle
