"""Command line entry point: ``qmaze <verb> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from qmaze.layout import Layout, couplings_from_csv, couplings_to_csv, layout_to_couplings, maze_couplings, unfold
from qmaze.maze import GridSpec, MazeGraph, generate_maze


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma list."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        n = int(round((stop - start) / step))
        return [round(start + k * step, 12) for k in range(n + 1)]
    return [float(x) for x in text.split(",") if x.strip()]


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_maze_gen(args):
    graph = generate_maze(GridSpec(args.rows, args.cols, args.seed))
    if args.out:
        graph.save(args.out)
    else:
        import json

        print(json.dumps(graph.to_dict()))


def cmd_maze_couplings(args):
    graph = MazeGraph.load(args.maze)
    _emit(couplings_to_csv(maze_couplings(graph, args.T), graph.in_node, graph.out_node), args.out)


def cmd_unfold(args):
    layout = unfold(MazeGraph.load(args.maze))
    if args.out:
        layout.save(args.out)
    else:
        import json

        print(json.dumps(layout.to_dict()))
    if args.couplings_out:
        K = layout_to_couplings(layout, args.T, args.nnn_ratio)
        _emit(couplings_to_csv(K, layout.in_node, layout.out_node), args.couplings_out)


def cmd_qsw_run(args):
    from qmaze.qsw import QswParams, build_generator, evolve, initial_state, trace_to_csv, transfer_efficiency

    K, in_node, out_node = couplings_from_csv(Path(args.couplings).read_text())
    spec = build_generator(K, QswParams(args.p, args.gamma, out_node))
    traj = evolve(initial_state(spec, in_node), spec, args.t_end, args.dt, args.samples)
    _emit(trace_to_csv(traj, transfer_efficiency(traj)), args.out)


def cmd_qsw_sweep(args):
    from qmaze.qsw import sweep_p, sweep_to_csv

    K, in_node, out_node = couplings_from_csv(Path(args.couplings).read_text())
    rows = sweep_p(K, parse_grid(args.gammas), parse_grid(args.p_grid), args.t_end, in_node, out_node, args.threads)
    _emit(sweep_to_csv(rows), args.out)


def _photonic_params(args, **over):
    from qmaze.photonic import PhotonicParams

    kw = dict(
        kappa=args.kappa,
        nnn_ratio=args.nnn_ratio,
        dbeta_max=args.dbeta_max,
        segment_length=args.segment,
        sink_length=args.sink_length,
        maze_loss_db=args.loss_db,
        loss_reference_length=args.loss_reference,
        width_convention=args.width,
    )
    kw.update(over)
    return PhotonicParams(**kw)


def cmd_photonic_run(args):
    from qmaze.photonic import build_array, ensemble_efficiency, sample_noise_map

    params = _photonic_params(args)
    array = build_array(Layout.load(args.layout), params)
    z = np.round(np.arange(0.0, args.z_end + 1e-9, args.z_step), 12)
    key = "measured" if args.loss_db > 0 else "E"
    ens = ensemble_efficiency(array, params, z, args.realizations, args.seed, args.threads, key=key)
    if args.noise_out:
        sample_noise_map(params, args.z_end, array.size, args.seed, array.maze_rows).save(args.noise_out)
    _emit(ens.to_csv(f"kappa={args.kappa} dbeta_max={args.dbeta_max} seed={args.seed}"), args.out)


def cmd_photonic_calibrate(args):
    from qmaze.photonic import calibrate_p, read_ensemble_csv

    z, mean = read_ensemble_csv(Path(args.ensemble).read_text())
    layout = Layout.load(args.layout)
    K = layout_to_couplings(layout, args.kappa, args.nnn_ratio)
    best, rms, residuals = calibrate_p(
        z, mean, K, args.gamma * args.kappa, parse_grid(args.p_grid), layout.in_node, layout.out_node
    )
    lines = ["p,rms"] + [f"{p!r},{r!r}" for p, r in sorted(residuals.items())]
    _emit("\n".join(lines) + "\n", args.out)
    print(f"best_p={best!r} rms={rms!r}", file=sys.stderr)


def cmd_oracle_linear_array(args):
    from qmaze.oracles import linear_array_benchmark

    res = linear_array_benchmark(
        parse_grid(args.dbeta_list),
        parse_grid(args.p_grid),
        count=args.count,
        length=args.length,
        kappa=args.kappa,
        n_realizations=args.realizations,
        segment_length=args.segment,
        base_seed=args.seed,
    )
    _emit(res.to_csv(), args.out)
    for name, g in res.exponents().items():
        print(f"{name}: variance exponent {g:.3f}", file=sys.stderr)


def cmd_recipe(args):
    from qmaze.recipes import ExperimentConfig, regenerate, run_recipe

    if args.name == "regenerate":
        if not args.manifest:
            raise SystemExit("recipe regenerate needs --manifest")
        out = regenerate(args.manifest, args.out or "regenerated").write(args.out or "regenerated")
        print(out)
        return
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    changes = {"recipe": args.name, "threads": args.threads}
    if args.out:
        changes["out_dir"] = args.out
    if args.seed is not None:
        changes["seed"] = args.seed
    bundle = run_recipe(cfg.updated(**changes))
    print(bundle.write())


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    flags = argparse.ArgumentParser(add_help=False)
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    flags.add_argument("--config", default=d(None), help="flat key = value config file (recipes)")
    flags.add_argument("--out", default=d(None), help="output file, or directory for recipes")
    flags.add_argument("--threads", type=int, default=d(1))
    flags.add_argument("--seed", type=int, default=d(None))
    flags.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return flags


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmaze", parents=[_global_flags(False)], description=__doc__)
    # repeated on every verb so the flags may go before or after it
    common = _global_flags(True)
    verbs = parser.add_subparsers(dest="verb", required=True)

    maze = verbs.add_parser("maze", parents=[common]).add_subparsers(dest="action", required=True)
    gen = maze.add_parser("gen", parents=[common])
    gen.add_argument("--rows", type=int, required=True)
    gen.add_argument("--cols", type=int, required=True)
    gen.set_defaults(func=cmd_maze_gen)
    mc = maze.add_parser("couplings", parents=[common])
    mc.add_argument("--maze", required=True)
    mc.add_argument("--T", type=float, default=1.0)
    mc.set_defaults(func=cmd_maze_couplings)

    unf = verbs.add_parser("unfold", parents=[common])
    unf.add_argument("--maze", required=True)
    unf.add_argument("--couplings-out")
    unf.add_argument("--T", type=float, default=1.0)
    unf.add_argument("--nnn-ratio", type=float, default=0.2)
    unf.set_defaults(func=cmd_unfold)

    qsw = verbs.add_parser("qsw", parents=[common]).add_subparsers(dest="action", required=True)
    run = qsw.add_parser("run", parents=[common])
    run.add_argument("--couplings", required=True)
    run.add_argument("--p", type=float, required=True)
    run.add_argument("--gamma", type=float, default=1.0)
    run.add_argument("--t-end", type=float, required=True)
    run.add_argument("--dt", type=float, default=0.01)
    run.add_argument("--samples", type=int, default=100)
    run.set_defaults(func=cmd_qsw_run)
    sw = qsw.add_parser("sweep", parents=[common])
    sw.add_argument("--couplings", required=True)
    sw.add_argument("--p-grid", default="0:1:0.02")
    sw.add_argument("--gammas", default="1")
    sw.add_argument("--t-end", type=float, required=True)
    sw.set_defaults(func=cmd_qsw_sweep)

    ph = verbs.add_parser("photonic", parents=[common]).add_subparsers(dest="action", required=True)
    for name, func in (("run", cmd_photonic_run), ("calibrate", cmd_photonic_calibrate)):
        sub = ph.add_parser(name, parents=[common])
        sub.add_argument("--layout", required=True)
        sub.add_argument("--kappa", type=float, default=0.4)
        sub.add_argument("--nnn-ratio", type=float, default=0.2)
        sub.set_defaults(func=func)
        if name == "run":
            sub.add_argument("--dbeta-max", type=float, default=0.4)
            sub.add_argument("--segment", type=float, default=3.0)
            sub.add_argument("--sink-length", type=int, default=62)
            sub.add_argument("--z-end", type=float, default=60.0)
            sub.add_argument("--z-step", type=float, default=1.0)
            sub.add_argument("--realizations", type=int, default=100)
            sub.add_argument("--loss-db", type=float, default=0.0)
            sub.add_argument("--loss-reference", type=float, default=60.0)
            sub.add_argument("--width", choices=("full", "half"), default="full")
            sub.add_argument("--noise-out", help="write the base-seed noise map as JSON")
        else:
            sub.add_argument("--ensemble", required=True)
            sub.add_argument("--gamma", type=float, default=1.0, help="sink rate in units of kappa")
            sub.add_argument("--p-grid", default="0:1:0.01")

    orc = verbs.add_parser("oracle", parents=[common]).add_subparsers(dest="action", required=True)
    la = orc.add_parser("linear-array", parents=[common])
    la.add_argument("--dbeta-list", default="0,0.2,0.4,0.8")
    la.add_argument("--p-grid", default="0,0.1,0.5,1")
    la.add_argument("--count", type=int, default=101)
    la.add_argument("--length", type=float, default=50.0)
    la.add_argument("--kappa", type=float, default=0.4)
    la.add_argument("--segment", type=float, default=3.0)
    la.add_argument("--realizations", type=int, default=200)
    la.set_defaults(func=cmd_oracle_linear_array)

    rec = verbs.add_parser("recipe", parents=[common])
    rec.add_argument("name", choices=("fig2", "si1", "fig4", "si5", "sqrw", "regenerate"))
    rec.add_argument("--manifest")
    rec.set_defaults(func=cmd_recipe)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.seed is None and args.func is not cmd_recipe:
        args.seed = 0
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
