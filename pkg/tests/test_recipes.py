import json

import numpy as np
import pytest

from qmaze.cli import main, parse_grid
from qmaze.plots import EmptyInput, Panel, Series, line_chart, render
from qmaze.recipes import ExperimentConfig, Table, regenerate, run_recipe

SMALL_FIG4 = dict(recipe="fig4", z_step=5.0, realizations=6, calib_p_step=0.1, noise_seeds=3)


def small(**kw):
    return ExperimentConfig().updated(**kw)


# --- config and tables ---------------------------------------------------


def test_config_text_round_trip():
    cfg = small(seed=7, lengths=(15.0, 30.0), sizes=(16,), maze_file="x.json")
    back = ExperimentConfig.from_text(cfg.to_text())
    assert back == cfg
    assert back.config_hash == cfg.config_hash


def test_hash_ignores_run_options():
    cfg = ExperimentConfig()
    assert cfg.updated(out_dir="elsewhere", threads=8).config_hash == cfg.config_hash
    assert cfg.updated(seed=1).config_hash != cfg.config_hash


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError):
        ExperimentConfig.from_text("bogus = 1\n")
    cfg = ExperimentConfig.from_text("# comment\nseed = 3  # trailing\n\nkappa = 0.5\n")
    assert (cfg.seed, cfg.kappa) == (3, 0.5)


def test_table_csv_header():
    t = Table(("a", "b"), [(1, 0.5), (2, True)])
    lines = t.to_csv("abc").splitlines()
    assert lines == ["# config_hash=abc", "a,b", "1,0.5", "2,1"]


def test_parse_grid():
    assert parse_grid("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_grid("0.1, 2") == [0.1, 2.0]


# --- plots ---------------------------------------------------------------


def test_empty_plot_rejected():
    with pytest.raises(EmptyInput):
        render([])
    with pytest.raises(EmptyInput):
        line_chart([Series("none", [], [])])


def test_single_series_chart():
    svg = line_chart([Series("s", [2.0, 4.0, 6.0], [-1.0, 0.0, 3.0])], "t", "x", "y")
    assert svg.count("<polyline") == 1
    assert ">2<" in svg and ">6<" in svg  # x ticks span the data
    assert ">-1<" in svg and ">3<" in svg
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")


def test_multi_panel_render():
    panels = [Panel(f"p{k}", [Series("a", [0, 1], [0, k + 1])]) for k in range(3)]
    svg = render(panels)
    assert svg.count('class="axis"') == 6
    assert svg.count("<polyline") == 3


# --- recipes -------------------------------------------------------------


def test_fig2_toy_smoke():
    b = run_recipe(small(recipe="fig2", sizes=(4, 9), mazes_per_size=2))
    E = b.tables["fig2_runs"].column("E")
    assert len(E) == 2 * 2 * 3
    assert np.all((E >= 0) & (E <= 1))
    assert np.all(np.isfinite(b.tables["fig2_summary"].column("median_speedup")))
    with pytest.raises(ValueError):
        run_recipe(small(recipe="fig2", sizes=(5,), mazes_per_size=1))


def test_si1_zero_gamma_edge():
    b = run_recipe(small(recipe="si1", si1_sizes=(4,), gammas=(0.0, 1.0), p_step=0.5, threads=2))
    sweep = b.tables["si1_sweep"]
    g = sweep.column("gamma")
    assert np.all(sweep.column("E")[g == 0.0] == 0.0)
    assert len(b.tables["si1_optimum"].rows) == 2


@pytest.fixture(scope="module")
def fig4_small():
    return run_recipe(small(**SMALL_FIG4))


def test_fig4_small_checks(fig4_small):
    checks = dict(fig4_small.tables["fig4_checks"].rows)
    assert checks["coherent_vs_lindblad_p0_max_abs"] <= 1e-6
    noisy = fig4_small.tables["fig4_noisy"]
    seeds = [noisy.column(f"noise{k}") for k in (1, 2, 3)]
    assert not np.allclose(seeds[0], seeds[1]) and not np.allclose(seeds[1], seeds[2])
    svg = fig4_small.figures["fig4"]
    assert svg.count('class="axis"') == 6  # three panels
    z = fig4_small.tables["fig4_average"].column("z_mm")
    assert {10.0, 20.0, 30.0, 40.0, 50.0, 60.0} <= set(z.tolist())


def test_si5_zero_loss_and_sign():
    b = run_recipe(small(recipe="si5", loss_db=0.0, realizations=2, z_step=10.0))
    assert np.all(b.tables["si5_overestimation"].column("mean_over") == 0)
    b = run_recipe(small(recipe="si5", realizations=3, z_step=10.0))
    assert np.all(b.tables["si5_overestimation"].column("min_over") >= 0)


def test_sqrw_small():
    b = run_recipe(
        small(
            recipe="sqrw", array_count=41, array_length=15.0, array_dbetas=(0.0, 2.0),
            array_p_grid=(0.0, 1.0), array_realizations=5,
        )
    )
    ex = dict(b.tables["sqrw_exponents"].rows)
    assert ex["dbeta=0"] == pytest.approx(2.0, abs=0.05)
    assert ex["p=1"] == pytest.approx(1.0, abs=0.05)
    assert len(b.tables["sqrw_rms"].rows) == 4


def test_unknown_recipe():
    with pytest.raises(ValueError):
        run_recipe(small(recipe="nope"))


def test_same_config_same_bytes(fig4_small):
    again = run_recipe(small(**SMALL_FIG4, threads=3))
    for name in fig4_small.tables:
        assert again.csv(name) == fig4_small.csv(name)


def test_manifest_regeneration(tmp_path, fig4_small):
    out = fig4_small.write(tmp_path / "a")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["budget_class"] == "ci"
    assert manifest["config_hash"] == fig4_small.config.config_hash
    regenerate(out / "manifest.json", tmp_path / "b")
    for name in manifest["tables"]:
        assert (tmp_path / "b" / name).read_bytes() == (out / name).read_bytes()
    assert (out / "fig4.svg").exists()


# --- CLI -----------------------------------------------------------------


def test_cli_pipeline(tmp_path, capsys):
    m = tmp_path / "maze.json"
    assert main(["maze", "gen", "--rows", "3", "--cols", "3", "--seed", "4", "--out", str(m)]) == 0
    main(["maze", "couplings", "--maze", str(m), "--out", str(tmp_path / "k.csv")])
    assert (tmp_path / "k.csv").read_text().startswith("# size=9 in=0 out=8")

    from qmaze.instances import maze18

    maze18().save(tmp_path / "m18.json")
    main(
        ["--out", str(tmp_path / "lay.json"), "unfold", "--maze", str(tmp_path / "m18.json"),
         "--couplings-out", str(tmp_path / "k18.csv"), "--T", "0.4"]
    )
    assert json.loads((tmp_path / "lay.json").read_text())["main_chain"][0] == 0

    main(["qsw", "run", "--couplings", str(tmp_path / "k.csv"), "--p", "0.1", "--t-end", "5",
          "--samples", "10", "--out", str(tmp_path / "run.csv")])
    lines = (tmp_path / "run.csv").read_text().splitlines()
    assert lines[0] == "t,E,trace,min_eig,purity" and len(lines) == 12

    main(["qsw", "sweep", "--couplings", str(tmp_path / "k.csv"), "--p-grid", "0,0.5,1",
          "--gammas", "1", "--t-end", "5", "--threads", "2", "--out", str(tmp_path / "sw.csv")])
    assert len((tmp_path / "sw.csv").read_text().splitlines()) == 4

    main(["photonic", "run", "--layout", str(tmp_path / "lay.json"), "--realizations", "3",
          "--z-step", "10", "--out", str(tmp_path / "ens.csv"), "--noise-out", str(tmp_path / "noise.json")])
    assert "mean_E" in (tmp_path / "ens.csv").read_text()
    assert len(json.loads((tmp_path / "noise.json").read_text())["dbeta"]) == 80

    main(["photonic", "calibrate", "--layout", str(tmp_path / "lay.json"), "--ensemble",
          str(tmp_path / "ens.csv"), "--p-grid", "0:1:0.25", "--out", str(tmp_path / "cal.csv")])
    assert "best_p=" in capsys.readouterr().err
    assert len((tmp_path / "cal.csv").read_text().splitlines()) == 6

    main(["oracle", "linear-array", "--count", "21", "--length", "5", "--realizations", "2",
          "--dbeta-list", "0,1", "--p-grid", "0", "--out", str(tmp_path / "la.csv")])
    assert (tmp_path / "la.csv").read_text().startswith("waveguide_index")


def test_cli_recipe_and_regenerate(tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text(small(**SMALL_FIG4).to_text(include_run_options=False))
    main(["recipe", "fig4", "--config", str(cfg), "--out", str(tmp_path / "r1")])
    main(["recipe", "regenerate", "--manifest", str(tmp_path / "r1" / "manifest.json"), "--out", str(tmp_path / "r2")])
    for f in (tmp_path / "r1").glob("*.csv"):
        assert (tmp_path / "r2" / f.name).read_bytes() == f.read_bytes()
        assert f.read_text().startswith("# config_hash=")
