import os

import pytest

from hubquench import ConfigError, build_config, parse_grid
from hubquench.cli import main
from hubquench.config import read_config_file
from hubquench.presets import preset_config, run_preset


def read_lines(path):
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read().splitlines()


def read_bytes(path):
    with open(path, "rb") as handle:
        return handle.read()


def csv_columns(path):
    return read_lines(path)[0].split(",")


# ---------------------------------------------------------------------------
# configuration parsing

def test_parse_grid_forms():
    assert parse_grid("0:10:5") == (0.0, 2.5, 5.0, 7.5, 10.0)
    assert parse_grid("1,2,3.5") == (1.0, 2.0, 3.5)
    with pytest.raises(ConfigError):
        parse_grid("0:10")
    with pytest.raises(ConfigError):
        parse_grid("a,b")


def test_parse_config_from_file_and_flags(tmp_path):
    from hubquench import parse_config

    path = tmp_path / "run.cfg"
    path.write_text("L = 4\nu_grid = 0:10:3\nv0_grid = 1\n")
    config = parse_config(str(path), {"beta": 2.0})
    assert config.n_sites == 4 and config.beta == 2.0
    assert config.u_grid == (0.0, 5.0, 10.0)


def test_config_file_parsing(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("""
# comment line
L = 4
shape = harmonic   # trailing comment
u_grid = 0:10:3
beta = 2.0
""")
    values = read_config_file(str(path))
    assert values == {"n_sites": 4, "shape": "harmonic",
                      "u_grid": (0.0, 5.0, 10.0), "beta": 2.0}


def test_config_file_unknown_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("flux_capacitor = 1\n")
    with pytest.raises(ConfigError, match="unknown config key"):
        read_config_file(str(path))


def test_config_file_bad_value(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("beta = warm\n")
    with pytest.raises(ConfigError, match="bad value"):
        read_config_file(str(path))


def test_validation_rejects_decreasing_grid():
    with pytest.raises(ConfigError, match="strictly increasing"):
        build_config(flag_overrides={"u_grid": (1.0, 0.5)})


def test_validation_names_exact_size_limit():
    with pytest.raises(ConfigError, match="at most 8 sites"):
        build_config(flag_overrides={"method": "exact", "n_sites": 16})


def test_validation_rejects_odd_chain():
    with pytest.raises(ConfigError, match="even"):
        build_config(flag_overrides={"n_sites": 5, "method": "ks"})


def test_zero_quench_amplitude_accepted(tmp_path):
    from hubquench.presets import run_exact_sweep
    config = build_config(flag_overrides={
        "n_sites": 2, "dv0": 0.0, "u_grid": (1.0,), "v0_grid": (1.0,),
        "out_dir": str(tmp_path / "zero"), "threads": 1})
    run_exact_sweep(config)
    header, row = read_lines(tmp_path / "zero" / "moments.csv")[:2]
    values = dict(zip(header.split(","), row.split(",")))
    for key in ("mean_w", "w2", "theta2", "s_irr"):
        assert abs(float(values[key])) < 1e-12


def test_preset_fig1_resolved_grid():
    config = preset_config("fig1")
    assert config.n_sites == 2 and config.method == "exact"
    assert len(config.u_grid) == 41 and config.u_grid[-1] == 10.0
    assert len(config.v0_grid) == 41 and config.v0_grid[-1] == 5.0
    assert config.beta == 1.0 and config.dv0 == 0.05


def test_preset_fig8_reduces_amplitude_and_skips_zero():
    config = preset_config("fig8")
    assert config.dv0 == -0.05
    assert config.v0_grid[0] > 0.0
    assert config.shape == "harmonic" and config.n_sites == 20


def test_unknown_preset():
    with pytest.raises(ConfigError, match="unknown preset"):
        run_preset("fig99")


# ---------------------------------------------------------------------------
# preset runners and determinism

def _tiny_fig1_overrides(out_dir):
    return {"u_grid": (0.0, 5.0, 10.0), "v0_grid": (0.0, 2.5, 5.0),
            "out_dir": out_dir, "threads": 1}


def test_fig1_small_grid_outputs(tmp_path):
    outcome = run_preset("fig1", flag_overrides=_tiny_fig1_overrides(
        str(tmp_path / "a")))
    assert outcome.scf_failures == 0
    moments = os.path.join(outcome.out_dir, "moments.csv")
    assert csv_columns(moments) == [
        "U", "v0", "beta", "dv0", "mean_w", "w2", "w2_c", "theta2", "s_irr",
        "s_irr_func", "deltaF", "jarzynski_residual", "fdr_residual"]
    rows = read_lines(moments)[1:]
    assert len(rows) == 9
    for row in rows:
        values = dict(zip(csv_columns(moments), row.split(",")))
        assert float(values["jarzynski_residual"]) < 1e-9
        assert -float(values["mean_w"]) >= -1e-12  # extractable work
    densities = os.path.join(outcome.out_dir, "densities.csv")
    assert len(read_lines(densities)) == 1 + 9 * 2


def test_preset_reruns_are_byte_identical(tmp_path):
    first = run_preset("fig1", flag_overrides=_tiny_fig1_overrides(
        str(tmp_path / "a")))
    second = run_preset("fig1", flag_overrides=_tiny_fig1_overrides(
        str(tmp_path / "b")))
    for path_a, path_b in zip(first.files, second.files):
        assert os.path.basename(path_a) == os.path.basename(path_b)
        assert read_bytes(path_a) == read_bytes(path_b)


def test_figd_small_override(tmp_path):
    outcome = run_preset("figd", flag_overrides={
        "l_list": (2, 4), "u_grid": (0.0, 5.0, 10.0),
        "out_dir": str(tmp_path / "figd"), "threads": 1})
    assert outcome.scf_failures == 0
    metric = os.path.join(outcome.out_dir, "metric.csv")
    assert csv_columns(metric) == ["L", "U", "v0", "beta", "D"]
    rows = [line.split(",") for line in read_lines(metric)[1:]]
    assert len(rows) == 6
    assert all(0.0 <= float(r[-1]) <= 0.05 for r in rows)


@pytest.mark.parametrize("name,overrides,expected", [
    ("fig1", {"u_grid": (0.0, 5.0), "v0_grid": (2.0,)},
     ("moments.csv", "densities.csv")),
    ("fig2", {"u_grid": (0.0, 5.0), "v0_grid": (2.0,)},
     ("ks_moments.csv", "scf.csv")),
    ("figd", {"l_list": (2,), "u_grid": (0.0, 5.0)},
     ("metric.csv", "scf.csv", "densities.csv")),
    ("fig3a", {"u_grid": (0.0, 3.0)}, ("w2.csv",)),
    ("fig3b", {"beta_grid": (0.5, 1.0)}, ("theta2.csv",)),
    ("fig6", {"n_sites": 4, "u_grid": (0.0, 5.0), "v0_grid": (2.0,)},
     ("compare.csv", "compare_densities.csv")),
    ("fig7", {"u_grid": (0.0, 5.0), "v0_grid": (1.0,)},
     ("ks_moments.csv", "scf.csv")),
    ("fig8", {"u_grid": (2.0,), "v0_grid": (0.1, 0.2)},
     ("ks_moments.csv", "scf.csv")),
    ("fig9", {"u_grid": (0.0, 5.0)}, ("scf.csv",)),
])
def test_every_preset_runner_smoke(tmp_path, name, overrides, expected):
    out = str(tmp_path / name)
    outcome = run_preset(name, flag_overrides={
        "out_dir": out, "threads": 1, **overrides})
    assert outcome.scf_failures == 0
    written = {os.path.basename(path) for path in outcome.files}
    assert set(expected) <= written
    for path in outcome.files:
        assert len(read_lines(path)) >= 2
    assert os.path.exists(os.path.join(out, "config.txt"))


def test_fig8_work_always_negative_on_smoke_grid(tmp_path):
    outcome = run_preset("fig8", flag_overrides={
        "out_dir": str(tmp_path / "f8"), "threads": 1,
        "u_grid": (0.0, 10.0), "v0_grid": (0.05, 0.3)})
    moments = next(p for p in outcome.files if p.endswith("ks_moments.csv"))
    header = csv_columns(moments)
    for line in read_lines(moments)[1:]:
        row = dict(zip(header, line.split(",")))
        assert float(row["mean_w"]) < 0.0


def test_provenance_written(tmp_path):
    out = str(tmp_path / "fig9")
    run_preset("fig9", flag_overrides={"out_dir": out, "threads": 1,
                                       "u_grid": (0.0, 5.0)})
    lines = read_lines(os.path.join(out, "config.txt"))
    assert lines[0].startswith("version = ")
    assert "preset = fig9" in lines
    assert any(line.startswith("u_grid = 0,5") for line in lines)


# ---------------------------------------------------------------------------
# command-line interface

def test_cli_preset_exit_zero(tmp_path, capsys):
    code = main(["preset", "fig9", "--out", str(tmp_path / "p"),
                 "--threads", "1"])
    assert code == 0
    assert os.path.exists(tmp_path / "p" / "scf.csv")
    assert "wrote" in capsys.readouterr().out


def test_cli_preset_determinism(tmp_path):
    main(["preset", "fig9", "--out", str(tmp_path / "x"), "--threads", "1"])
    main(["preset", "fig9", "--out", str(tmp_path / "y"), "--threads", "1"])
    assert read_bytes(tmp_path / "x" / "scf.csv") \
        == read_bytes(tmp_path / "y" / "scf.csv")


def test_cli_validation_error_exit_two(tmp_path, capsys):
    code = main(["sweep", "--method", "exact", "--L", "16",
                 "--u-grid", "0:10:2", "--v0-grid", "0:5:2",
                 "--out", str(tmp_path / "x")])
    assert code == 2
    assert "at most 8 sites" in capsys.readouterr().err


def test_cli_scf_nonconvergence_exit_three(tmp_path, capsys):
    code = main(["sweep", "--method", "ks", "--L", "4", "--shape", "linear",
                 "--u-grid", "10", "--v0-grid", "5", "--max-iter", "2",
                 "--threads", "1", "--out", str(tmp_path / "x")])
    assert code == 3
    scf = read_lines(tmp_path / "x" / "scf.csv")
    assert scf[1].split(",")[-1] == "0"  # converged flag written as 0


def test_cli_exact_sweep_small(tmp_path):
    code = main(["sweep", "--method", "exact", "--L", "2", "--shape", "linear",
                 "--u-grid", "0,3", "--v0-grid", "2", "--threads", "1",
                 "--out", str(tmp_path / "s")])
    assert code == 0
    assert os.path.exists(tmp_path / "s" / "moments.csv")
    assert os.path.exists(tmp_path / "s" / "densities.csv")


def test_cli_compare_small(tmp_path):
    code = main(["compare", "--L", "2", "--shape", "linear", "--u-grid", "0,3",
                 "--v0-grid", "2", "--threads", "1",
                 "--out", str(tmp_path / "c")])
    assert code == 0
    compare = os.path.join(tmp_path / "c", "compare.csv")
    header = csv_columns(compare)
    assert {"mean_w_exact", "mean_w_ks", "theta2_exact", "theta2_ks",
            "D"} <= set(header)
    row = dict(zip(header, read_lines(compare)[1].split(",")))
    assert float(row["dmean_w"]) < 1e-8  # U = 0 row: KS is exact


def test_cli_scf_command(tmp_path, capsys):
    code = main(["scf", "--L", "4", "--shape", "linear", "--U", "3", "--v0",
                 "2", "--out", str(tmp_path / "scf1")])
    assert code == 0
    assert "converged" in capsys.readouterr().out
    rows = read_lines(tmp_path / "scf1" / "scf.csv")
    assert len(rows) == 5


def test_cli_pdw_command(tmp_path, capsys):
    code = main(["pdw", "--L", "2", "--shape", "linear", "--U", "3", "--v0",
                 "2", "--out", str(tmp_path / "pdw1")])
    assert code == 0
    out_dir = tmp_path / "pdw1"
    pdw = read_lines(out_dir / "pdw.csv")
    assert pdw[0] == "w,p"
    probs = [float(line.split(",")[1]) for line in pdw[1:]]
    assert abs(sum(probs) - 1.0) < 1e-10
    response = read_lines(out_dir / "response.csv")
    assert response[0] == "i,j,dn_dV"
    assert len(response) == 1 + 4
    assert os.path.exists(out_dir / "moments.csv")
    assert os.path.exists(out_dir / "densities.csv")


def test_cli_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
