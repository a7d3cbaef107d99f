import csv
import json

import pytest

from ramanqed import cli, runner
from ramanqed.config import ConfigError, absolute_config, load_config, merged, parse_config, resolve
from ramanqed.errors import NumericalError

# small continuum grid so the CLI tests stay quick
SMALL = """\
preset: default
grid: {n_modes: 400}
integrator: {samples: 101}
"""


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def read_csv(path):
    with path.open() as fh:
        return list(csv.reader(fh))


def invoke(tmp_path, command, text, *extra, out="out"):
    cfg = write(tmp_path, text)
    code = cli.run([command, str(cfg), "--out", str(tmp_path / out), *extra])
    return code, tmp_path / out


def test_simulate_writes_outputs(tmp_path):
    code, out = invoke(tmp_path, "simulate", SMALL)
    assert code == cli.EXIT_OK
    assert {p.name for p in out.iterdir()} == {
        "trajectory.csv", "spectrum.csv", "summary.json", "metadata.json",
    }
    rows = read_csv(out / "trajectory.csv")
    assert rows[0][:4] == ["t [1]", "re_c0 [1]", "im_c0 [1]", "p0 [1]"]
    assert len(rows) == 102
    summary = json.loads((out / "summary.json").read_text())
    assert summary["grid_diagnostics"]["passed"]
    assert summary["gamma_fit_ratio"] == pytest.approx(1.0, abs=0.05)


def test_toy_preset_runs_without_validation(tmp_path, capsys):
    code, out = invoke(tmp_path, "simulate", "preset: toy2x2\n")
    assert code == cli.EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["gamma_fit"] is None
    assert "n/a" in capsys.readouterr().out


def test_dark_block_column(tmp_path):
    text = "preset: default\ngrid: {n_modes: 400, include_dark: true}\nintegrator: {samples: 51}\n"
    code, out = invoke(tmp_path, "simulate", text)
    assert code == 0
    rows = read_csv(out / "trajectory.csv")
    assert rows[0][-1] == "max_dark_amplitude [1]"
    assert max(float(r[-1]) for r in rows[1:]) < 1e-12


def test_compare_verdicts(tmp_path, capsys):
    code, out = invoke(tmp_path, "compare", SMALL)
    assert code == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith(("PASS", "FAIL"))]
    assert len(lines) == 3
    assert all(l.startswith("PASS") for l in lines)
    header = read_csv(out / "compare.csv")[0]
    assert "p0_rk4 [1]" in header and "p0_analytic [1]" in header


def test_compare_without_coupling_is_trivial(tmp_path):
    text = (
        "preset: default\nsystem:\n  coupling: {kind: flat, lambda0: 0.0}\n"
        "grid: {bandwidth: 40, n_modes: 400}\nintegrator: {dt: 0.001, t_max: 5, samples: 51}\n"
    )
    code, out = invoke(tmp_path, "compare", text)
    assert code == 0
    rows = read_csv(out / "compare.csv")[1:]
    for r in rows:
        assert float(r[1]) == pytest.approx(1.0, abs=1e-10)
        assert float(r[3]) == pytest.approx(1.0, abs=1e-10)


def test_validate_adiabatic_ladder(tmp_path, capsys):
    text = (
        "preset: default\ngrid: {bandwidth_gamma: 20, n_modes: 200}\n"
        "integrator: {t_max_gamma: 3, samples: 61}\nadiabatic: {ratios: [0.1, 0.03]}\n"
    )
    code, out = invoke(tmp_path, "validate-adiabatic", text, "--jobs", "1")
    assert code == 0
    rows = read_csv(out / "adiabatic.csv")
    assert rows[0][0] == "ratio [1]"
    assert [r[-1] for r in rows[1:]] == ["true", "true"]
    assert "decreasing along the ladder: yes" in capsys.readouterr().out


def test_sweep_dicke_and_single_point(tmp_path):
    code, out = invoke(tmp_path, "sweep", SMALL + "sweep: {axis: n_atoms, values: [2, 4]}\n", "--jobs", "1")
    assert code == 0
    rows = read_csv(out / "sweep.csv")
    fits = [float(r[2]) for r in rows[1:]]
    assert fits[1] / fits[0] == pytest.approx(2.0, rel=0.07)

    code, single = invoke(tmp_path, "sweep", SMALL + "sweep: {axis: n_atoms, values: [2]}\n", out="one")
    code2, sim = invoke(tmp_path, "simulate", SMALL, out="sim")
    assert code == code2 == 0
    point = read_csv(single / "sweep.csv")[1]
    summary = json.loads((sim / "summary.json").read_text())
    assert float(point[2]) == pytest.approx(summary["gamma_fit"], rel=1e-10)


def test_seed_meta_is_reproducible(tmp_path):
    _, a = invoke(tmp_path, "simulate", SMALL, "--seed-meta", out="a")
    _, b = invoke(tmp_path, "simulate", SMALL, "--seed-meta", out="b")
    for name in ("trajectory.csv", "spectrum.csv", "summary.json", "metadata.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    meta = json.loads((a / "metadata.json").read_text())
    assert "created" not in meta and meta["deterministic"]


def test_out_env_variable(tmp_path, monkeypatch):
    cfg = write(tmp_path, SMALL)
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    assert cli.run(["simulate", str(cfg)]) == 0
    assert (tmp_path / "env" / "trajectory.csv").exists()


def test_empty_config_has_line_number(tmp_path, capsys):
    code, _ = invoke(tmp_path, "simulate", "")
    assert code == cli.EXIT_CONFIG
    assert "line 1" in capsys.readouterr().err


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("preset: default\nsystem: {omega_p: -1}\n", "omega_p"),
        ("preset: default\nbogus: 1\n", "bogus"),
        ("preset: default\ngrid: {n_modes: 400}\ngrid: {n_modes: 200}\n", "duplicate"),
        ("preset: default\nadiabatic: {ratios: [0.1, 0]}\n", "resonant"),
        ("preset: default\nintegrator: {method: euler}\n", "method"),
    ],
)
def test_invalid_configs_exit_2(tmp_path, capsys, text, fragment):
    code, _ = invoke(tmp_path, "simulate" if "adiabatic" not in text else "validate-adiabatic", text)
    assert code == cli.EXIT_CONFIG
    assert fragment in capsys.readouterr().err


def test_narrow_band_exit_3_and_force(tmp_path, capsys):
    text = "preset: default\ngrid: {bandwidth_gamma: 4, n_modes: 160}\nintegrator: {samples: 51}\n"
    code, _ = invoke(tmp_path, "simulate", text)
    assert code == cli.EXIT_GRID
    assert "--force" in capsys.readouterr().err
    code, out = invoke(tmp_path, "simulate", text, "--force", out="forced")
    assert code == 0
    assert not json.loads((out / "summary.json").read_text())["grid_diagnostics"]["passed"]


def test_numerical_failure_exit_4(tmp_path, monkeypatch):
    def boom(cfg, force=False):
        raise NumericalError("norm drift")

    monkeypatch.setattr(cli, "cmd_simulate", boom)
    code, out = invoke(tmp_path, "simulate", SMALL)
    assert code == cli.EXIT_NUMERIC
    assert not out.exists()


def test_absolute_config_round_trip():
    cfg = parse_config("preset: default\n")
    again = resolve(merged(absolute_config(cfg)), {})
    assert again.params == cfg.params
    assert again.integrator == cfg.integrator
    assert again.grid == cfg.grid


def test_user_coupling_replaces_preset_gamma():
    doc = merged({"preset": "default", "system": {"coupling": {"kind": "flat", "lambda0": 0.2}}})
    assert "gamma" not in doc["system"]


def test_sweep_rejects_non_integer_atoms(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "preset: default\nsweep: {axis: n_atoms, values: [2.5]}\n"))


def test_runner_tables_have_units():
    cfg = parse_config(SMALL)
    res = runner.cmd_simulate(cfg)
    for table in res.tables.values():
        assert all("[" in c for c in table.columns)
