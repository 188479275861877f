import csv
import json
import subprocess
import sys

import pytest

from ecdlab.cli import SUBCOMMANDS, dispatch, main, parse_config, parse_text
from ecdlab.errors import ConfigError
from oracles import T_DET


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_file_fills_defaults(tmp_path):
    cfg = parse_config(_write(tmp_path, "[classical]\nlambda_c = 1\n"), "analytic-secd")
    assert cfg["classical"]["lambda_c"] == 1.0
    assert cfg["classical"]["E"] == 1.0
    assert cfg["potential"] == {"kind": "quartic", "a": 1.0, "omega": 2.0, "v0": 1.0}
    assert cfg["quantum"]["n_grid"] == 4096


def test_negative_rate_message():
    with pytest.raises(ConfigError, match="rate must be nonnegative"):
        parse_text("[classical]\nlambda_c = -1\n")


def test_duplicate_names_both_lines():
    with pytest.raises(ConfigError) as exc:
        parse_text("[classical]\nlambda_c = 1\n\n# note\nlambda_c = 2\n")
    assert "lines 2 and 5" in str(exc.value)


def test_unknown_key_and_section_with_line_numbers():
    with pytest.raises(ConfigError) as exc:
        parse_text("[classical]\nlambda_c = 1\nlamda = 2\n[extra]\nx = 1\n")
    msg = str(exc.value)
    assert "line 3: unknown key 'lamda'" in msg
    assert "line 4: unknown section [extra]" in msg


def test_missing_required_key():
    with pytest.raises(ConfigError, match="lambda_c: required"):
        parse_text("[potential]\na = 1\n", "simulate-secd")
    parse_text("[potential]\na = 1\n", "dimensionless")


def test_bad_values_reported():
    with pytest.raises(ConfigError) as exc:
        parse_text("[classical]\nlambda_c = abc\nu0 = 2\n[quantum]\nhbar = 0.1, -0.2\n")
    assert len(exc.value.problems) == 3


def test_lists_and_comments():
    cfg = parse_text("[quantum]\nhbar = 0.1, 0.05 0.02  ; three values\n[sweep]\nbetas = 1 2 4 # c\n")
    assert cfg["quantum"]["hbar"] == [0.1, 0.05, 0.02]
    assert cfg["sweep"]["betas"] == [1.0, 2.0, 4.0]


def test_analytic_zero_rate_total_is_deterministic_time(tmp_path):
    p = _write(tmp_path, "[classical]\nlambda_c = 0\nu0 = 1\n")
    out = tmp_path / "o"
    assert main(["analytic-secd", "--config", str(p), "--out", str(out)]) == 0
    d = json.loads((out / "analytic.json").read_text())
    assert d["total"] == d["t_det"]
    assert d["t_det"] == pytest.approx(T_DET, rel=1e-9)
    man = json.loads((out / "manifest.json").read_text())
    assert man["config_sha256"] and man["seed"] == 0 and "numpy" in man["versions"]
    assert man["outputs"] == ["analytic.json"]


def test_simulation_is_byte_reproducible(tmp_path):
    p = _write(tmp_path, "[classical]\nlambda_c = 1\nn_traj = 500\nseed = 4\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate-secd", "--config", str(p), "--out", str(a), "--threads", "1"]) == 0
    assert main(["simulate-secd", "--config", str(p), "--out", str(b), "--threads", "3"]) == 0
    assert (a / "trajectories.csv").read_bytes() == (b / "trajectories.csv").read_bytes()
    with open(a / "trajectories.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["traj_id", "seed", "hit", "t_real", "s_elapsed", "n_flips"]
    assert len(rows) == 501 and rows[1][1] == "4"


def test_seed_flag_overrides(tmp_path):
    p = _write(tmp_path, "[classical]\nlambda_c = 1\nn_traj = 50\n")
    a, b = tmp_path / "a", tmp_path / "b"
    main(["simulate-secd", "--config", str(p), "--out", str(a), "--seed", "9"])
    main(["simulate-secd", "--config", str(p), "--out", str(b)])
    assert (a / "trajectories.csv").read_bytes() != (b / "trajectories.csv").read_bytes()
    assert json.loads((a / "manifest.json").read_text())["seed"] == 9


def test_sweep_header(tmp_path):
    p = _write(tmp_path, "[classical]\nlambda_c = 1\n[sweep]\nbetas = 1 4 16\nn_traj = 200\n")
    out = tmp_path / "o"
    code = main(["sweep", "--config", str(p), "--out", str(out)])
    assert code in (0, 2)
    header = (out / "sweep.csv").read_text().splitlines()[0]
    assert header == "beta,v0,regime,Tc_analytic,Tc_mc_mean,Tc_mc_se,Tq_bound,Tq_measured,Tsgd_form,Tqtw_form"


@pytest.mark.parametrize("cmd,files", [
    ("validate", ["validation.json"]),
    ("dimensionless", ["dimensionless.csv"]),
    ("spectrum", ["spectrum.csv", "spectrum.json"]),
    ("evolve", ["evolve.csv"]),
    ("hit-quantum", ["pbar.csv", "qhit.csv"]),
])
def test_subcommands_write_outputs(tmp_path, cmd, files):
    p = _write(tmp_path, "[quantum]\nhbar = 0.1\nn_grid = 512\nalpha = 0.6\n")
    out = tmp_path / "o"
    assert main([cmd, "--config", str(p), "--out", str(out)]) == 0
    for f in files + ["manifest.json"]:
        assert (out / f).exists()


def test_spectrum_header(tmp_path):
    p = _write(tmp_path, "[quantum]\nhbar = 0.1\nn_grid = 512\n")
    out = tmp_path / "o"
    main(["spectrum", "--config", str(p), "--out", str(out)])
    lines = (out / "spectrum.csv").read_text().splitlines()
    assert lines[0] == "n,E_n,E_wkb_n,rel_err"
    assert len(lines) == 513


def test_hit_quantum_several_hbar(tmp_path):
    p = _write(tmp_path, "[quantum]\nhbar = 0.1 0.08\nn_grid = 512\nalpha = 0.6\n")
    out = tmp_path / "o"
    assert main(["hit-quantum", "--config", str(p), "--out", str(out)]) == 0
    assert (out / "pbar_0.csv").exists() and (out / "pbar_1.csv").exists()
    assert (out / "qhit.csv").read_text().splitlines()[0] == "hbar,T_hit_numeric,T_bound"


def test_failed_validation_exits_two(tmp_path, monkeypatch):
    import ecdlab.cli as cli
    from ecdlab.potential import Check, ValidationReport
    bad = ValidationReport(Check(True, ""), Check(False, "one minimum"), Check(True, ""))
    monkeypatch.setattr("ecdlab.potential.validate_assumptions", lambda lnd: bad)
    cfg = parse_text("", "validate")
    assert dispatch(cfg, tmp_path / "o") == 2
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["warnings"]


def test_errors_exit_one(tmp_path, capsys):
    p = _write(tmp_path, "[classical]\nlambda_c = -1\n")
    assert main(["analytic-secd", "--config", str(p)]) == 1
    assert "rate must be nonnegative" in capsys.readouterr().err
    assert main(["analytic-secd", "--config", str(tmp_path / "missing.ini")]) == 1
    p2 = _write(tmp_path, "[quantum]\nhbar = 0.1 0.2\n", "two.ini")
    assert main(["spectrum", "--config", str(p2), "--out", str(tmp_path / "x")]) == 1


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("ECD_LAB_THREADS", "2")
    p = _write(tmp_path, "[classical]\nlambda_c = 1\nn_traj = 20\n")
    main(["simulate-secd", "--config", str(p), "--out", str(tmp_path / "o")])
    assert json.loads((tmp_path / "o" / "manifest.json").read_text())["threads"] == 2


def test_module_entry_point(tmp_path):
    p = _write(tmp_path, "[classical]\nlambda_c = 0\n")
    r = subprocess.run([sys.executable, "-m", "ecdlab", "analytic-secd", "--config", str(p),
                        "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr


def test_subcommand_list():
    assert SUBCOMMANDS == ("validate", "simulate-secd", "analytic-secd", "spectrum", "evolve",
                           "hit-quantum", "dimensionless", "sweep")
