import json
import os

import pytest

from maryland import cli
from maryland.config import ExperimentConfig, load_config, parse_config, resolve_frequency
from maryland.errors import ConfigError


def test_parse_values_and_comments():
    cfg = parse_config("model.lambda = 2.5  # strong\n\nmodel.alpha = golden\nmodel.energies = [0, 0.5]\n"
                       "run.which = ground\n", "x.cfg")
    assert cfg.lam == 2.5 and cfg.get("model.energies") == [0, 0.5]
    assert cfg.get("run.which") == "ground"
    assert cfg.where("model.energies") == "x.cfg:4"


@pytest.mark.parametrize("text, fragment", [
    ("model.lambda 1.5", "x.cfg:1: expected 'key = value'"),
    ("model.lambda = 1\nmodel.lambda = 2", "x.cfg:2: duplicate key"),
    ("\nmodel.lamda = 1", "x.cfg:2: unknown key"),
    ("model.lambda = -1", "x.cfg:1: model.lambda must be a positive number"),
    ("run.k_range = [5, 2]", "x.cfg:1"),
    ("model.theta = {oops", "x.cfg:1: cannot parse value"),
])
def test_parse_errors_carry_location(text, fragment):
    with pytest.raises(ConfigError, match=fragment.replace("(", r"\(").replace("[", r"\[")):
        parse_config(text, "x.cfg")


def test_missing_file():
    with pytest.raises(ConfigError, match="nope.cfg"):
        load_config("nope.cfg")


def test_epsilon_must_sit_below_lyapunov_fraction():
    cfg = parse_config("run.epsilon = 0.01\nmodel.lambda = 1.5")
    with pytest.raises(ConfigError, match="L\\(E\\)/600"):
        cfg.check_epsilon([0.0])
    assert parse_config("run.epsilon = 1e-4").check_epsilon([0.0]) == 1e-4


def test_frequency_resolution():
    assert resolve_frequency("golden").cf_coeffs[:3] == (1, 1, 1)
    assert resolve_frequency([2]).cf_coeffs[:3] == (2, 2, 2)
    assert resolve_frequency([1, 50, 100], tail=[1]).q[:4] == [1, 1, 51, 5101]
    with pytest.raises(ConfigError, match="convergents"):
        resolve_frequency([1, 50, 100])
    with pytest.raises(ConfigError, match="terminated"):
        resolve_frequency(0.375)
    with pytest.raises(ConfigError, match="unknown frequency"):
        resolve_frequency("bronze")
    with pytest.raises(ConfigError, match="\\(0, 1\\)"):
        resolve_frequency(1.5)


def test_override_value_shapes():
    assert cli._override_value("1,2,3", "--ks", "run.ks") == [1, 2, 3]
    assert cli._override_value("7", "--ks", "run.ks") == [7]
    assert cli._override_value("golden", "--alpha", "model.alpha") == "golden"
    assert cli._override_value("-3,6", "--box", "run.box") == [-3, 6]


def _run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path)])


def test_scheme_command_writes_table_and_manifest(tmp_path):
    assert _run(tmp_path, "scheme", "--ks", "34,55") == 0
    rows = (tmp_path / "scheme.csv").read_text().splitlines()
    assert rows[0].startswith("k,case_tag,n,q_n")
    assert len(rows) == 3
    man = json.loads((tmp_path / "scheme.manifest.json").read_text())
    assert man["command"] == "scheme" and man["data_files"] == ["scheme.csv"]
    assert man["parameters"]["lambda"] == 1.5
    assert man["parameters"]["alpha_partial_quotients"][:3] == [1, 1, 1]
    assert man["wall_clock_seconds"] >= 0


def test_json_format(tmp_path):
    assert _run(tmp_path, "scheme", "--ks", "34", "--format", "json") == 0
    data = json.loads((tmp_path / "scheme.json").read_text())
    assert data["columns"][0] == "k"
    assert data["rows"][0]["k"] == 34


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("model.lambda = 2.0\nrun.ks = [34]\n")
    out = tmp_path / "o"
    assert cli.main(["scheme", "--config", str(cfg), "--lambda", "3", "--out", str(out)]) == 0
    man = json.loads((out / "scheme.manifest.json").read_text())
    assert man["parameters"]["lambda"] == 3.0
    assert man["config_source"] == str(cfg)


def test_csv_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d, th in ((a, "1"), (b, "4")):
        assert cli.main(["detgrowth", "--ks", "1,50", "--grid", "256", "--threads", th, "--out", str(d)]) == 0
    assert (a / "detgrowth.csv").read_bytes() == (b / "detgrowth.csv").read_bytes()


def test_green_command(tmp_path):
    assert _run(tmp_path, "green", "--energy", "0.5", "--box=0,9") == 0
    man = json.loads((tmp_path / "green.manifest.json").read_text())
    assert all(c["passed"] for c in man["checks"] if c["asserted"])


def test_exit_code_for_bad_configuration(tmp_path, capsys):
    assert _run(tmp_path, "scheme", "--ks", "0") == 2
    assert _run(tmp_path, "lyapunov", "--epsilon", "0.01", "--energies", "0") == 2
    assert _run(tmp_path, "scheme", "--set", "model.nope=1") == 2
    assert "unknown key" in capsys.readouterr().err


def test_exit_code_for_singular_phase(tmp_path):
    assert _run(tmp_path, "green", "--theta", "0.5", "--box=0,9") == 3


def test_exit_code_for_failed_lemma_rows(tmp_path, monkeypatch):
    def fake(cfg, threads):
        t = cli.Table(["name"])
        t.add("x")
        return t, {"summary": {"failed": ["x"]}, "checks": []}

    monkeypatch.setitem(cli.COMMANDS, "lemma-suite", fake)
    assert _run(tmp_path, "lemma-suite") == 4


def test_sweep(tmp_path):
    code = _run(tmp_path, "sweep", "--command", "scheme", "--key", "model.lambda", "--values", "1.5,3",
                "--ks", "34")
    assert code == 0
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(rows) == 3
    for i, lam in enumerate((1.5, 3.0)):
        man = json.loads((tmp_path / f"scheme-{i:03d}" / "scheme.manifest.json").read_text())
        assert man["parameters"]["lambda"] == lam
    assert json.loads((tmp_path / "sweep.manifest.json").read_text())["runs"][1].startswith("scheme-001")


def test_sweep_rejects_unknown_command(tmp_path):
    assert _run(tmp_path, "sweep", "--command", "frobnicate", "--key", "model.lambda", "--values", "1") == 2


def test_module_entry_point(tmp_path):
    import subprocess
    import sys
    r = subprocess.run([sys.executable, "-m", "maryland", "scheme", "--ks", "34", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert os.path.exists(tmp_path / "scheme.csv")
