import json
import subprocess
import sys

import pytest

from coinforge import __version__, formula as fml
from coinforge.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_recurrence_csv(capsys):
    code, out, _ = run(capsys, "recurrence", "--delta", "0.01", "--d", "3", "--output", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "i,p_i_0,p_i_1,lower_bound,upper_bound,pass"
    assert [l.split(",")[0] for l in lines[1:]] == ["1", "2", "3"]
    assert all(l.endswith("true") for l in lines[1:])


def test_tv_text(capsys):
    code, out, _ = run(capsys, "tv", "--delta-prime", "0.5", "--n", "1")
    assert code == 0 and float(out) == 0.5


def test_build_derand_dump(capsys, tmp_path):
    f = tmp_path / "f.json"
    code, out, _ = run(capsys, "build", "derand", "--d", "2", "--m", "6", "--f2", "64",
                       "--force", "--dump", str(f), "--output", "json")
    assert code == 0
    assert json.loads(out)["result"]["variable_count"] == 48
    assert fml.load(str(f)).variable_count == 48


def test_precondition_exit_names_inequality(capsys):
    code, out, err = run(capsys, "build", "derand", "--d", "2", "--delta", "0.5")
    assert code == 2 and out == ""
    assert "M >= 10*N2/eta" in err


def test_unknown_flag_exit_64(capsys):
    assert run(capsys, "tv", "--delta-prime", "0.5", "--n", "1", "--bogus")[0] == 64
    assert run(capsys, "nosuchcommand")[0] == 64


def test_bad_parameter_exit_64(capsys):
    assert run(capsys, "tv", "--delta-prime", "1.5", "--n", "1")[0] == 64


def test_json_embeds_config_and_version(capsys):
    code, out, _ = run(capsys, "counting-check", "--n", "10000", "--output", "json", "--seed", "7")
    doc = json.loads(out)
    assert doc["schema"] == "coinforge-report/1"
    assert doc["version"] == __version__
    assert doc["command"] == "counting-check"
    assert doc["config"] == {"seed": 7, "trials": 10000, "output": "json",
                             "force_params": False, "threads": "auto"}
    assert doc["result"]["verdict"] == "holds"


def test_simulate_byte_identical_across_threads(capsys, monkeypatch):
    argv = ["simulate", "--kind", "derand", "--d", "2", "--m", "3", "--f2", "8", "--force",
            "--trials", "3000", "--delta", "0.5", "--output", "json"]
    outs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("COINFORGE_THREADS", threads)
        code, out, _ = run(capsys, *argv)
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]
    assert outs[0] == run(capsys, *argv)[1]


@pytest.mark.parametrize("argv", [
    ["design-verify", "--q", "2", "--output", "json"],
    ["janson-check", "--m", "3", "--f2", "8", "--alpha", "0.5", "--force", "--output", "json"],
    ["degree-search", "--n", "3", "--delta", "0.8", "--epsilon", "0.05", "--output", "json"],
    ["smolensky", "--n", "4", "--sweep", "--output", "json"],
    ["amplify", "--lo", "0.1", "--hi", "0.4", "--output", "json"],
    ["recurrence", "--sweep", "--d", "3", "--output", "json"],
    ["substitute", "--kind", "ow2", "--fanins", "2,4", "--force", "--n", "6", "--alpha", "0.5",
     "--trials", "500", "--output", "json"],
    ["build", "amano", "--delta", "0.01", "--d", "3", "--output", "json"],
    ["build", "ow2", "--delta", "0.5", "--output", "json"],
])
def test_every_subcommand_emits_json(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    doc = json.loads(out)
    assert doc["command"] == argv[0] and "result" in doc


def test_degree_search_none_reported(capsys):
    code, out, _ = run(capsys, "degree-search", "--n", "2", "--delta", "0.1", "--output", "json")
    assert json.loads(out)["result"]["min_degree"] == "none"


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "coinforge", "tv", "--delta-prime", "0.5", "--n", "1"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "0.5"
