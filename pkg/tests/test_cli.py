import json
from pathlib import Path

import pytest

from spindecay.cli import main

DATA = Path(__file__).parent / "data"
P3 = str(DATA / "p3.txt")
K3 = str(DATA / "k3.txt")
TREE = str(DATA / "binary_tree_4.txt")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_partition_json(capsys):
    code, out, _ = run(capsys, "partition", "--graph", P3, "--beta", "0", "--gamma", "2",
                       "--eps", "0.05", "--json")
    assert code == 0
    rep = json.loads(out)
    assert abs(rep["Z"] - 10) <= 0.5
    assert rep["certified"] is True and rep["regime"] == "guaranteed"
    assert len(rep["intervals"]) == 3


def test_partition_regime_refusal(capsys):
    code, _, err = run(capsys, "partition", "--graph", P3, "--beta", "0", "--gamma", "1.0")
    assert code == 3
    assert "1.1101715" in err


def test_partition_forced_override(capsys):
    code, out, _ = run(capsys, "partition", "--graph", P3, "--beta", "0", "--gamma", "2",
                       "--force", "--L", "6", "--json")
    assert code == 0 and json.loads(out)["certified"] is False


def test_partition_is_byte_identical(capsys):
    argv = ["partition", "--graph", K3, "--beta", "0", "--gamma", "2", "--json"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv, "--threads", "2")
    assert a == b


def test_json_floats_round_trip(capsys):
    _, out, _ = run(capsys, "threshold", "--beta", "0", "--gamma", "2", "--json")
    rep = json.loads(out)
    for key in ("Gamma", "D", "X", "alpha"):
        assert repr(rep[key]) in out
    assert abs(rep["Gamma"] - 1.1101715) < 1e-6
    assert abs(rep["Gamma_int"] - 1.1101714) < 1e-6
    assert rep["alpha"] < 1 and rep["M"] >= 2


def test_threshold_bad_beta(capsys):
    code, _, _ = run(capsys, "threshold", "--beta", "1.5")
    assert code == 2


def test_threshold_regime_error(capsys):
    code, _, _ = run(capsys, "threshold", "--beta", "0", "--gamma", "1.05")
    assert code == 3


def test_oracle(capsys):
    code, out, _ = run(capsys, "oracle", "--graph", K3, "--beta", "0", "--gamma", "2", "--json")
    rep = json.loads(out)
    assert code == 0 and abs(rep["Z"] - 14) < 1e-12


def test_oracle_with_pins_text(capsys):
    code, out, _ = run(capsys, "oracle", "--graph", P3, "--beta", "0", "--gamma", "2",
                       "--pin", "0:green", "--pin", "2:green")
    # ends green: centre blue weighs 1, centre green weighs gamma^2 = 4
    z = float(out.split("Z: ")[1].split()[0])
    assert code == 0 and abs(z - 5) < 1e-12


def test_marginal(capsys):
    code, out, _ = run(capsys, "marginal", "--graph", K3, "--beta", "0", "--gamma", "2",
                       "--vertex", "0", "--json")
    rep = json.loads(out)
    assert rep["p_lo"] <= 1 / 7 + 1e-15 <= rep["p_hi"] + 2e-15


def test_decay(capsys):
    code, out, _ = run(capsys, "decay", "--graph", TREE, "--beta", "0", "--gamma", "2",
                       "--Lmax", "6", "--nodes", "2", "--json")
    rep = json.loads(out)
    assert code == 0 and len(rep["delta"]) == 7 and rep["nodes"]
    assert rep["slope"] < 0


@pytest.mark.parametrize("argv", [
    ["oracle", "--graph", "/nonexistent/graph.txt", "--beta", "0", "--gamma", "2"],
    ["oracle", "--graph", P3, "--beta", "0", "--gamma", "2", "--pin", "0-blue"],
    ["oracle", "--graph", P3, "--beta", "0", "--gamma", "2", "--pin", "7:blue"],
    ["oracle", "--graph", P3, "--beta", "-1", "--gamma", "2"],
    ["marginal", "--graph", P3, "--beta", "0", "--gamma", "2", "--vertex", "0",
     "--pin", "0:blue"],
])
def test_input_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_parse_error_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n1 1\n")
    code, _, err = run(capsys, "oracle", "--graph", str(bad), "--beta", "0", "--gamma", "2")
    assert code == 2 and "line 2" in err


def test_degenerate_exit_3(capsys):
    code, _, _ = run(capsys, "partition", "--graph", P3, "--beta", "0.5", "--gamma", "2")
    assert code == 3


def test_check_quick_subset(capsys):
    code, out, _ = run(capsys, "check", "--quick", "--only", "1", "2")
    assert code == 0 and "[PASS] 1" in out and "2/2 passed" in out
