import json
import subprocess
import sys

import pytest

from hausspec.cli import run


def ok(*argv):
    code, out, err = run(list(argv))
    assert code == 0, err
    return out


def test_witt_text_json_csv():
    assert ok("witt", "--d", "2", "--n", "6") == "9\n"
    data = json.loads(ok("witt", "--d", "2", "--n", "6", "--format", "json", "--seed", "11"))
    assert data["seed"] == 11 and data["command"] == "witt"
    assert data["result"]["value"] == 9 and data["result"]["kind"] == "exact"
    lines = ok("witt", "--d", "2", "--n", "6", "--format", "csv").splitlines()
    assert lines == ["# command=witt seed=0", "d,n,witt,kind", "2,6,9,exact"]


def test_collect_worked_case():
    assert ok("collect", "--p", "3", "--r", "2", "--word", "x2 x1 x2 x1") == "x1^2 x2^2 [x2,x1]^3\n"


def test_phi_and_hall():
    assert ok("phi", "--p", "3", "--W", "6", "--word", "[x2,x1]^p^2").startswith("1*pi^2*[x2,x1]")
    assert ok("hall", "--d", "2", "--W", "3").split() == ["x1", "x2", "[x2,x1]", "[[x2,x1],x1]", "[[x2,x1],x2]"]


def test_closure_and_density():
    assert ok("closure", "--d", "2", "--W", "6", "--gens", "x1; [x2,x1]") == "1 1 1 1 2 2\n"
    out = ok("density", "--d", "2", "--W", "6", "--gens", "x1; [x2,x1]")
    assert out.splitlines()[-1] == "6 2 8/23"


def test_exit_codes():
    assert run(["witt", "--d", "2"])[0] == 1  # malformed
    assert run(["nonsense"])[0] == 1
    assert run(["collect", "--r", "2", "--word", "[x1,x2]"])[0] == 2  # non-basic core
    assert run(["construct-alpha", "--alpha", "1/2", "--p", "2", "--W", "5"])[0] == 2
    assert run(["hall", "--d", "2", "--W", "40"])[0] == 3
    assert run(["phi", "--W", "2", "--word", "[[x2,x1],x1]"])[0] == 4


def test_config_file(tmp_path):
    cfg = tmp_path / "w.json"
    cfg.write_text(json.dumps({"d": 3, "n": 4}))
    assert ok("witt", "--config", str(cfg)) == "18\n"
    cfg.write_text(json.dumps({"d": 3, "bogus": 1}))
    assert run(["witt", "--config", str(cfg)])[0] == 1


def test_build_then_scan(tmp_path):
    built = ok("build-spectrum", "--X", "0,1/2,1", "--imax", "9", "--format", "json")
    path = tmp_path / "f.json"
    path.write_text(built)
    out = ok("scan-spectrum", "--config", str(path), "--random", "5", "--seed", "2")
    assert out.splitlines()[0] == "values 0 1/2 1"
    data = json.loads(ok("scan-spectrum", "--config", str(path), "--format", "json"))
    assert data["result"]["values"] == ["0", "1/2", "1"]
    assert all(s["kind"] == "window" for s in data["result"]["samples"])


def test_scan_inconclusive_exit():
    code, out, _ = run(["scan-spectrum", "--X", "0,1/2,1", "--imax", "6", "--gaps", "custom", "--base", "4"])
    assert code == 4 and out.startswith("values")


def test_lattice_commands():
    out = ok("lambda-series", "--rank", "2", "--imax", "2", "--format", "csv")
    assert out.splitlines()[2:] == ["0,0,0,0,1,\"1,0;0,1\",exact", "1,1,1,0,1,\"1,0;0,3\",exact",
                                    "2,3,2,1,1,\"3,0;0,9\",exact"]
    assert ok("c-equiv", "--rank", "3", "--imax", "3", "--c", "2").split() == ["0", "True", "1", "True", "2",
                                                                              "True", "3", "True"]


def test_product_hdim_window():
    out = ok("product-hdim", "--t", "2", "--k", "2", "--inner", "0", "--window", "8")
    assert out.splitlines()[0] == "1/2"
    data = json.loads(ok("product-hdim", "--t", "1", "--k", "1", "--inner", "1/2", "--ranks", "2,1", "--format", "json"))
    assert data["result"]["value"] == "1/2" and data["result"]["kind"] == "exact"


def test_figures_written_deterministically(tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    for f in (a, b):
        ok("construct-alpha", "--alpha", "1/2", "--W", "6", "--figure", str(f))
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "scan.png"
    ok("scan-spectrum", "--X", "0,1/2,1", "--imax", "9", "--figure", str(c))
    assert c.stat().st_size > 0


def test_verify_phi_command():
    out = ok("verify-phi", "--W", "6", "--gens", "[x2,x1]; [[x2,x1],x1]^p", "--samples", "10", "--seed", "1")
    assert "passed=True" in out
    assert run(["verify-phi", "--W", "6", "--gens", "(x2 x1)^2"])[0] == 2


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "hausspec.cli", "witt", "--d", "3", "--n", "3"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == "8\n"


@pytest.mark.parametrize("fmt", ["text", "json", "csv"])
def test_reports_byte_identical(fmt):
    argv = ["scan-spectrum", "--X", "0,1/3,1/2,1", "--imax", "12", "--random", "4", "--seed", "9", "--format", fmt]
    assert ok(*argv) == ok(*argv)
