import csv
import io
import json

import pytest

from critsys import __version__
from critsys import cache as cache_mod
from critsys.cache import dumps, save_solution
from critsys.cli import RunConfig, load_config, read_config, run
from critsys.errors import DomainError
from critsys.geometry import ellipsoid, ellipsoidal_hole, save_surface


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def call_json(*argv):
    code, out, err = call(*argv)
    return code, json.loads(out), err


@pytest.fixture(scope="module")
def files(tmp_path_factory, sym4):
    d = tmp_path_factory.mktemp("cli")
    save_solution(sym4, d / "b4.json")
    save_surface(ellipsoidal_hole([1.5, 1, 1, 1], 3.0), d / "hole.json")
    save_surface(ellipsoid([2.0, 1, 1, 1]), d / "ell.json")
    # a bubble whose recorded ODE residual is far too large
    doc = json.loads(dumps(sym4))
    doc["payload"]["ode_residual"] = 1e-3
    payload = cache_mod.canonical_json(doc["payload"])
    (d / "bad.json").write_text('{"checksum":"%s","payload":%s}\n' % (cache_mod._checksum(payload), payload))
    return d


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("CRITSYS_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.delenv("CRITSYS_CONFIG", raising=False)


def test_schema_and_hyperbola():
    code, doc, _ = call_json("hyperbola", "--N", "5", "--p", "2.75")
    assert code == 0
    assert set(doc) == {"command", "inputs", "results", "diagnostics", "version"}
    assert doc["command"] == "hyperbola" and doc["version"] == __version__
    assert doc["results"]["pair"]["q"] == pytest.approx(2.0, rel=1e-14)
    assert doc["results"]["pair"]["criticality"] == "critical"
    assert doc["inputs"]["N"] == 5


def test_usage_errors():
    assert call("frobnicate")[0] == 1
    assert call("hyperbola", "--N", "5")[0] == 1
    assert call("hyperbola", "--N", "five", "--p", "2")[0] == 1
    assert call("corrector", "--bubble", "x.json", "--rho", "a,b")[0] in (1, 2)
    assert call("--version")[0] == 0


def test_domain_errors(files):
    code, doc, err = call_json("hyperbola", "--N", "2", "--p", "2")
    assert code == 2 and doc["results"] is None and doc["diagnostics"]["error"]
    assert err.startswith("critsys hyperbola:")
    code, doc, _ = call_json("hyperbola", "--N", "5", "--p", "2", "--q", "2")
    assert code == 0 and doc["results"]["pair"]["criticality"] == "subcritical"
    assert call("bubble", "solve", "--N", "5", "--p", "2", "--q", "2", "--no-cache")[0] == 2
    assert call("constants", "--bubble", str(files / "missing.json"))[0] == 2
    assert call("--quad-rel-tol", "1", "hyperbola", "--N", "5", "--p", "2.75")[0] == 2


def test_bubble_solve_cache(tmp_path):
    args = ("bubble", "solve", "--N", "6", "--p", "2", "--n-grid", "2000", "--out", str(tmp_path / "b6.json"))
    code, first, _ = call_json(*args)
    assert code == 0 and first["diagnostics"]["cache"] == "miss"
    code, second, _ = call_json(*args)
    assert code == 0 and second["diagnostics"]["cache"] == "hit"
    assert first["results"] == second["results"]
    assert (tmp_path / "b6.json").exists()
    assert first["results"]["q"] == pytest.approx(2.0, rel=1e-14)


def test_bubble_show(files):
    code, doc, _ = call_json("bubble", "show", str(files / "b4.json"), "--radii", "0,1,10")
    assert code == 0
    assert doc["results"]["samples"]["U"][0] == pytest.approx(1.0, abs=1e-8)
    assert doc["results"]["samples"]["U"][1] == pytest.approx(8 / 9, abs=1e-8)
    lim = doc["results"]["log_derivative_limits"]
    assert lim["U"] == pytest.approx(lim["expected_U"], abs=0.02)
    assert call("bubble", "show")[0] == 1


def test_verify_byte_identical(files):
    a = call("verify", "--bubble", str(files / "b4.json"))
    b = call("verify", "--bubble", str(files / "b4.json"))
    assert a[0] == 0 and a[1] == b[1]
    doc = json.loads(a[1])
    assert doc["results"]["passed"]
    names = {c["name"] for c in doc["results"]["checks"]}
    assert {"identity_residual", "symmetric_bubble_oracle", "neumann_residual", "c3_crosscheck"} <= names


def test_verify_accuracy_failure(files):
    code, doc, _ = call_json("verify", "--bubble", str(files / "bad.json"))
    assert code == 3
    assert "ode_residual" in doc["diagnostics"]["failed"]
    assert not doc["results"]["passed"]


def test_predict_refusal_and_success(files):
    code, doc, _ = call_json("predict", "--surface", str(files / "ell.json"), "--bubble", str(files / "b4.json"))
    assert code == 4 and doc["diagnostics"]["error"] == "Refusal"
    code, doc, _ = call_json("predict", "--surface", str(files / "hole.json"), "--bubble", str(files / "b4.json"),
                             "--eps", "1e-2,1e-3")
    assert code == 0
    res = doc["results"]
    assert res["H0"] == pytest.approx(-1.5, abs=1e-8)
    assert abs(abs(res["xi0"]["x"][0]) - 1.5) < 1e-6


def test_landscape_csv(files):
    code, out, _ = call("landscape", "--surface", str(files / "hole.json"), "--bubble", str(files / "b4.json"),
                        "--d-range", "0.01:1:5", "--chart", "1.5,0,0,0:0.05:3")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["d", "t1", "t2", "t3", "H", "theta"]
    assert len(rows) == 1 + 27 * 5
    assert all(len(r) == 6 for r in rows)
    assert call("landscape", "--surface", str(files / "hole.json"), "--bubble", str(files / "b4.json"),
                "--d-range", "1:2", "--chart", "1.5,0,0,0")[0] == 1


def test_geometry_commands(files):
    code, doc, _ = call_json("geometry", "curvature", "--surface", str(files / "hole.json"), "--point", "1.5,0,0,0")
    assert code == 0 and doc["results"]["H"] == pytest.approx(-1.5, abs=1e-8)
    assert call("geometry", "curvature", "--surface", str(files / "hole.json"), "--point", "1,0")[0] in (1, 2)


def test_config_file_and_env(tmp_path, monkeypatch):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# settings\nquad_rel_tol = 1e-10\ncache_dir = %s\n" % (tmp_path / "from_file"))
    assert read_config(cfg_file) == {"quad_rel_tol": "1e-10", "cache_dir": str(tmp_path / "from_file")}
    monkeypatch.delenv("CRITSYS_CACHE_DIR")
    cfg = load_config(cfg_file)
    assert cfg.quad_rel_tol == 1e-10 and cfg.cache_dir == tmp_path / "from_file"
    monkeypatch.setenv("CRITSYS_CACHE_DIR", str(tmp_path / "from_env"))
    assert load_config(cfg_file).cache_dir == tmp_path / "from_env"
    assert load_config(cfg_file, {"cache_dir": str(tmp_path / "flag")}).cache_dir == tmp_path / "flag"
    monkeypatch.setenv("CRITSYS_CONFIG", str(cfg_file))
    assert load_config().quad_rel_tol == 1e-10
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    with pytest.raises(DomainError):
        read_config(bad)
    bad.write_text("ode_tol = 1e-2\n")
    with pytest.raises(DomainError):
        load_config(bad)
    assert RunConfig().validate().output_format == "json"


def test_unwritable_cache_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, doc, _ = call_json("--cache-dir", str(blocker / "sub"), "bubble", "solve", "--N", "6", "--p", "2")
    assert code == 2


def test_timing_flag():
    code, doc, _ = call_json("--timing", "hyperbola", "--N", "5", "--p", "2.75")
    assert code == 0 and doc["diagnostics"]["elapsed_seconds"] >= 0
