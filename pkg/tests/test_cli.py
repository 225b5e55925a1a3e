import json
import subprocess
import sys

import jsonschema
import pytest

from agspectrum import cli

LAME = """
mode = "{mode}"
[lame]
omega1 = 1.0
omega3 = [0.0, 1.0]
[output]
formats = ["json", "csv", "svg"]
"""


def _cfg(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _validate_dir(d):
    for f in sorted(d.glob("*.json")):
        jsonschema.validate(json.loads(f.read_text()), cli.load_schema(f.name))


def test_hierarchy_text(tmp_path):
    out = tmp_path / "h"
    assert cli.main(["hierarchy", "--n", "2", "--out", str(out)]) == 0
    lines = (out / "hierarchy.txt").read_text().splitlines()
    assert lines[0] == "f0 = 1"
    assert lines[1] == "f1 = 1/2*V + c1"
    assert lines[2] == "f2 = -1/8*V_xx + 3/8*V^2 + c2 + 1/2*c1*V"
    assert lines[3].startswith("f3 = 1/32*V^(4)")
    assert lines[4] == ("sKdV2 = -1/16*V^(5) + 5/4*V_x*V_xx + 5/8*V*V_xxx - 15/8*V^2*V_x"
                        " - c2*V_x + 1/4*c1*V_xxx - 3/2*c1*V*V_x")
    _validate_dir(out)


def test_lame_pipeline_two_real_bands(tmp_path):
    out = tmp_path / "l"
    assert cli.main(["lame", "--config", _cfg(tmp_path, LAME.format(mode="lame")), "--out", str(out)]) == 0
    res = json.loads((out / "spectrum.json").read_text())
    assert len(res["arcs"]) == 2
    for a in res["arcs"]:
        assert max(abs(v[1]) for v in a["vertices"]) < 1e-9
    assert sorted(a["arc_kind"] for a in res["arcs"]) == ["finite", "semi-infinite"]
    svg = (out / "spectrum.svg").read_text()
    assert svg.count("<polyline") == 2
    _validate_dir(out)


def test_empty_branch_list_is_config_error(tmp_path):
    cfg = _cfg(tmp_path, "[curve]\nbranch_points = []\n")
    assert cli.main(["curve", "--config", cfg, "--out", str(tmp_path / "x")]) == 2


@pytest.mark.parametrize("text", [
    "[curve]\nbranch_points = [0.0, 1.0]\n",
    "[curve]\nbranch_points = [0.0, 1.0, 2.0]\n[tolerances]\nquad = -1.0\n",
    "[curve]\nbranch_points = [0.0, 1.0, 2.0]\n[floquet]\ngrid = [1, 5]\n",
    "[curve]\nbranch_points = [0.0, 1.0, 2.0]\n[extra]\nx = 1\n",
    "mode = \"curve\"\n[curve]\nbranch_points = [0.0, 1.0, 2.0]\n",
    "this is = not toml [",
])
def test_config_errors(tmp_path, text):
    assert cli.main(["spectrum", "--config", _cfg(tmp_path, text), "--out", str(tmp_path / "x")]) == 2


def test_missing_config_file(tmp_path):
    assert cli.main(["spectrum", "--config", str(tmp_path / "nope.toml")]) == 2


def test_bad_grid_flag(tmp_path):
    cfg = _cfg(tmp_path, LAME.format(mode="floquet"))
    assert cli.main(["floquet", "--config", cfg, "--grid", "12by4"]) == 2


def test_computation_failure_exit_1(tmp_path):
    out = tmp_path / "e"
    cfg = _cfg(tmp_path, "[curve]\nbranch_points = [-1.0, 0.0, 1.0]\n")
    assert cli.main(["spectrum", "--config", cfg, "--out", str(out), "--tol-quad", "1e-14"]) == 1
    err = json.loads((out / "error.json").read_text())
    assert err["error"] == "QuadratureError" and err["mode"] == "spectrum"
    _validate_dir(out)


def test_output_dir_precedence(tmp_path, monkeypatch):
    cfg = _cfg(tmp_path, "[curve]\nbranch_points = [-1.0, 0.0, 1.0]\n[output]\ndir = \"from_config\"\n")
    monkeypatch.setenv(cli.ENV_OUT, str(tmp_path / "from_env"))
    c = cli.load_config(cfg, "curve")
    assert c.out_dir == str(tmp_path / "from_env")
    c = cli.load_config(cfg, "curve", {"out_dir": str(tmp_path / "from_flag")})
    assert c.out_dir == str(tmp_path / "from_flag")
    monkeypatch.delenv(cli.ENV_OUT)
    assert cli.load_config(cfg, "curve").out_dir == "from_config"


def test_flags_override_config(tmp_path):
    cfg = _cfg(tmp_path, LAME.format(mode="floquet"))
    c = cli.load_config(cfg, "floquet", {"grid": "30x12", "tol_trace": 1e-6, "r_max": 20.0, "basis_bound": 2})
    assert c.grid == (30, 12) and c.tol_trace == 1e-6 and c.r_max == 20.0 and c.basis_bound == 2


def test_deterministic_outputs(tmp_path):
    cfg = _cfg(tmp_path, "[curve]\nbranch_points = [[-2.0, 0.3], [-0.7, -0.4], [0.2, 0.9], [1.1, -0.2], [2.3, 0.5]]\n"
                         "[output]\nformats = [\"json\", \"csv\", \"svg\"]\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["spectrum", "--config", cfg, "--out", str(a)]) == 0
    assert cli.main(["spectrum", "--config", cfg, "--out", str(b)]) == 0
    for name in ("spectrum.json", "spectrum.csv", "spectrum.svg", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    man = json.loads((a / "manifest.json").read_text())
    assert [x["name"] for x in man["artifacts"]] == ["spectrum.csv", "spectrum.json", "spectrum.svg"]
    _validate_dir(a)


def test_curve_and_floquet_artifacts(tmp_path):
    cfg = _cfg(tmp_path, LAME.format(mode="floquet"))
    assert cli.main(["curve", "--config", cfg.replace("floquet", "curve"), "--out", str(tmp_path / "c")]) in (0, 2)
    out = tmp_path / "f"
    assert cli.main(["floquet", "--config", cfg, "--out", str(out), "--grid", "41x10"]) == 0
    d = json.loads((out / "floquet.json").read_text())
    assert d["grid"] == [41, 10] and d["arcs"]
    assert (out / "floquet.csv").read_text().startswith("arc_id,re,im,residual")
    _validate_dir(out)


def test_curve_mode(tmp_path):
    cfg = _cfg(tmp_path, "[curve]\nbranch_points = [-1.0, 0.0, 1.0]\n")
    out = tmp_path / "c"
    assert cli.main(["curve", "--config", cfg, "--out", str(out)]) == 0
    d = json.loads((out / "curve.json").read_text())
    assert abs(d["normalization"]["lambda_tilde"][0][0] - 0.45694658104446362577) < 1e-12
    _validate_dir(out)


def test_verify_default_lame_passes(tmp_path):
    cfg = _cfg(tmp_path, LAME.format(mode="verify"))
    out = tmp_path / "v"
    assert cli.main(["verify", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads((out / "verify.json").read_text())
    assert rep["passed"], [e for e in rep["entries"] if not e["passed"]]
    names = {e["name"] for e in rep["entries"]}
    assert {"symkdv.identities.n1", "symkdv.identities.n2", "special.wp_ode", "curve.normalization",
            "spectrum.branch_angles", "floquet.det", "floquet.link_ii"} <= names
    _validate_dir(out)


def test_verify_duplicate_branch_point(tmp_path):
    cfg = _cfg(tmp_path, "[curve]\nbranch_points = [-1.0, 0.0, 0.0, 1.0, 2.0]\n")
    out = tmp_path / "v"
    assert cli.main(["verify", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads((out / "verify.json").read_text())
    entry = next(e for e in rep["entries"] if e["name"] == "curve.construction")
    assert not entry["passed"] and "duplicate" in entry["details"]["error"]
    assert rep["n_failed"] >= 1


def test_verify_tight_quadrature_reports_failures(tmp_path):
    cfg = _cfg(tmp_path, LAME.format(mode="verify"))
    out = tmp_path / "v"
    assert cli.main(["verify", "--config", cfg, "--out", str(out), "--tol-quad", "1e-14"]) == 0
    rep = json.loads((out / "verify.json").read_text())
    assert rep["n_failed"] > 0
    assert any("QuadratureError" in e["details"].get("error", "") for e in rep["entries"])


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "agspectrum.cli", "hierarchy", "--n", "1", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert (tmp_path / "manifest.json").exists()
