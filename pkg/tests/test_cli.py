from __future__ import annotations

import csv
import io
import json
import math
import shutil
import subprocess

import pytest

from drumsum.cli import RunConfig, parse_density, parse_range, parse_rect, run
from drumsum.closedforms import annulus_z2_dp_series, sector_exact_value
from drumsum.green2d import Rect


def invoke(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_parsers():
    assert parse_rect("1x2") == Rect(1.0, 2.0)
    assert parse_rect("1x1x2") == (1.0, 1.0, 2.0)
    assert parse_range("0.1:0.3:0.1") == pytest.approx([0.1, 0.2, 0.3])
    assert parse_range("1,2,5") == [1.0, 2.0, 5.0]
    logs = parse_range("1e-4:1e-1:log:4")
    assert logs == pytest.approx([1e-4, 1e-3, 1e-2, 1e-1])
    assert parse_density("const:2").constant == 2.0
    with pytest.raises(ValueError):
        parse_rect("1by2")
    with pytest.raises(ValueError):
        parse_density("wobbly:1")


def test_config_digest_is_stable():
    a = RunConfig("zeta", {"p": [2], "rect": "1x1"})
    b = RunConfig("zeta", {"rect": "1x1", "p": [2]})
    assert a.digest() == b.digest()
    assert a.digest() != RunConfig("zeta", {"p": [3], "rect": "1x1"}).digest()


def test_annulus_series_csv(capsys):
    code, out, _ = invoke(capsys, "annulus", "--form", "series", "--rmin", "0.5")
    assert code == 0
    assert out.startswith("# drumsum annulus")
    assert "# config_hash: " in out
    (row,) = read_csv(out)
    assert float(row["value"]) == annulus_z2_dp_series(0.5)   # 17 digits round-trip
    assert float(row["abs_error"]) >= 0


def test_sector_constants_json(capsys):
    code, out, _ = invoke(capsys, "sector-constants", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert len(doc["rows"]) == 12
    for row in doc["rows"]:
        assert row["exact"] == sector_exact_value(row["phi_over_pi"], row["p"])
        assert row["rel_deviation"] < 1e-12


def test_zeta_box_and_rectangle(capsys):
    code, out, _ = invoke(capsys, "zeta", "--bc", "DD", "--rect", "1x1", "--p", "2,3", "--format", "json")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert [r["p"] for r in rows] == [2, 3]
    assert rows[0]["value"] == pytest.approx(0.00435667525183772901197, rel=1e-10)
    code, out, _ = invoke(capsys, "zeta", "--bc", "DD", "--rect", "1x1x1", "--p", "2", "--format", "json")
    assert json.loads(out)["rows"][0]["value"] == pytest.approx(0.00634671157287856366401, rel=1e-10)


def test_kernel_and_green(capsys):
    code, out, _ = invoke(capsys, "kernel", "--family", "D", "--L", "1", "--kappa2", "1",
                          "--y", "0", "--yp", "0", "--format", "json")
    assert code == 0
    assert json.loads(out)["rows"][0]["value"] == pytest.approx(0.231058578630004879, rel=1e-13)
    code, out, _ = invoke(capsys, "green", "--bc", "NP", "--rect", "1x2", "--r", "0.1,0.2",
                          "--rp", "-0.2,0.4", "--format", "json")
    row = json.loads(out)["rows"][0]
    assert code == 0 and row["abs_error"] > 0 and math.isfinite(row["value"])


def test_compare_annulus_dp(capsys):
    code, out, _ = invoke(capsys, "compare", "--case", "annulus-dp", "--rmin", "0.5",
                          "--emax", "5000", "--format", "json")
    assert code == 0
    rows = json.loads(out)["rows"]
    methods = {r["method"]: r for r in rows}
    assert set(methods) == {"engine", "series", "polylog", "bessel-oracle"}
    assert rows[0]["max_pairwise_deviation"] <= methods["bessel-oracle"]["abs_error"]


def test_compare_neumann_reports_both_projections(capsys):
    code, out, _ = invoke(capsys, "compare", "--case", "annulus-np", "--rmin", "0.5",
                          "--emax", "5000", "--format", "json")
    methods = {r["method"]: r for r in json.loads(out)["rows"]}
    assert "engine-unweighted-projection" in methods
    oracle_row = methods["bessel-oracle"]
    assert abs(methods["engine"]["value"] - oracle_row["value"]) <= oracle_row["abs_error"]


def test_oracle_command_writes_spectrum(capsys, tmp_path):
    path = tmp_path / "spec.csv"
    code, out, _ = invoke(capsys, "oracle", "--domain", "sector", "--phi-over-pi", "0.5",
                          "--emax", "2000", "--spectrum-csv", str(path))
    assert code == 0
    (row,) = read_csv(out)
    assert row["weyl_ok"] == "true"
    assert path.read_text().count("\n") > 50


def test_sweep_with_negative_range_and_workers(capsys):
    code, out, _ = invoke(capsys, "sweep", "inhom", "--rmin", "0.5", "--b", "-6:2:2",
                          "--workers", "2", "--format", "json")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert [r["b"] for r in rows] == [-6.0, -4.0, -2.0, 0.0, 2.0]
    for r in rows:
        assert abs(r["asymmetry"]) < 1e-10


def test_sweep_is_deterministic(capsys):
    argv = ["sweep", "annulus-dp", "--rmin", "0.2:0.6:0.2"]
    _, first, _ = invoke(capsys, *argv)
    _, second, _ = invoke(capsys, *argv)
    assert first == second


def test_outdir_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("DRUMSUM_OUTDIR", str(tmp_path / "results"))
    code, out, _ = invoke(capsys, "sector", "--phi-over-pi", "0.25", "--format", "json")
    assert code == 0 and out == ""
    doc = json.loads((tmp_path / "results" / "sector.json").read_text())
    assert [r["p"] for r in doc["rows"]] == [2, 3, 4]


@pytest.mark.parametrize("argv,code,kind", [
    (["annulus", "--form", "series", "--rmin", "1.5"], 2, "DomainError"),
    (["annulus", "--form", "small-hole", "--rmin", "0.01"], 2, "ConfigError"),
    (["zeta", "--bc", "DD", "--rect", "1x1", "--p", "1"], 2, "OrderError"),
    (["zeta", "--bc", "NN", "--rect", "1x1x1", "--p", "2"], 2, "ConfigError"),
    (["green", "--bc", "DD", "--rect", "1x1", "--r", "0.2,0.1", "--rp", "0.2,0.10001"], 1,
     "NonConvergenceError"),
])
def test_error_exit_codes(capsys, argv, code, kind):
    got, out, err = invoke(capsys, *argv)
    assert got == code
    assert out == ""
    if kind:
        assert json.loads(err.strip().splitlines()[-1])["error"] == kind


def test_unknown_option_is_config_error(capsys):
    got, _, err = invoke(capsys, "sector-constants", "--bogus")
    assert got == 2
    assert '"ConfigError"' in err


@pytest.mark.skipif(shutil.which("drumsum") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["drumsum", "sector", "--phi-over-pi", "0.5", "--p", "2"],
                         capture_output=True, text=True, check=True)
    (row,) = read_csv(res.stdout)
    assert float(row["value"]) == pytest.approx(math.pi ** 2 / 96 - 3 / 32, rel=1e-13)


def test_compare_sector_errors_are_consistent(capsys):
    code, out, _ = invoke(capsys, "compare", "--case", "sector", "--phi-over-pi", "0.25",
                          "--p", "3", "--emax", "1e4", "--format", "json")
    assert code == 0
    rows = json.loads(out)["rows"]
    for a in rows:
        assert a["abs_error"] < 1e-5 * a["value"]
        for b in rows:
            assert abs(a["value"] - b["value"]) <= a["abs_error"] + b["abs_error"]
