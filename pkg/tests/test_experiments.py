import csv
import io
import json
import math
import re
from fractions import Fraction
from pathlib import Path

import pytest

from whitehead import experiments as ex
from whitehead.moebius import INF, ONE, ZERO
from whitehead.tessellation import FareyImage

GOLDEN = Path(__file__).parent / "golden"


def run(argv, capsys):
    code = ex.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_lambda():
    assert ex.parse_lambda("9/8") == Fraction(9, 8)
    for bad in ("1", "1/2", "x", "1/0"):
        with pytest.raises(ex.ConfigError):
            ex.parse_lambda(bad)


@pytest.mark.parametrize("depth,arcs", [(0, 3), (1, 9), (3, 45)])
def test_render_arc_counts(tmp_path, depth, arcs):
    out = tmp_path / "f.svg"
    assert ex.render_svg(FareyImage(), depth, out) == arcs
    text = out.read_text()
    assert text.count("<path") == arcs and text.count("<circle") == 1
    assert text.count('class="distinguished"') == 1


def test_render_geodesics_are_orthogonal_arcs(tmp_path):
    out = tmp_path / "f.svg"
    ex.render_svg(FareyImage(), 3, out)
    for m in re.finditer(r'd="M (\S+) (\S+) A (\S+) \S+ 0 0 (\d) (\S+) (\S+)"', out.read_text()):
        x1, y1, r, sweep, x2, y2 = (float(g) for g in m.groups())
        assert math.isclose(x1 * x1 + y1 * y1, 1, abs_tol=1e-5)
        assert math.isclose(x2 * x2 + y2 * y2, 1, abs_tol=1e-5)
        # radius of an orthogonal circle through u, v is tan of half the angle between them
        half = math.acos(max(-1.0, min(1.0, x1 * x2 + y1 * y2))) / 2
        assert math.isclose(r, math.tan(half), rel_tol=1e-4, abs_tol=1e-5)


def test_render_moved_styles(tmp_path, capsys):
    out = tmp_path / "m.svg"
    code, _, err = run(["render", "--tessellation", "moved", "--lambda", "2", "--level", "2",
                        "--depth", "2", "--out", str(out)], capsys)
    assert code == 0 and "arcs=21" in err
    assert out.read_bytes() == (GOLDEN / "moved_2_2_depth2.svg").read_bytes()
    assert 'class="flipped"' in out.read_text()


def test_render_depth_limit():
    with pytest.raises(ex.ConfigError):
        ex.render_svg(FareyImage(), 13, io.StringIO())


def test_sweep_golden(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(ex.CACHE_ENV, str(tmp_path / "cache"))
    out = tmp_path / "s.csv"
    code, _, _ = run(["sweep", "--lambdas", "2", "--levels", "2", "--depth", "5",
                      "--quad-nodes", "128", "--out", str(out)], capsys)
    assert code == 0
    assert out.read_bytes() == (GOLDEN / "sweep_2_2.csv").read_bytes()
    rows = list(csv.DictReader(l for l in out.read_text().splitlines() if not l.startswith("#")))
    assert rows[0]["witness"] and rows[0]["conj_ok"] == "1" and rows[0]["error"] == ""
    # the coset table was cached and is reused
    assert (tmp_path / "cache" / "GA_2-1_N2.json").exists()


def test_sweep_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"lambdas": ["2"], "levels": [2], "depth": 4, "beltrami": False}))
    code, out, _ = run(["sweep", "--config", str(cfg), "--depth", "3"], capsys)
    assert code == 0
    assert out.startswith("# seed=0 grid_depth=3 ")
    assert out.splitlines()[-1].split(",")[8] == ""


def test_sweep_error_rows_are_complete():
    cfg = ex.SweepConfig(lambdas=[Fraction(2)], levels=[2], depth=3, beltrami=False)
    row = ex.sweep_row(Fraction(2), 2, ex.SweepConfig(depth=0))
    assert row["error"] and set(row) == set(ex.SWEEP_COLUMNS)
    assert ex.sweep_exit_code([row]) == ex.EXIT_INVARIANT
    assert ex.sweep_exit_code(ex.run_sweep(cfg)) == ex.EXIT_OK


@pytest.mark.parametrize("argv", [
    ["sweep", "--lambdas", "1/2"],
    ["sweep", "--levels", "1"],
    ["sweep", "--levels", "x"],
    ["sweep", "--config", "/nonexistent.json"],
    ["render", "--depth", "40"],
    ["profile", "--threshold", "0"],
    ["orbit", "--budgets", "a"],
    ["frobnicate"],
])
def test_config_errors(argv, capsys):
    code, _, _ = run(argv, capsys)
    assert code == ex.EXIT_CONFIG


def test_orbit_empty_golden(capsys):
    code, out, _ = run(["orbit", "--stages", "0"], capsys)
    assert code == 0
    assert out == (GOLDEN / "orbit_empty.json").read_text()


def test_orbit_tampered_budgets(capsys):
    code, out, _ = run(["orbit", "--stages", "3", "--budgets", "1/4,1/8,1/2"], capsys)
    assert code == ex.EXIT_INVARIANT
    assert "does not decrease" in json.loads(out)["error"]


def test_orbit_shortfall(capsys):
    code, out, _ = run(["orbit", "--stages", "1", "--lambdas", "2", "--levels", "2",
                        "--budgets", "1/100", "--quad-nodes", "128"], capsys)
    assert code == ex.EXIT_NUMERIC
    doc = json.loads(out)
    assert not doc["complete"] and doc["schedule"] == []


def test_tables_cache(tmp_path, capsys):
    d = str(tmp_path)
    assert run(["tables", "cache", "build", "--dir", d, "--lambda", "3/2", "--level", "2"], capsys)[:2] \
        == (0, "index=432\n")
    code, out, _ = run(["tables", "cache", "list", "--dir", d], capsys)
    assert out == "GA_3-2_N2.json\tindex=432\n"
    assert ex.cached_level_subgroup(Fraction(3, 2), 2, tmp_path).index == 432
    run(["tables", "cache", "clear", "--dir", d], capsys)
    assert run(["tables", "cache", "list", "--dir", d], capsys)[1] == ""
    assert run(["tables", "cache", "build", "--dir", d], capsys)[0] == ex.EXIT_CONFIG


def test_tables_cache_needs_a_directory(capsys, monkeypatch):
    monkeypatch.delenv(ex.CACHE_ENV, raising=False)
    assert run(["tables", "cache", "list"], capsys)[0] == ex.EXIT_CONFIG


def test_build_tessellation():
    assert isinstance(ex.build_tessellation("farey", None, None), FareyImage)
    t = ex.build_tessellation("single", Fraction(2), None)
    assert t.G is None
    with pytest.raises(ex.ConfigError):
        ex.build_tessellation("other", None, None)
