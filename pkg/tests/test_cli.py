import json
import subprocess
import sys

import pytest

from rotodeg.boundary import Ball
from rotodeg.cli import UsageError, check, main, parse_region
from rotodeg.svg import render_snapshot
from rotodeg.vectorfield import example51, rigid_rotation


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_parse_region():
    b = parse_region("ball:1,2,3")
    assert b.center == (1.0, 2.0) and b.radius == 3.0
    a = parse_region("annulus:1,4")
    assert a.inner_ball.radius == 1.0 and a.outer_ball.radius == 4.0
    for bad in ("ball:1,2", "ball:0,0,-1", "annulus:4,1", "disc:0,0,1", "ball:a,b,c", "ball"):
        with pytest.raises(UsageError):
            parse_region(bad)


def test_rigid_rotation_two_balls(tmp_path, capsys):
    code, out = _run(capsys, "run", "rigid_rotation", "--analyses", "decomposition",
                     "--regions", "ball:0,0,2", "ball:5,3,1", "--out", str(tmp_path))
    assert code == 0 and json.loads(out)["exit_status"] == 0
    res = json.loads((tmp_path / "decomposition.json").read_text())["results"]
    assert [(r["lhs"], r["rhs"]) for r in res] == [(1, 1), (0, 0)]


def test_example51_pipeline(tmp_path, capsys):
    code, _ = _run(capsys, "run", "example51", "--analyses", "decomposition,twist,locate",
                   "--out", str(tmp_path), "--formats", "json,csv,svg", "--trajectory", "1,0.5")
    assert code == 0
    orbits = json.loads((tmp_path / "orbits.json").read_text())
    assert {o["rotation"] for o in orbits} == {0, 1}
    assert all(o["residual"] < 1e-8 for o in orbits)
    for name in ("decomposition.json", "twist.json", "locate.json", "report.json", "trajectory.csv",
                 "snapshot_f_T.svg", "snapshot_F_T_chart.svg"):
        assert (tmp_path / name).exists(), name
    assert list(tmp_path.glob("cells_*.csv"))
    assert (tmp_path / "trajectory.csv").read_text().splitlines()[0] == "t,x,y,theta,r"
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["schema"] == 1 and report["exit_status"] == 0
    assert check(tmp_path) == 0


def test_malformed_region_exits_2(tmp_path, capsys):
    code, out = _run(capsys, "run", "rigid_rotation", "--regions", "ball:0,0", "--out", str(tmp_path))
    assert code == 2
    err = json.loads(out)
    assert err["schema"] == 1 and err["error"]["type"] == "UsageError"


@pytest.mark.parametrize("argv", [
    ["run", "no_such_scenario"],
    ["run", "rigid_rotation", "--analyses", "bogus"],
    ["run", "rigid_rotation", "--param", "omega"],
    ["run", "rigid_rotation", "--trajectory", "1"],
    ["frobnicate"],
])
def test_bad_input_exits_2(tmp_path, capsys, argv):
    code, out = _run(capsys, *argv, *(["--out", str(tmp_path)] if argv[0] == "run" else []))
    assert code == 2
    assert "error" in json.loads(out.strip().splitlines()[-1])


def test_failed_verification_exits_1(tmp_path, capsys):
    # the boundary passes through the fixed point at the origin: degree undefined
    code, out = _run(capsys, "run", "rigid_rotation", "--analyses", "degree", "--regions", "ball:1,0,1",
                     "--out", str(tmp_path), "--formats", "json,svg")
    assert code == 1 and json.loads(out)["failures"] == ["/degree[0]/error"]
    assert check(tmp_path) == 1


def test_empty_regions_gives_empty_svg(tmp_path, capsys):
    code, _ = _run(capsys, "run", "rigid_rotation", "--analyses", "degree", "--regions",
                   "--out", str(tmp_path), "--formats", "svg")
    assert code == 0
    svg = (tmp_path / "snapshot_f_T.svg").read_text()
    assert "<line" not in svg and svg.rstrip().endswith("</svg>")


def test_params_and_json_scenario(tmp_path, capsys):
    code, _ = _run(capsys, "run", '{"name": "rigid_rotation", "params": {"T": 2.0}}', "--param", "omega=1.0",
                   "--analyses", "degree", "--regions", "ball:0,0,1", "--out", str(tmp_path))
    assert code == 0
    scen = json.loads((tmp_path / "degree.json").read_text())["scenario"]
    assert scen["params"]["T"] == 2.0 and scen["params"]["omega"] == 1.0


def test_maslov_and_asymptotic(tmp_path, capsys):
    code, _ = _run(capsys, "run", "example51", "--analyses", "maslov,asymptotic_radius", "--out", str(tmp_path))
    assert code == 0
    radii = json.loads((tmp_path / "asymptotic_radius.json").read_text())["results"]
    assert [r["radius"] for r in radii] == [1.0, 4.0]


def test_check_without_reports(tmp_path, capsys):
    code, out = _run(capsys, "check", str(tmp_path))
    assert code == 2


def test_scenarios_listing(capsys):
    code, out = _run(capsys, "scenarios")
    assert code == 0 and "example51" in out.split()


def test_svg_byte_identical(tmp_path):
    regions = [Ball((0.0, 0.0), 1.0), Ball((2.0, 0.0), 0.5)]
    a = render_snapshot(example51(), regions, "F_T_chart", tmp_path / "a.svg")
    b = render_snapshot(example51(), regions, "F_T_chart", tmp_path / "b.svg")
    assert a == b and (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    assert a.count('stroke-width="1.5"') == 24


def test_svg_rigid_rotation_arrows():
    # on the origin-centred circle f_T is a chord of length 2 r sin(pi/8) for the eighth-turn rotation
    svg = render_snapshot(rigid_rotation(), [Ball((0.0, 0.0), 2.0)], "f_T")
    assert svg.count("<line") == 2 + 12


def test_svg_rejects_unknown_kind():
    with pytest.raises(ValueError):
        render_snapshot(rigid_rotation(), [], "nope")


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "rotodeg.cli", "scenarios"], capture_output=True, text=True)
    assert out.returncode == 0 and "rigid_rotation" in out.stdout
