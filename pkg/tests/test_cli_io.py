import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isothermic import cli
from isothermic import gallery as G
from isothermic import surface as S
from isothermic.config import JobConfig, format_config, parse_config, read_config, write_config
from isothermic.errors import ParseError, PoleHit
from isothermic.meshio import (
    export_obj,
    inverse_stereographic,
    net_from_mesh,
    obj_text,
    parse_obj,
    read_obj,
    stereographic,
)

FIG3 = """\
# unit cylinder bubbleton
family = bubbleton
name = fig3
M = 40
N = 5
k = 2
rho = 1
c2 = -10
n_min = -15
n_max = 15
"""

TORUS = """\
family = torus
name = torus
M = 40
N = 40
k1 = 4
rho1 = 3
k2 = 2
rho2 = 3
c_real = 0.45
"""


def write(tmp_path, text, name="job.cfg"):
    path = tmp_path / name
    path.write_text(text + f"out_dir = {tmp_path}\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# config


def test_parse_config_values():
    cfg = parse_config(FIG3)
    assert cfg.family == "bubbleton" and cfg.M == 40 and cfg.c2 == complex(-10)
    assert cfg.tol == 1e-9 and cfg.root_index == -1


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError) as info:
        parse_config("family = torus\nM = forty\n")
    assert info.value.line == 2
    with pytest.raises(ParseError) as info:
        parse_config("family = bubbleton\nM = 4\nM = 5\n")
    assert info.value.line == 3
    with pytest.raises(ParseError) as info:
        parse_config("family = bubbleton\nbogus = 1\n")
    assert info.value.line == 2
    with pytest.raises(ParseError):
        parse_config("M = 4\n")
    with pytest.raises(ParseError, match="needs"):
        parse_config("family = torus\nM = 4\n")


def test_config_round_trip_file(tmp_path):
    cfg = parse_config(TORUS)
    write_config(cfg, tmp_path / "t.cfg")
    assert read_config(tmp_path / "t.cfg") == cfg


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=100)
@given(
    st.integers(3, 500),
    st.integers(-50, 50).filter(bool),
    st.integers(1, 9),
    st.integers(1, 9),
    st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False),
    st.floats(1e-15, 1e-3),
    st.booleans(),
    st.sampled_from([None, "none", "stereographic"]),
)
def test_config_round_trip(M, N, k, rho, c2, tol, ply, projection):
    cfg = JobConfig("bubbleton", name="x", M=M, N=N, k=k, rho=rho, c2=c2, n_min=-2, n_max=3, tol=tol, ply=ply, projection=projection)
    assert parse_config(format_config(cfg)) == cfg


@settings(max_examples=50)
@given(st.lists(finite, min_size=4, max_size=4), st.floats(-2, 2, allow_nan=False))
def test_config_round_trip_custom(point, nu):
    cfg = JobConfig(
        "custom-darboux", M=8, p_profile=(1.0, 1.5), q_profile=(0.0, 0.25), nu=nu, init_point=tuple(point)
    )
    assert parse_config(format_config(cfg)) == cfg


# ---------------------------------------------------------------------------
# meshes


def small_net(rows=1, M=4):
    return G.circular_cylinder(M, 3, 0, rows)


def test_smallest_mesh():
    pts = np.zeros((2, 2, 4))
    pts[1, 0, 1] = pts[1, 1, 1] = 1.0
    pts[0, 1, 2] = pts[1, 1, 2] = 1.0
    net = S.IsothermicNet.from_arrays(pts, [1.0], [-1.0])
    text = obj_text(net)
    assert sum(line.startswith("v ") for line in text.splitlines()) == 4
    assert [line for line in text.splitlines() if line.startswith("f ")] == ["f 1 2 4 3"]


def test_cylinder_mesh_closes_the_seam():
    text = obj_text(small_net())
    lines = text.splitlines()
    assert sum(line.startswith("v ") for line in lines) == 8
    faces = [line for line in lines if line.startswith("f ")]
    assert faces == ["f 1 2 6 5", "f 2 3 7 6", "f 3 4 8 7", "f 4 1 5 8"]


def test_obj_is_deterministic(tmp_path):
    cfg = write(tmp_path, FIG3)
    a = cli.run_generate(read_config(cfg))
    first = (tmp_path / "fig3_hat.obj").read_bytes()
    b = cli.run_generate(read_config(cfg))
    assert a.passed and b.passed
    assert (tmp_path / "fig3_hat.obj").read_bytes() == first


def test_obj_round_trip_rebuilds_the_net(tmp_path):
    net = G.circular_cylinder(12, 4, -3, 3)
    export_obj(net, tmp_path / "c.obj")
    back = net_from_mesh(read_obj(tmp_path / "c.obj"))
    assert back.origin == (0, -3)
    assert np.abs(back.points - net.points).max() < 1e-15
    ratio = back.domain.mu_m[0] / net.domain.mu_m[0]
    assert np.allclose(back.domain.mu_m, ratio * net.domain.mu_m)
    assert np.allclose(back.domain.mu_n, ratio * net.domain.mu_n)


def test_r3_export_refuses_s3_nets():
    net = G.homogeneous_torus(G.TorusSpec(12, 12, 2, 3, 3, 2))
    with pytest.raises(ValueError):
        obj_text(net)


def test_stereographic_round_trip():
    spec = G.TorusSpec(40, 40, 4, 3, 2, 3)
    r2 = G.s3_initial_solver(spec, 0.45)
    hat = G.torus_net(spec, *G.s3_constants(0.45, r2))
    back = inverse_stereographic(stereographic(hat.points))
    assert np.abs(back - hat.points).max() < 1e-9
    assert np.abs(np.einsum("...i,...i", back, back) - 1).max() < 1e-9


def test_pole_hit():
    pts = np.array([[1.0, 0, 0, 0], [-1.0, 0, 0, 0]])
    with pytest.raises(PoleHit) as info:
        stereographic(pts)
    assert info.value.vertex == (1,)


def test_empty_mesh_is_a_parse_error(tmp_path):
    (tmp_path / "empty.obj").write_text("", encoding="utf-8")
    with pytest.raises(ParseError):
        read_obj(tmp_path / "empty.obj")
    with pytest.raises(ParseError):
        parse_obj("v 0 0 0\nv 1 0 0\n")
    with pytest.raises(ParseError) as info:
        parse_obj("# grid 1 1\nv 0 0\n")
    assert info.value.line == 2
    assert cli.main(["verify", "--mesh", str(tmp_path / "empty.obj")]) == 2


# ---------------------------------------------------------------------------
# command line


def test_generate_fig3(tmp_path, capsys):
    cfg = write(tmp_path, FIG3)
    assert cli.main(["generate", "--config", str(cfg)]) == 0
    report = json.loads((tmp_path / "fig3_report.json").read_text())
    assert report["passed"]
    names = {c["name"] for c in report["checks"]}
    assert "closed form vs sweep" in names
    assert (tmp_path / "fig3_base.obj").exists() and (tmp_path / "fig3_hat.obj").exists()
    # the hat mesh closes the seam: one period of vertices per row
    text = (tmp_path / "fig3_hat.obj").read_text()
    assert "# wrap 1 0" in text
    assert sum(line.startswith("v ") for line in text.splitlines()) == 40 * 31


def test_report_residuals_are_library_residuals(tmp_path):
    cfg = read_config(write(tmp_path, FIG3))
    res = cli.run_job(cfg)
    library = S.verify_isothermic(res.base)
    rows, ok = cli.run_verify(config=cfg)
    assert ok
    row = next(r for r in rows if r["name"] == library.name)
    assert row["residual"] == library.residual


def test_generate_torus_echoes_root(tmp_path):
    cfg = write(tmp_path, TORUS)
    assert cli.main(["generate", "--config", str(cfg)]) == 0
    report = json.loads((tmp_path / "torus_report.json").read_text())
    assert abs(report["values"]["r2"] - 0.385119) < 1e-5
    assert report["passed"]
    mesh = read_obj(tmp_path / "torus_hat.obj")
    assert mesh.projection == "stereographic"
    pts = mesh.grid()
    assert np.abs(np.einsum("...i,...i", pts, pts) - 1).max() < 1e-9
    assert cli.main(["verify", "--mesh", str(tmp_path / "torus_hat.obj")]) == 0


def test_cmc_bubbleton_job(tmp_path):
    text = "family = cmc-bubbleton\nname = cmc\nM = 40\nN = 5\nk = 2\nrho = 1\nn_min = -4\nn_max = 4\n"
    for branch in (1, -1):
        res = cli.run_job(parse_config(text + f"branch = {branch}\n"))
        assert res.passed, [c for c in res.checks if not c.passed]
        assert any(c.name == "cmc distance" for c in res.checks)


def test_cmc_window_violation_exits_nonzero(tmp_path, capsys):
    text = "family = cmc-bubbleton\nname = bad\nM = 40\nN = 5\nk = 1\nrho = 1\nn_min = 0\nn_max = 2\n"
    cfg = write(tmp_path, text)
    assert cli.main(["generate", "--config", str(cfg)]) == 1
    assert "cmc window violated" in capsys.readouterr().err
    report = json.loads((tmp_path / "bad_report.json").read_text())
    assert report["error"]["type"] == "CmcWindowViolated"


def test_verify_mesh_flags_perturbed_vertex(tmp_path, capsys):
    cfg = write(tmp_path, FIG3)
    cli.main(["generate", "--config", str(cfg)])
    path = tmp_path / "fig3_hat.obj"
    assert cli.main(["verify", "--mesh", str(path)]) == 0
    capsys.readouterr()
    lines = path.read_text().splitlines()
    vlines = [i for i, line in enumerate(lines) if line.startswith("v ")]
    # vertex m = 10, n = 5 rows above the origin
    target = vlines[10 + 40 * 5]
    x, y, z = (float(v) for v in lines[target].split()[1:])
    lines[target] = f"v {x + 1e-3} {y} {z}"
    path.write_text("\n".join(lines) + "\n")
    assert cli.main(["verify", "--mesh", str(path)]) == 1
    rows = json.loads(capsys.readouterr().out)
    iso = next(r for r in rows if r["name"] == "isothermic")
    assert not iso["passed"]
    m, n = iso["worst"]
    assert m in (9, 10) and n - (-15) in (4, 5)


def test_verify_config_and_usage_errors(tmp_path, capsys):
    cfg = write(tmp_path, FIG3)
    assert cli.main(["verify", "--config", str(cfg)]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows and all(r["passed"] for r in rows)
    assert cli.main(["verify"]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("family = nope\n")
    assert cli.main(["verify", "--config", str(bad)]) == 2


def test_resonance_command(capsys):
    assert cli.main(["resonance", "--M", "3", "--rho", "2", "--k", "5"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert abs(out["nu"] - 2 / 9) < 1e-12
    assert math.isclose(out["continuum_limit"], (4 - 25) / 16)


def test_report_command(tmp_path, capsys):
    assert cli.main(["report", "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert [r["M"] for r in out["circle"]["rows"]] == [40, 80, 160, 320]
    cfg = write(tmp_path, FIG3)
    assert cli.main(["report", "--config", str(cfg), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["passed"]


def test_custom_darboux_and_revolution_jobs():
    custom = JobConfig(
        "custom-darboux",
        M=10,
        p_profile=(1.0, 1.2, 1.1, 0.9),
        q_profile=(0.0, 0.3, 0.5, 0.8),
        nu=-0.6,
        init_point=(0.0, 0.2, -0.5, 0.4),
    )
    res = cli.run_job(custom)
    assert res.passed, [c for c in res.checks if not c.passed]
    rev = JobConfig(
        "revolution",
        M=10,
        k=2,
        rho=1,
        p_profile=(1.0, 1.2, 1.1, 0.9),
        q_profile=(0.0, 0.3, 0.5, 0.8),
        cplus=(0.0, 0.0, 1.0, 0.0),
        cminus=(0.0, 0.0, 0.3, 0.1),
    )
    res = cli.run_job(rev)
    assert res.passed, [c for c in res.checks if not c.passed]
    assert any(c.name.startswith("periodic") for c in res.checks)
