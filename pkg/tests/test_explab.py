import csv
import json
import math

import pytest

from steinerlab import Generator, QuadratureSpec, power_conc, power_conv
from steinerlab.errors import InputError
from steinerlab.explab.catalog import catalog_ids, get_body, is_centered_ellipsoid
from steinerlab.explab.cli import main, table_to_csv
from steinerlab.explab.config import ExperimentConfig, config_from_dict, load_config_dict, parse_keyvalue
from steinerlab.explab.experiments import (
    FAIL, PASS, SKIP, _sequence_ok, isoperimetric_verdict, monotonicity_verdict, run,
)
from steinerlab.surface import SurfaceResult


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_keyvalue_parsing():
    d = parse_keyvalue("""
# comment
[section]
kind = monotonicity
bodies = ball, qball_4
dims = 2, 3
directions = 4
quadrature.grid_resolution = 64
boundary_margin = 0.02
generators = ["p=0.5", "p=-1"]
""")
    assert d == {"kind": "monotonicity", "bodies": ["ball", "qball_4"], "dims": [2, 3], "directions": 4,
                 "grid_resolution": 64, "boundary_margin": 0.02, "generators": ["p=0.5", "p=-1"]}
    cfg = config_from_dict(d)
    assert cfg.quadrature.grid_resolution == 64
    assert cfg.quadrature.boundary_margin == 0.02


def test_json_file_config(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"kind": "detlemma", "samples": 50, "quadrature": {"grid_resolution": 32}}))
    cfg = config_from_dict(load_config_dict(path))
    assert cfg.kind == "detlemma" and cfg.samples == 50 and cfg.quadrature.grid_resolution == 32


@pytest.mark.parametrize("d", [
    {"kind": "nope"},
    {"kind": "monotonicity", "bodies": ["dodecahedron"]},
    {"kind": "monotonicity", "colour": "red"},
    {"kind": "monotonicity", "dims": [5]},
    {"kind": "convergence", "n_steps": 0},
    {"kind": "monotonicity", "quadrature": {"grid_resolution": 8}},
    {"kind": "monotonicity", "quadrature": {"bogus": 1}},
    {},
])
def test_invalid_configs(d):
    with pytest.raises(InputError):
        config_from_dict(d)


def test_catalog():
    assert "qball_4" in catalog_ids(2)
    assert is_centered_ellipsoid(get_body("ellipse_2_05"))
    assert not is_centered_ellipsoid(get_body("ball_off"))
    assert not is_centered_ellipsoid(get_body("ellipse_sheared_off"))
    with pytest.raises(InputError):
        get_body("ball", 4)
    with pytest.raises(InputError):
        get_body("torus")


def test_monotonicity_verdicts():
    conc, conv = power_conc(0.5, 2), power_conv(-1, 2)
    a, b = SurfaceResult(1.0, 1e-3, 1), SurfaceResult(0.995, 1e-3, 1)
    assert monotonicity_verdict(conc, a, b, False)[2] == PASS
    assert monotonicity_verdict(conc, a, SurfaceResult(0.99, 1e-3, 1), False)[2] == FAIL
    assert monotonicity_verdict(conv, SurfaceResult(0.98, 1e-3, 1), a, False)[2] == FAIL
    assert monotonicity_verdict(conv, a, b, True)[4] == "yes"
    assert monotonicity_verdict(conv, SurfaceResult.divergent(), b, False)[2] == PASS
    assert monotonicity_verdict(conc, SurfaceResult.divergent(), b, False)[2] == SKIP
    assert monotonicity_verdict(conv, a, SurfaceResult(0.9, 1e-3, 1), True)[2] == FAIL


def test_isoperimetric_verdicts():
    g = power_conc(0.5, 2)
    at_ball = SurfaceResult(2 * math.pi, 1e-6, 1)
    assert isoperimetric_verdict(g, at_ball, math.pi, 2, True)[3] == PASS
    assert isoperimetric_verdict(g, SurfaceResult(6.0, 1e-6, 1), math.pi, 2, False)[3] == PASS
    assert isoperimetric_verdict(g, SurfaceResult(6.5, 1e-6, 1), math.pi, 2, False)[3] == FAIL
    assert isoperimetric_verdict(power_conv(-1, 2), SurfaceResult.divergent(), math.pi, 2, False)[3] == PASS


def test_sequence_check():
    up = [SurfaceResult(v, 1e-4, 1) for v in (1.0, 1.1, 1.2)]
    assert _sequence_ok(up, True)[0]
    assert not _sequence_ok(up, False)[0]
    assert _sequence_ok([SurfaceResult.divergent(), SurfaceResult(2.0, 0, 1)], False)[0]


def test_table_to_csv():
    text = table_to_csv([{"a": 1, "b": 0.1}, {"a": 2, "c": "x"}])
    assert text.splitlines() == ["a,b,c", "1,0.1,", "2,,x"]
    assert table_to_csv([]) == ""


def test_detlemma_cli(tmp_path, capsys):
    out = tmp_path / "d"
    assert main(["detlemma", "--seed", "3", "--out-dir", str(out)]) == 0
    rows = read_csv(out / "detlemma.csv")
    assert len(rows) == 12 and all(r["verdict"] == PASS for r in rows)
    man = json.loads((out / "manifest.json").read_text())
    assert man["experiment"] == "detlemma" and man["config"]["seed"] == 3
    assert man["counts"] == {PASS: 12, FAIL: 0, SKIP: 0}
    assert man["outputs"] == ["detlemma.csv"]
    assert "12 passed" in capsys.readouterr().out


def test_cli_usage_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["detlemma", "--config", str(bad)]) == 2
    assert main(["detlemma", "--config", str(tmp_path / "missing.cfg")]) == 2
    wrong = tmp_path / "w.json"
    wrong.write_text(json.dumps({"kind": "crosscheck"}))
    assert main(["detlemma", "--config", str(wrong)]) == 2
    assert main(["monotonicity", "--resolution", "4", "--out-dir", str(tmp_path)]) == 2
    assert "error:" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["unknown"])


def test_cli_reports_failure(tmp_path, monkeypatch):
    import steinerlab.explab.experiments as ex
    monkeypatch.setattr(ex, "FD_TOL", -1.0)
    cfg = tmp_path / "c.cfg"
    cfg.write_text("bodies = ball\n")
    assert main(["crosscheck", "--config", str(cfg), "--resolution", "64", "--out-dir", str(tmp_path / "o")]) == 1


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("STEINERLAB_OUT_DIR", str(tmp_path / "env"))
    assert main(["detlemma"]) == 0
    assert (tmp_path / "env" / "manifest.json").exists()


def test_monotonicity_small_run(q2):
    cfg = ExperimentConfig("monotonicity", bodies=["ellipse_2_05", "qball_4"], generators=["p=0.5", "p=2", "p=-1"],
                           directions=2, quadrature=q2)
    rep = run(cfg)
    rows = rep.tables["monotonicity"]
    assert len(rows) == 12
    assert all(r["verdict"] == SKIP for r in rows if r["generator"] == "p=2")
    assert all(r["equality"] == "yes" for r in rows if r["body"] == "ellipse_2_05" and r["verdict"] == PASS)
    assert not rep.failed


def test_isoperimetric_small_run(q2):
    cfg = ExperimentConfig("isoperimetric", bodies=["ellipse_2_1", "ball_off"], generators=["p=0.5", "p=-1"],
                           quadrature=q2)
    rows = run(cfg).tables["isoperimetric"]
    by = {(r["body"], r["generator"]): r for r in rows}
    assert by[("ellipse_2_1", "p=0.5")]["rhs_ratio"] == pytest.approx(2 ** 0.6)
    assert by[("ellipse_2_1", "p=0.5")]["lhs_ratio"] == pytest.approx(2 ** 0.6, rel=1e-6)
    assert all(r["verdict"] == PASS for r in rows)
    assert by[("ball_off", "p=0.5")]["margin"] > 5


def test_generators_in_config_dicts(q2):
    cfg = ExperimentConfig("isoperimetric", bodies=["ball"], quadrature=q2,
                           generators=[{"family": "Tabulated", "class_tag": "Conc", "knots": [0.01, 1, 100],
                                        "values": [0.01 ** 0.2, 1, 100 ** 0.2]}])
    rows = run(cfg).tables["isoperimetric"]
    assert rows[0]["verdict"] == PASS


def test_run_is_deterministic(tmp_path):
    args = ["monotonicity", "--seed", "11", "--resolution", "64"]
    cfg = tmp_path / "m.cfg"
    cfg.write_text("bodies = qball_3, ball_off\ndirections = 2\ngenerators = p=0.5, p=-0.5\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--config", str(cfg), "--out-dir", str(a)]) == 0
    assert main(args + ["--config", str(cfg), "--out-dir", str(b)]) == 0
    for name in ("monotonicity.csv", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_parallel_matches_serial(tmp_path):
    cfg = tmp_path / "m.cfg"
    cfg.write_text("bodies = qball_3, ball_off\ndirections = 2\ngenerators = p=0.5\n")
    a, b = tmp_path / "a", tmp_path / "b"
    main(["monotonicity", "--config", str(cfg), "--resolution", "64", "--out-dir", str(a)])
    main(["monotonicity", "--config", str(cfg), "--resolution", "64", "--jobs", "2", "--out-dir", str(b)])
    assert (a / "monotonicity.csv").read_bytes() == (b / "monotonicity.csv").read_bytes()


def test_generator_dicts_survive_process_boundary():
    g = power_conv(-0.5, 3)
    assert Generator.from_dict(json.loads(json.dumps(g.to_dict()))) == g
    assert QuadratureSpec(64).with_resolution(128).grid_resolution == 128
