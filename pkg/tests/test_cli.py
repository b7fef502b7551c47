import json

import numpy as np
import pytest

from walkspectra import ConfigError, validate_unitarity
from walkspectra.cli import PRESETS, dump_config, main, parse_config, preset_steps, run

S2 = 1 / np.sqrt(2)


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_hadamard_preset_golden():
    steps = preset_steps("hadamard-1d")
    np.testing.assert_array_equal(steps[(-1,)], S2 * np.array([[1, 1], [0, 0]]))
    np.testing.assert_array_equal(steps[(1,)], S2 * np.array([[0, 0], [1, -1]]))


def test_grover_preset_golden():
    steps = preset_steps("grover-2d")
    G = 0.5 * np.ones((4, 4)) - np.eye(4)
    assert set(steps) == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    np.testing.assert_array_equal(sum(steps.values()), G)
    for j, a in enumerate([(1, 0), (-1, 0), (0, 1), (0, -1)]):
        np.testing.assert_array_equal(steps[a][j], G[j])


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_are_unitary(name):
    cfg = parse_config({"version": 1, "preset": name})
    assert validate_unitarity(cfg.operator(), 1e-12).passed


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_round_trip(name):
    cfg = parse_config({"version": 1, "preset": name, "horizon": 7, "grid_n": 12})
    again = parse_config(json.dumps(dump_config(cfg)))
    assert again.operator() == cfg.operator()
    for a, C in cfg.steps.items():
        assert np.max(np.abs(again.steps[a] - C)) <= 1e-15
    assert again.horizon == 7 and again.grid_n == 12
    assert again.digest() == cfg.digest()


@pytest.mark.parametrize("doc,field", [
    ({"preset": "hadamard-1d"}, "version"),
    ({"version": 2, "preset": "hadamard-1d"}, "version"),
    ({"version": 1, "preset": "hadamard-1d", "colour": 1}, "colour"),
    ({"version": 1, "preset": "nope"}, "preset"),
    ({"version": 1, "d": 1, "coin_dim": 2,
      "steps": [{"offset": [0], "matrix": np.eye(3).tolist()}]}, "steps[0].matrix"),
    ({"version": 1, "d": 1, "coin_dim": 1,
      "steps": [{"offset": [0, 1], "matrix": [[[1, 0]]]}]}, "steps[0].offset"),
    ({"version": 1, "preset": "hadamard-1d", "tolerances": {"cluster": -1}},
     "tolerances.cluster"),
    ({"version": 1, "preset": "hadamard-1d", "d": 2}, "d"),
])
def test_config_errors(doc, field):
    with pytest.raises(ConfigError) as info:
        parse_config(doc)
    assert info.value.field == field


def test_explicit_config_with_initial_state():
    cfg = parse_config({
        "version": 1, "d": 1, "coin_dim": 1,
        "steps": [{"offset": [1], "matrix": [[[1.0, 0.0]]]}],
        "initial_state": [{"site": [2], "vector": [[0.0, 1.0]]}],
    })
    assert cfg.state()[(2,)][0] == 1j


def test_run_spectrum_grover():
    cfg = parse_config({"version": 1, "preset": "grover-2d", "grid_n": 16})
    rep, _ = run("spectrum", cfg)
    vals = sorted(v[0] for v in rep["spectrum"]["point_spectrum"])
    assert vals == pytest.approx([-1, 1])
    assert all(c["certified"] for c in rep["spectrum"]["candidates"])


def test_run_spectrum_hadamard():
    rep, _ = run("spectrum", parse_config({"version": 1, "preset": "hadamard-1d"}))
    assert rep["spectrum"]["point_spectrum"] == []


def test_run_average_constant_coin():
    rep, _ = run("average", parse_config({"version": 1, "preset": "constant-coin",
                                          "horizon": 32}))
    tr = rep["average"]["traces"][0]
    assert tr["means"][-1] == pytest.approx(1.0)
    assert tr["predicted"] == pytest.approx(1.0)


def test_cli_outputs_and_determinism(tmp_path):
    cfg = write(tmp_path, {"version": 1, "preset": "hadamard-1d", "horizon": 40})
    assert main(["report", "--config", str(cfg), "--out", str(tmp_path / "a"),
                 "--site", "0", "--site", "2"]) == 0
    assert main(["report", "--config", str(cfg), "--out", str(tmp_path / "b"),
                 "--site", "0", "--site", "2"]) == 0
    a = (tmp_path / "a" / "report.json").read_bytes()
    assert a == (tmp_path / "b" / "report.json").read_bytes()
    rep = json.loads(a)
    assert {"unitarity", "spectrum", "evolve", "average", "decay", "density"} <= set(rep)
    rows = (tmp_path / "a" / "evolve_series.csv").read_text().splitlines()
    assert rows[0] == "n,x1,p"
    assert rows[1] == "0,0,1.0"
    assert len(rows) == 1 + 2 * 41


def test_series_floats_round_trip(tmp_path):
    cfg = write(tmp_path, {"version": 1, "preset": "hadamard-1d", "horizon": 12})
    main(["evolve", "--config", str(cfg), "--out", str(tmp_path)])
    rep = json.loads((tmp_path / "evolve.json").read_text())
    rows = (tmp_path / "evolve_series.csv").read_text().splitlines()[1:]
    assert [float(r.split(",")[-1]) for r in rows] == rep["evolve"]["series"][0]["p"]


def test_exit_codes(tmp_path, capsys):
    bad = write(tmp_path, {"version": 1, "d": 1, "coin_dim": 2,
                           "steps": [{"offset": [0], "matrix": np.eye(3).tolist()}]})
    assert main(["validate", "--config", str(bad)]) == 2
    nonunitary = write(tmp_path, {"version": 1, "d": 1, "coin_dim": 1,
                                  "steps": [{"offset": [1], "matrix": [[[1.01, 0]]]}]}, "n.json")
    assert main(["validate", "--config", str(nonunitary)]) == 3
    grover = write(tmp_path, {"version": 1, "preset": "grover-2d"}, "g.json")
    assert main(["density", "--config", str(grover)]) == 3
    assert main(["validate", "--config", str(tmp_path / "missing.json")]) == 2
    ok = write(tmp_path, {"version": 1, "preset": "pure-shift"}, "p.json")
    capsys.readouterr()
    assert main(["validate", "--config", str(ok)]) == 0
    assert json.loads(capsys.readouterr().out)["unitarity"]["passed"] is True


def test_grid_and_horizon_flags(tmp_path, capsys):
    cfg = write(tmp_path, {"version": 1, "preset": "hadamard-1d"})
    assert main(["evolve", "--config", str(cfg), "--horizon", "5", "--grid", "64"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["provenance"]["grid_n"] == 64
    assert len(rep["evolve"]["series"][0]["p"]) == 6
