import json
import math

import numpy as np
import pytest

from chiralchain import io as cio
from chiralchain.cli import main, parse_angle


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def error_payload(err):
    assert err.startswith("error: ")
    return json.loads(err[len("error: "):])


@pytest.mark.parametrize(
    "text, value",
    [("pi/4", math.pi / 4), ("0.8pi", 0.8 * math.pi), ("3*pi/4", 0.75 * math.pi),
     ("pi", math.pi), ("1.25", 1.25)],
)
def test_parse_angle(text, value):
    assert parse_angle(text) == pytest.approx(value)


def test_matrix_csv(capsys):
    code, out, _ = run(capsys, "matrix", "-N", "3", "--xi", "pi/2", "-D", "0.2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# ")
    assert json.loads(lines[0][2:])["config"]["n_atoms"] == 3
    assert len(lines) == 2 + 9


def test_steady_single_atom(capsys):
    code, out, _ = run(capsys, "steady", "-N", "1", "--xi", "0", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    row = dict(zip(doc["columns"], doc["rows"][0]))
    assert row["normalized"] == 1.0


def test_steady_to_file_matches_library(tmp_path, capsys):
    path = tmp_path / "s.csv"
    code, _, _ = run(capsys, "steady", "-N", "5", "--xi", "1.0", "-D", "0.3", "--out", str(path))
    assert code == 0
    _, columns, rows = cio.read_csv(str(path))
    from chiralchain import ChainConfig, steady_state

    ref = steady_state(ChainConfig(5, 1.0, 0.3)).normalized
    got = np.array([float(r[columns.index("normalized")]) for r in rows])
    np.testing.assert_array_equal(got, ref)


def test_config_file_with_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_atoms": 4, "xi": 1.0, "directionality": 0.5}))
    code, out, _ = run(capsys, "spectrum", "--config", str(cfg), "-N", "6")
    assert code == 0
    assert len(out.splitlines()) == 2 + 6


def test_spectrum_dark_modes(capsys):
    code, out, _ = run(capsys, "spectrum", "-N", "100", "--xi", "0", "-D", "0")
    assert code == 0
    _, _, *rows = out.splitlines()
    rates = [float(r.split(",")[1]) for r in rows]
    assert sum(abs(g) < 1e-10 for g in rates) == 99


def test_dynamics_modes(capsys):
    code, out, _ = run(capsys, "dynamics", "-N", "1", "--xi", "0", "-D", "1", "--mode", "traversal")
    assert code == 0
    assert "2.4558" in out
    code, out, _ = run(capsys, "dynamics", "-N", "3", "--xi", "1", "--t-end", "2", "--dt", "1", "--rescale")
    assert code == 0
    assert len(out.splitlines()) == 2 + 3
    code, out, _ = run(capsys, "dynamics", "-N", "10", "--xi", "0.8pi", "-D", "1", "--mode",
                       "subharmonic", "--t-start", "200", "--t-end", "400", "--format", "json")
    assert code == 0
    row = dict(zip(*(lambda d: (d["columns"], d["rows"][0]))(json.loads(out))))
    assert row["persistence"] == 0.0


def test_transport_slopes(capsys):
    code, out, _ = run(capsys, "transport", "-N", "51", "--xi", "pi/4", "--slopes", "0", "50", "3")
    assert code == 0
    assert len(out.splitlines()) == 2 + 3


def test_fit(capsys):
    code, out, _ = run(capsys, "fit", "power", "--sizes", "25", "50", "100",
                       "--values", "13.607", "20.892", "27.646", "--format", "json")
    assert code == 0
    row = dict(zip(*(lambda d: (d["columns"], d["rows"][0]))(json.loads(out))))
    assert row["alpha"] == pytest.approx(0.511, abs=1e-3)


def test_phase_diagram_cli(tmp_path, capsys):
    code, out, _ = run(capsys, "phase-diagram", "--d-grid", "0", "0", "1", "--xi-grid", "pi/8", "pi/8", "1",
                       "--sizes", "10", "20", "30", "--out", str(tmp_path), "--format", "both")
    assert code == 0
    assert json.loads(out) == {"cells": 1, "labels": {"BEE": 1}}
    assert (tmp_path / "phase_diagram.csv").exists() and (tmp_path / "phase_diagram.json").exists()


@pytest.mark.parametrize(
    "argv, kind",
    [
        (["phase-diagram", "--d-grid", "0", "1", "0", "--out", "x"], "usage"),
        (["steady", "-N", "3"], "usage"),
        (["steady", "-N", "3", "--xi", "9"], "usage"),
        (["recipe", "fig99", "--out", "x"], "usage"),
        (["fit", "power", "--sizes", "1", "2", "--values", "1"], "usage"),
        (["nonsense"], "usage"),
        (["--workers", "0", "steady", "-N", "2", "--xi", "1"], "usage"),
    ],
)
def test_usage_errors_exit_2(capsys, argv, kind):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert error_payload(err)["error"] == kind


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_atoms": 4, "xi": 1.0, "spacing": 2}))
    code, _, err = run(capsys, "steady", "--config", str(cfg))
    assert code == 2
    assert "'spacing'" in error_payload(err)["message"]


def test_critical_point_exit_1(capsys):
    code, _, err = run(capsys, "steady", "-N", "20", "--xi", "0", "-D", "0")
    assert code == 1
    payload = error_payload(err)
    assert payload["error"] == "CriticalPointError"
    assert payload["condition_estimate"] == "inf" or payload["condition_estimate"] > 1e12


def test_unwritable_output_exit_1(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, _, err = run(capsys, "recipe", "figS2", "--out", str(blocker / "sub"))
    assert code == 1
    assert error_payload(err)["error"] == "io"
