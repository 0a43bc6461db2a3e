import csv
import json
import math
from pathlib import Path

import pytest

from dampedwave import cli
from dampedwave.cli import UNITS_NOTE, main
from dampedwave.features import FeatureConvergenceError

UNIT_DATUM = {"dimension": 1,
              "bumps": [{"center": [0.0], "radius": 1.0, "amplitude": 1.0}]}


def _write_config(path: Path, **overrides) -> Path:
    config = {"datum": UNIT_DATUM, "mode": "evaluate", "t": 5.0,
              "out": str(path / "out")}
    config.update(overrides)
    target = path / "config.json"
    target.write_text(json.dumps(config), encoding="utf-8")
    return target


def _read_csv(path: Path):
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == UNITS_NOTE
    rows = list(csv.reader(lines[1:]))
    return rows[0], rows[1:]


def test_help_exits_clean():
    assert main(["--help"]) == 0


def test_missing_config_flag():
    assert main([]) == 1


def test_config_file_absent(tmp_path):
    assert main(["--config", str(tmp_path / "nope.json")]) == 1


def test_config_file_invalid_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert main(["--config", str(bad)]) == 1


def test_config_missing_datum(tmp_path):
    bad = tmp_path / "cfg.json"
    bad.write_text(json.dumps({"mode": "evaluate", "t": 1.0}), encoding="utf-8")
    assert main(["--config", str(bad)]) == 1


def test_config_bad_mode(tmp_path):
    cfg = _write_config(tmp_path, mode="explode")
    assert main(["--config", str(cfg)]) == 1


def test_config_bad_times(tmp_path):
    for times in (-1.0, [2.0, 1.0], []):
        cfg = _write_config(tmp_path, t=times)
        assert main(["--config", str(cfg)]) == 1
    cfg = _write_config(tmp_path)
    assert main(["--config", str(cfg), "--t", "1,abc"]) == 1


def test_config_bad_sweep_factor(tmp_path):
    cfg = _write_config(tmp_path, mode="sweep")
    config = json.loads(cfg.read_text(encoding="utf-8"))
    del config["t"]
    config.update({"t_min": 1.0, "t_max": 8.0, "factor": 1.0})
    cfg.write_text(json.dumps(config), encoding="utf-8")
    assert main(["--config", str(cfg)]) == 1


def test_evaluate_decomposition_survives_serialization(tmp_path):
    cfg = _write_config(tmp_path, grid={"half_width": 4.0, "points": 21})
    assert main(["--config", str(cfg)]) == 0
    header, rows = _read_csv(tmp_path / "out" / "field_t5.0.csv")
    assert header == ["x1", "u", "principal", "wave_remainder"]
    assert len(rows) == 21
    for row in rows:
        u, principal, remainder = (float(v) for v in row[1:])
        # repr round-trips floats exactly, so the identity stays exact.
        assert u == principal + remainder


def test_time_override_changes_artifacts(tmp_path):
    cfg = _write_config(tmp_path, grid={"half_width": 2.0, "points": 5})
    assert main(["--config", str(cfg), "--t", "3.0"]) == 0
    out = tmp_path / "out"
    assert (out / "field_t3.0.csv").exists()
    assert not (out / "field_t5.0.csv").exists()


def test_output_override(tmp_path):
    cfg = _write_config(tmp_path, grid={"half_width": 2.0, "points": 5})
    elsewhere = tmp_path / "elsewhere"
    assert main(["--config", str(cfg), "--out", str(elsewhere)]) == 0
    assert (elsewhere / "field_t5.0.csv").exists()


def test_null_mode_table(tmp_path):
    cfg = _write_config(tmp_path, mode="null", t=200.0)
    assert main(["--config", str(cfg)]) == 0
    header, rows = _read_csv(tmp_path / "out" / "null_t200.0.csv")
    assert header == ["xi1", "nu1", "rho_null", "reference_radius"]
    assert len(rows) == 2
    for row in rows:
        rho = float(row[2])
        ref = float(row[3])
        assert ref == 20.0
        assert abs(rho - ref) < 2.0


def test_certify_mode_reruns_byte_identical(tmp_path):
    cfg = _write_config(tmp_path, mode="certify", t=50.0, order=32, seed=7)
    assert main(["--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    first = (tmp_path / "a" / "certify_t50.0.json").read_bytes()
    second = (tmp_path / "b" / "certify_t50.0.json").read_bytes()
    assert first == second
    payload = json.loads(first)
    assert payload["t"] == 50.0
    assert len(payload["certificates"]) == 11


def test_spots_mode_artifact(tmp_path):
    cfg = _write_config(tmp_path, mode="spots", t=100.0, order=32)
    assert main(["--config", str(cfg)]) == 0
    payload = json.loads((tmp_path / "out" / "spots_t100.0.json")
                         .read_text(encoding="utf-8"))
    assert payload["radius_null_reference"] == pytest.approx(math.sqrt(200.0))
    assert payload["cold_spot"] is not None
    assert len(payload["rays"]) == 2


def test_spots_nonconvergence_exit_code(tmp_path, monkeypatch):
    def explode(*args, **kwargs):
        raise FeatureConvergenceError("stuck")

    monkeypatch.setattr(cli, "build_spot_report", explode)
    cfg = _write_config(tmp_path, mode="spots", t=100.0)
    assert main(["--config", str(cfg)]) == 2


def test_oracle_compare_max_row(tmp_path):
    cfg = _write_config(tmp_path, mode="oracle-compare", t=5.0,
                        grid={"half_width": 6.5, "points": 41})
    assert main(["--config", str(cfg)]) == 0
    header, rows = _read_csv(tmp_path / "out" / "oracle_compare.csv")
    assert header == ["x1", "u_exact", "u_oracle", "diff"]
    summary = rows[-1]
    assert summary[0] == "MAX"
    assert float(summary[3]) < 1e-3
    assert float(summary[1]) > 0.0


def test_sweep_artifact_columns(tmp_path):
    cfg = _write_config(tmp_path, mode="sweep", order=32)
    config = json.loads(cfg.read_text(encoding="utf-8"))
    config["t"] = [50.0, 100.0]
    cfg.write_text(json.dumps(config), encoding="utf-8")
    assert main(["--config", str(cfg)]) == 0
    header, rows = _read_csv(tmp_path / "out" / "sweep.csv")
    assert header[:6] == ["t", "rho_null", "rho_crit", "cold_centroid_gap",
                          "hot_value", "cold_value"]
    assert len(header) == 6 + 11
    assert len(rows) == 2
    assert {cell for row in rows for cell in row[6:]} <= {"0", "1"}


def test_asymptotics_mode(tmp_path):
    cfg = _write_config(tmp_path, mode="asymptotics",
                        t=[1e3, 1e4],
                        asymptotics={"parity": "odd", "ell": 1, "r": 1.0,
                                     "regime": "leading"})
    assert main(["--config", str(cfg)]) == 0
    header, rows = _read_csv(tmp_path / "out" / "asymptotics.csv")
    assert header == ["t", "exact", "expansion", "ratio"]
    ratios = [float(row[3]) for row in rows]
    assert abs(ratios[-1] - 1.0) < 0.1
    assert abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0)


def test_asymptotics_bad_regime(tmp_path):
    cfg = _write_config(tmp_path, mode="asymptotics", t=10.0,
                        asymptotics={"regime": "wild"})
    assert main(["--config", str(cfg)]) == 1
