import json
import os

import numpy as np
import pytest

from mmlab import FiniteMms
from mmlab.cli import ScenarioConfig, main, validate_dict


def write_finite(path, n=12):
    pts = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    dist = np.abs(pts[:, None] - pts[None, :])
    dist = np.minimum(dist, 2 * np.pi - dist)
    FiniteMms(dist=dist, weights=np.full(n, 2 * np.pi / n), base_index=0).save(path)


def write_config(path, **overrides):
    cfg = {"scenario": "custom_finite", "mc_count": 500, "seed": 7}
    cfg.update(overrides)
    with open(path, "w") as fh:
        json.dump(cfg, fh)


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in ("torus_collapse", "cone_interval", "ou_family",
                 "reflected_family", "custom_finite"):
        assert name in out


def test_validate_reports_field_paths(capsys):
    errors = validate_dict({"scenario": "nope", "mc_count": -3, "times": [0.5, "x"]})
    joined = "\n".join(errors)
    assert "scenario" in joined
    assert "mc_count" in joined
    assert "times" in joined


def test_validate_command(tmp_path, capsys):
    good = tmp_path / "good.json"
    write_finite(tmp_path / "space.txt")
    write_config(good, finite_file=str(tmp_path / "space.txt"))
    assert main(["validate", str(good)]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text('{"scenario": "unknown"}')
    assert main(["validate", str(bad)]) == 1
    capsys.readouterr()


def test_run_missing_config(capsys):
    assert main(["run", "/nonexistent/config.json"]) == 1
    assert "error" in capsys.readouterr().out


def test_run_custom_finite_artifacts(tmp_path, capsys):
    space_file = tmp_path / "space.txt"
    write_finite(space_file)
    cfg = tmp_path / "cfg.json"
    out_dir = tmp_path / "out"
    write_config(cfg, finite_file=str(space_file), out_dir=str(out_dir))
    assert main(["run", str(cfg)]) == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert report["pass"] and not report["incomplete"]
    names = {c["name"] for c in report["checks"]}
    assert {"kernel_algebra", "on_diagonal_monotone", "mixing_bound"} <= names
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["seed"] == 7
    assert (out_dir / "kernel_checks.csv").exists()


def test_run_byte_identical(tmp_path):
    space_file = tmp_path / "space.txt"
    write_finite(space_file)
    cfg = tmp_path / "cfg.json"
    write_config(cfg, finite_file=str(space_file), out_dir=str(tmp_path / "a"))
    assert main(["run", str(cfg)]) == 0
    assert main(["run", str(cfg), "--out", str(tmp_path / "b"), "--threads", "3"]) == 0
    for name in os.listdir(tmp_path / "a"):
        left = (tmp_path / "a" / name).read_bytes()
        right = (tmp_path / "b" / name).read_bytes()
        assert left == right, name


def test_config_defaults_documented():
    cfg = ScenarioConfig(scenario="torus_collapse")
    assert cfg.n_grid == [1, 2, 4, 8, 16]
    assert cfg.mc_count == 10000
    assert cfg.times == [0.25, 0.75]
