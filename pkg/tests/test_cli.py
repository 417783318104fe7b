"""End-to-end command-line behavior: artifacts, exit codes, error paths."""
import json
import math
from pathlib import Path

import numpy as np
import pytest

from chemoseek.cli import (
    TRAJ_HEADER,
    bundled_config_dict,
    main,
    read_trajectory_csv,
    write_trajectory_csv,
)
from chemoseek.config import config_digest, parse_config, resolved_dict
from chemoseek.simulate import run


def write_config(path: Path, data: dict) -> str:
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    return str(path)


def short_fig2(t_end=2.0, **noise):
    data = bundled_config_dict("fig2")
    data["sim"]["t_end"] = t_end
    if noise:
        data["noise"] = noise
    return data


@pytest.fixture(scope="module")
def fig2_run(tmp_path_factory):
    """One full bundled radial run through the CLI, shared read-only."""
    base = tmp_path_factory.mktemp("fig2run")
    cfg_path = write_config(base / "config.json", bundled_config_dict("fig2"))
    out = base / "out"
    assert main(["simulate", "--config", cfg_path, "--out", str(out)]) == 0
    return cfg_path, out


@pytest.fixture(scope="module")
def planar_run(tmp_path_factory):
    """One full bundled planar run through the CLI, shared read-only."""
    base = tmp_path_factory.mktemp("planarrun")
    cfg_path = write_config(base / "config.json", bundled_config_dict("planar"))
    out = base / "out"
    assert main(["simulate", "--config", cfg_path, "--out", str(out)]) == 0
    return cfg_path, out


def test_simulate_writes_artifacts(fig2_run):
    cfg_path, out = fig2_run
    for name in ("trajectory.csv", "metrics.json", "manifest.json"):
        assert (out / name).is_file()
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == TRAJ_HEADER
    config = parse_config(json.loads(Path(cfg_path).read_text()))
    # one row per record stride plus the initial row
    expected_rows = math.floor(config.t_end / (config.dt * config.record_stride) + 1e-9) + 1
    assert len(lines) - 1 == expected_rows

    metrics = json.loads((out / "metrics.json").read_text())
    for key in ("status", "rows", "t_final", "hit", "t_hit", "min_dist",
                "final_c", "condition_value", "is_ascent"):
        assert key in metrics
    assert metrics["status"] == "ok"
    assert metrics["hit"] is True
    assert metrics["t_hit"] == pytest.approx(11.171551445688383, rel=1e-12)
    assert metrics["is_ascent"] is True

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["artifact"] == "chemoseek"
    assert manifest["config_digest"] == config_digest(resolved_dict(config))
    assert manifest["outputs"]["trajectory"] == "trajectory.csv"
    assert manifest["duration_s"] > 0.0


def test_trajectory_round_trip(fig2_run):
    cfg_path, out = fig2_run
    config = parse_config(json.loads(Path(cfg_path).read_text()))
    traj = read_trajectory_csv(out / "trajectory.csv", config.swimmer)
    fresh = run(config)
    assert traj.n_rows == fresh.n_rows
    # 17 significant digits round-trip float64 exactly
    assert np.array_equal(traj.p, fresh.p)
    assert np.array_equal(traj.R, fresh.R)
    assert np.array_equal(traj.eta, fresh.eta)
    assert np.allclose(traj.R_bar, fresh.R_bar, atol=1e-12)


def test_simulate_rejects_bad_config(tmp_path, capsys):
    data = short_fig2()
    data["sim"]["dt"] = 0.0
    cfg = write_config(tmp_path / "c.json", data)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "dt" in capsys.readouterr().err

    data = short_fig2()
    data["swimmer"]["vv"] = 1.0
    cfg = write_config(tmp_path / "c2.json", data)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o2")]) == 2
    assert "swimmer.vv" in capsys.readouterr().err

    assert main(["simulate", "--config", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "o3")]) == 2


def test_simulate_seed_flag_overrides(tmp_path):
    data = short_fig2(t_end=0.5, kind="additive-gaussian", std=0.05, seed=1)
    cfg = write_config(tmp_path / "c.json", data)
    out1, out2, out3 = (tmp_path / n for n in ("a", "b", "c"))
    assert main(["simulate", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(out2),
                 "--seed", "2"]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(out3),
                 "--seed", "2"]) == 0
    assert json.loads((out2 / "manifest.json").read_text())["seed"] == 2
    t1 = (out1 / "trajectory.csv").read_bytes()
    t2 = (out2 / "trajectory.csv").read_bytes()
    t3 = (out3 / "trajectory.csv").read_bytes()
    assert t1 != t2  # different seed, different noise
    assert t2 == t3  # same seed, bit-identical rerun


def test_simulate_planar_flag_pins_plane(tmp_path):
    cfg = write_config(tmp_path / "c.json", short_fig2(t_end=1.0))
    out = tmp_path / "o"
    assert main(["simulate", "--config", cfg, "--out", str(out),
                 "--planar"]) == 0
    config = parse_config(json.loads(Path(cfg).read_text()))
    traj = read_trajectory_csv(out / "trajectory.csv", config.swimmer)
    assert np.abs(traj.p[:, 2] - traj.p[0, 2]).max() <= 1e-9


def test_simulate_flip_flag_reports_descent(tmp_path):
    cfg = write_config(tmp_path / "c.json", short_fig2(t_end=1.0))
    out = tmp_path / "o"
    assert main(["simulate", "--config", cfg, "--out", str(out),
                 "--flip-omega-perp-1"]) == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["is_ascent"] is False
    assert metrics["condition_value"] > 0.0


def test_sweep_grid_order_and_summary(tmp_path):
    cfg = write_config(tmp_path / "c.json", short_fig2(t_end=0.5))
    sweep = tmp_path / "sweep.json"
    sweep.write_text(json.dumps({
        "swimmer.omega_perp_1": [-1.0, 1.0],
        "noise.seed": [1, 2],
    }))
    out = tmp_path / "grid"
    assert main(["sweep", "--config", cfg, "--sweep", str(sweep),
                 "--out", str(out)]) == 0
    for k in range(4):
        assert (out / f"run_{k:04d}" / "trajectory.csv").is_file()
    lines = (out / "summary.csv").read_text().splitlines()
    assert lines[0].startswith("index,swimmer.omega_perp_1,noise.seed,")
    assert lines[0].endswith("hit,t_hit,min_dist,final_c,"
                             "condition_value,is_ascent,status")
    assert len(lines) == 5
    rows = [line.split(",") for line in lines[1:]]
    assert [r[0] for r in rows] == ["0", "1", "2", "3"]
    # itertools.product order: first axis varies slowest
    assert [r[1] for r in rows] == ["-1", "-1", "1", "1"]
    assert [r[2] for r in rows] == ["1", "2", "1", "2"]
    is_ascent = [r[lines[0].split(",").index("is_ascent")] for r in rows]
    assert is_ascent == ["true", "true", "false", "false"]
    assert all(r[-1] == "ok" for r in rows)


def test_sweep_parallel_matches_serial(tmp_path):
    cfg = write_config(tmp_path / "c.json", short_fig2(t_end=0.5))
    sweep = tmp_path / "sweep.json"
    sweep.write_text(json.dumps({"filter.sigma1": [0.2, 0.25, 0.3]}))
    out1, out2 = tmp_path / "serial", tmp_path / "parallel"
    assert main(["sweep", "--config", cfg, "--sweep", str(sweep),
                 "--out", str(out1)]) == 0
    assert main(["sweep", "--config", cfg, "--sweep", str(sweep),
                 "--out", str(out2), "--parallelism", "2"]) == 0
    assert (out1 / "summary.csv").read_bytes() == (out2 / "summary.csv").read_bytes()
    for k in range(3):
        a = (out1 / f"run_{k:04d}" / "trajectory.csv").read_bytes()
        b = (out2 / f"run_{k:04d}" / "trajectory.csv").read_bytes()
        assert a == b


def test_sweep_rejects_bad_specs(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", short_fig2(t_end=0.5))
    sweep = tmp_path / "sweep.json"
    out = str(tmp_path / "o")

    sweep.write_text(json.dumps({"filter.sigmaX": [0.2]}))
    assert main(["sweep", "--config", cfg, "--sweep", str(sweep),
                 "--out", out]) == 2
    assert "filter.sigmaX" in capsys.readouterr().err

    sweep.write_text(json.dumps({}))
    assert main(["sweep", "--config", cfg, "--sweep", str(sweep),
                 "--out", out]) == 2

    sweep.write_text(json.dumps({"filter.sigma1": []}))
    assert main(["sweep", "--config", cfg, "--sweep", str(sweep),
                 "--out", out]) == 2

    sweep.write_text(json.dumps({"filter.sigma1": [0.2]}))
    assert main(["sweep", "--config", cfg, "--sweep", str(sweep),
                 "--out", out, "--parallelism", "0"]) == 2


def test_analyze_ascent(planar_run, tmp_path):
    cfg_path, run_dir = planar_run
    out = tmp_path / "analysis"
    assert main(["analyze", "--traj", str(run_dir / "trajectory.csv"),
                 "--config", cfg_path, "--kind", "ascent",
                 "--out", str(out)]) == 0
    report = json.loads((out / "analysis.json").read_text())
    assert report["kind"] == "ascent"
    assert report["is_ascent"] is True
    assert report["gamma_fit"] > 0.0
    assert report["residual"] < 0.15


def test_analyze_alignment(fig2_run, tmp_path):
    cfg_path, run_dir = fig2_run
    out = tmp_path / "analysis"
    assert main(["analyze", "--traj", str(run_dir / "trajectory.csv"),
                 "--config", cfg_path, "--kind", "alignment",
                 "--out", str(out)]) == 0
    report = json.loads((out / "analysis.json").read_text())
    assert report["rows"] > 0
    assert report["aligning"] is True
    assert report["median_angle_last_fifth"] < report["median_angle_first_fifth"]
    series = (out / "alignment_series.csv").read_text().splitlines()
    assert series[0] == "t,angle_rad"
    assert len(series) - 1 == report["rows"]


def test_analyze_quasi_steady(planar_run, tmp_path):
    cfg_path, run_dir = planar_run
    out = tmp_path / "analysis"
    assert main(["analyze", "--traj", str(run_dir / "trajectory.csv"),
                 "--config", cfg_path, "--kind", "quasi-steady",
                 "--out", str(out)]) == 0
    report = json.loads((out / "analysis.json").read_text())
    assert report["measured_gain"] == pytest.approx(report["predicted_gain"],
                                                    rel=0.05)
    assert report["measured_phase"] == pytest.approx(report["predicted_phase"],
                                                     abs=0.05)
    assert report["stimulus_amplitude"] > 0.0


def test_analyze_rejects_malformed_csv(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", short_fig2())
    out = str(tmp_path / "o")

    bad = tmp_path / "empty.csv"
    bad.write_text(TRAJ_HEADER + "\n")
    assert main(["analyze", "--traj", str(bad), "--config", cfg,
                 "--kind", "ascent", "--out", out]) == 2
    assert "no data rows" in capsys.readouterr().err

    bad = tmp_path / "short_row.csv"
    good_row = ",".join(["0.0"] * 21)
    bad_row = ",".join(["1.0"] * 20)
    bad.write_text(TRAJ_HEADER + "\n" + good_row + "\n" + bad_row + "\n")
    assert main(["analyze", "--traj", str(bad), "--config", cfg,
                 "--kind", "ascent", "--out", out]) == 2
    assert "line 3" in capsys.readouterr().err

    bad = tmp_path / "bad_header.csv"
    bad.write_text("time,x,y\n1,2,3\n")
    assert main(["analyze", "--traj", str(bad), "--config", cfg,
                 "--kind", "ascent", "--out", out]) == 2
    assert "header" in capsys.readouterr().err

    bad = tmp_path / "backwards.csv"
    row0 = "0.0," + ",".join(["0.0"] * 20)
    row1 = "2.0," + ",".join(["0.0"] * 20)
    row2 = "1.0," + ",".join(["0.0"] * 20)
    bad.write_text("\n".join([TRAJ_HEADER, row0, row1, row2]) + "\n")
    assert main(["analyze", "--traj", str(bad), "--config", cfg,
                 "--kind", "ascent", "--out", out]) == 2
    assert "not increasing" in capsys.readouterr().err


def test_reproduce_command(tmp_path, capsys):
    out = tmp_path / "repro"
    assert main(["reproduce-fig2", "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "hit=true" in stdout
    assert "t_hit=11.1716" in stdout
    for name in ("trajectory.csv", "metrics.json", "manifest.json",
                 "eta_vs_stimulus.csv", "trajectory.svg"):
        assert (out / name).is_file()
    svg = (out / "trajectory.svg").read_text()
    assert svg.startswith("<svg ") and "polyline" in svg
    series = (out / "eta_vs_stimulus.csv").read_text().splitlines()
    assert series[0] == "t,s,eta"
    assert len(series) - 1 == json.loads((out / "metrics.json").read_text())["rows"]


def test_reproduce_flipped_gain_still_reports(tmp_path, capsys):
    # the descent tuning is not a pinned regression; the command reports
    # honestly and exits 0 even though the steering sign is wrong
    out = tmp_path / "repro_flip"
    assert main(["reproduce-fig2", "--out", str(out),
                 "--flip-omega-perp-1"]) == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["is_ascent"] is False
    assert capsys.readouterr().out.startswith("hit=")


def test_reproduce_planar_variant(tmp_path):
    out = tmp_path / "repro_planar"
    assert main(["reproduce-fig2", "--out", str(out), "--planar"]) == 0
    cfg = parse_config(bundled_config_dict("fig2"))
    traj = read_trajectory_csv(out / "trajectory.csv", cfg.swimmer)
    assert np.abs(traj.p[:, 2] - traj.p[0, 2]).max() <= 1e-9


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "chemoseek" in capsys.readouterr().out


def test_write_read_round_trip_synthetic(tmp_path):
    cfg = parse_config(short_fig2(t_end=0.1))
    traj = run(cfg)
    path = tmp_path / "t.csv"
    write_trajectory_csv(path, traj)
    back = read_trajectory_csv(path, cfg.swimmer)
    assert np.array_equal(back.t, traj.t)
    assert np.array_equal(back.p_bar, traj.p_bar)
