"""Command-line front end.

Four subcommands: `simulate` runs one config and writes trajectory.csv,
metrics.json and manifest.json into the output directory; `sweep` runs a
grid of configs (optionally in parallel worker processes) and merges a
summary.csv in grid order; `analyze` post-processes a trajectory CSV
(ascent fit, gradient alignment, or quasi-steady filter response); and
`reproduce-fig2` runs the bundled radial-field configuration and emits the
stimulus/feedback series plus an SVG projection of the path.

Exit codes are a stable contract: 0 success, 2 configuration or input
error, 3 numerical abort or regression break.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys
import time
from dataclasses import replace
from importlib import resources
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import __version__
from .averaging import (alignment_angle_series, ascent_condition, fit_gamma,
                        transient_cutoff)
from .config import (ConfigError, config_digest, load_config_dict,
                     parse_config, resolved_dict, set_path)
from .kinematics import SwimmerParams, averaged_frames
from .signaling import quasi_steady_fit, transfer_gain_phase
from .simulate import ArrivalMetrics, SimConfig, Trajectory, arrival_metrics, run

TRAJ_HEADER = ("t,px,py,pz,r11,r12,r13,r21,r22,r23,r31,r32,r33,"
               "s,zeta1,zeta2,rho,eta,pbx,pby,pbz")
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class TrajectoryFormatError(ValueError):
    """Malformed trajectory CSV; message names the first bad line."""


def write_trajectory_csv(path: Path, traj: Trajectory) -> None:
    n = traj.n_rows
    M = np.column_stack([
        traj.t, traj.p, traj.R.reshape(n, 9), traj.s,
        traj.zeta1, traj.zeta2, traj.rho, traj.eta, traj.p_bar,
    ])
    np.savetxt(path, M, fmt="%.17g", delimiter=",",
               header=TRAJ_HEADER, comments="")


def read_trajectory_csv(path: Path, swimmer: SwimmerParams) -> Trajectory:
    """Strict reader; the averaged rotation is recomputed from t and R."""
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != TRAJ_HEADER:
            raise TrajectoryFormatError(f"{path}: line 1: unexpected header")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 21:
                raise TrajectoryFormatError(
                    f"{path}: line {lineno}: expected 21 columns, got {len(parts)}")
            try:
                rows.append([float(x) for x in parts])
            except ValueError:
                raise TrajectoryFormatError(
                    f"{path}: line {lineno}: non-numeric value") from None
    if not rows:
        raise TrajectoryFormatError(f"{path}: no data rows")
    M = np.array(rows)
    t = M[:, 0]
    if np.any(np.diff(t) <= 0.0):
        bad = int(np.argmax(np.diff(t) <= 0.0)) + 3  # +2 header/first row, +1 diff
        raise TrajectoryFormatError(f"{path}: line {bad}: time not increasing")
    n = M.shape[0]
    p = M[:, 1:4]
    R = M[:, 4:13].reshape(n, 3, 3)
    _, R_bar = averaged_frames(t, p, R, swimmer)
    return Trajectory(t=t, p=p, R=R, s=M[:, 13], zeta1=M[:, 14],
                      zeta2=M[:, 15], rho=M[:, 16], eta=M[:, 17],
                      p_bar=M[:, 18:21], R_bar=R_bar)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _metrics_dict(traj: Trajectory, metrics: ArrivalMetrics,
                  config: SimConfig) -> dict:
    report = ascent_condition(config.swimmer, config.filter)
    return {
        "status": traj.status,
        "rows": traj.n_rows,
        "t_final": float(traj.t[-1]),
        "hit": metrics.hit,
        "t_hit": metrics.t_hit,
        "min_dist": metrics.min_dist,
        "final_c": metrics.final_c,
        "condition_value": report.condition_value,
        "is_ascent": report.is_ascent,
    }


def _run_and_write(config: SimConfig, out: Path) -> tuple[Trajectory, dict]:
    """Execute one run and write the standard three artifacts."""
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    traj = run(config)
    duration = time.perf_counter() - t0
    write_trajectory_csv(out / "trajectory.csv", traj)
    metrics = _metrics_dict(traj, arrival_metrics(traj, config.field), config)
    _write_json(out / "metrics.json", metrics)
    manifest = {
        "artifact": "chemoseek",
        "version": __version__,
        "config_digest": config_digest(resolved_dict(config)),
        "seed": config.noise.seed,
        "outputs": {
            "trajectory": "trajectory.csv",
            "metrics": "metrics.json",
        },
        "duration_s": duration,
    }
    _write_json(out / "manifest.json", manifest)
    return traj, metrics


def _apply_flags(data: dict, args: argparse.Namespace) -> None:
    """Fold the mutating CLI flags into the raw config dict."""
    if getattr(args, "seed", None) is not None:
        set_path(data, "noise.seed", args.seed)
    if getattr(args, "planar", False):
        set_path(data, "swimmer.omega_par_0", 0.0)
        set_path(data, "swimmer.omega_par_1", 0.0)
    if getattr(args, "flip_omega_perp_1", False):
        swimmer = data.get("swimmer")
        if not isinstance(swimmer, dict):
            raise ConfigError("missing required section 'swimmer'")
        current = swimmer.get("omega_perp_1", 0.0)
        if isinstance(current, bool) or not isinstance(current, (int, float)):
            raise ConfigError("swimmer.omega_perp_1 must be a number")
        set_path(data, "swimmer.omega_perp_1", -float(current))


def cmd_simulate(args: argparse.Namespace) -> int:
    data = load_config_dict(args.config)
    _apply_flags(data, args)
    config = parse_config(data)
    traj, _ = _run_and_write(config, Path(args.out))
    if traj.status != "ok":
        print(f"numerical abort at step {traj.abort_step}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _load_sweep_spec(path: str) -> tuple[list[str], list[list]]:
    try:
        spec = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(spec, dict) or not spec:
        raise ConfigError(f"{path}: sweep spec must be a non-empty object "
                          "mapping parameter paths to value lists")
    paths, grids = [], []
    for key, values in spec.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"{path}: values for {key!r} must be a "
                              "non-empty list")
        paths.append(key)
        grids.append(values)
    return paths, grids


def _sweep_worker(task: tuple[int, SimConfig, str]) -> dict:
    index, config, out_dir = task
    traj, metrics = _run_and_write(config, Path(out_dir))
    return {"index": index, **metrics}


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.parallelism < 1:
        raise ConfigError(f"parallelism must be >= 1, got {args.parallelism}")
    base = load_config_dict(args.config)
    _apply_flags(base, args)
    paths, grids = _load_sweep_spec(args.sweep)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    tasks = []
    combos = list(itertools.product(*grids))
    for index, combo in enumerate(combos):
        data = json.loads(json.dumps(base))
        for path, value in zip(paths, combo):
            set_path(data, path, value)
        config = replace(parse_config(data), stream=index)
        tasks.append((index, config, str(out / f"run_{index:04d}")))

    if args.parallelism > 1:
        with get_context("fork").Pool(args.parallelism) as pool:
            results = pool.map(_sweep_worker, tasks)
    else:
        results = [_sweep_worker(task) for task in tasks]

    columns = (["index"] + paths
               + ["hit", "t_hit", "min_dist", "final_c",
                  "condition_value", "is_ascent", "status"])
    lines = [",".join(columns)]
    for (index, combo), row in zip(enumerate(combos), results):
        cells = [str(index)] + [_fmt(v) for v in combo]
        cells += [_fmt(row[k]) for k in ("hit", "t_hit", "min_dist", "final_c",
                                         "condition_value", "is_ascent",
                                         "status")]
        lines.append(",".join(cells))
    (out / "summary.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if any(row["status"] != "ok" for row in results):
        print("one or more sweep points aborted numerically", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    config = parse_config(load_config_dict(args.config))
    traj = read_trajectory_csv(Path(args.traj), config.swimmer)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload: dict = {"kind": args.kind, "trajectory": str(args.traj)}
    if args.kind == "ascent":
        report = fit_gamma(traj, config.field, config.swimmer, config.filter)
        payload.update(report.to_dict())
    elif args.kind == "alignment":
        t, angles = alignment_angle_series(traj, config.field, config.swimmer)
        M = np.column_stack([t, angles]) if t.size else np.empty((0, 2))
        np.savetxt(out / "alignment_series.csv", M, fmt="%.17g",
                   delimiter=",", header="t,angle_rad", comments="")
        if t.size:
            k = max(1, t.size // 5)
            first = float(np.median(angles[:k]))
            last = float(np.median(angles[-k:]))
            payload.update({"rows": int(t.size),
                            "median_angle_first_fifth": first,
                            "median_angle_last_fifth": last,
                            "aligning": last < first})
        else:
            payload.update({"rows": 0})
    else:  # quasi-steady
        freq = config.swimmer.omega
        zeta = traj.zeta2 - traj.zeta1
        cut = transient_cutoff(config.swimmer, config.filter)
        keep = traj.t >= cut
        if np.count_nonzero(keep) < 8:
            raise ValueError("trajectory too short for a quasi-steady fit "
                             f"(needs rows past t={cut:g})")
        _, b_s, psi_s = quasi_steady_fit(traj.t[keep], traj.s[keep], freq)
        _, b_z, psi_z = quasi_steady_fit(traj.t[keep], zeta[keep], freq)
        gain_pred, phase_pred = transfer_gain_phase(config.filter, freq)
        measured_gain = b_z / b_s if b_s > 0.0 else float("nan")
        dphi = (psi_z - psi_s + np.pi) % (2.0 * np.pi) - np.pi
        payload.update({
            "freq": freq,
            "stimulus_amplitude": b_s,
            "zeta_amplitude": b_z,
            "measured_gain": measured_gain,
            "measured_phase": float(dphi),
            "predicted_gain": gain_pred,
            "predicted_phase": phase_pred,
        })
    _write_json(out / "analysis.json", payload)
    return EXIT_OK


def _svg_panel(xs: np.ndarray, ys: np.ndarray, sx: float, sy: float,
               label: str, offset_x: int) -> str:
    """One 400x400 panel with the path polyline and the source marker."""
    size, margin = 400, 30
    lo_x, hi_x = min(xs.min(), sx), max(xs.max(), sx)
    lo_y, hi_y = min(ys.min(), sy), max(ys.max(), sy)
    span = max(hi_x - lo_x, hi_y - lo_y, 1e-12)
    scale = (size - 2 * margin) / span

    def tx(x: float) -> float:
        return offset_x + margin + (x - lo_x) * scale

    def ty(y: float) -> float:
        return size - margin - (y - lo_y) * scale

    pts = " ".join(f"{tx(x):.2f},{ty(y):.2f}" for x, y in zip(xs, ys))
    return (
        f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="1"/>'
        f'<circle cx="{tx(sx):.2f}" cy="{ty(sy):.2f}" r="4" fill="#d62728"/>'
        f'<circle cx="{tx(xs[0]):.2f}" cy="{ty(ys[0]):.2f}" r="3" fill="#2ca02c"/>'
        f'<text x="{offset_x + margin}" y="20" font-size="14" '
        f'font-family="sans-serif">{label}</text>'
    )


def write_trajectory_svg(path: Path, traj: Trajectory, source: np.ndarray) -> None:
    """Static xy and xz projections of the 3D path, source in red."""
    body = (_svg_panel(traj.p[:, 0], traj.p[:, 1], source[0], source[1],
                       "xy", 0)
            + _svg_panel(traj.p[:, 0], traj.p[:, 2], source[0], source[2],
                         "xz", 400))
    svg = ('<svg xmlns="http://www.w3.org/2000/svg" width="800" height="400" '
           'viewBox="0 0 800 400"><rect width="800" height="400" fill="white"/>'
           + body + "</svg>\n")
    path.write_text(svg, encoding="utf-8")


def bundled_config_dict(name: str) -> dict:
    """Raw dict of a packaged configuration ('fig2' or 'planar')."""
    text = resources.files("chemoseek").joinpath(f"configs/{name}.json").read_text(
        encoding="utf-8")
    return json.loads(text)


def bundled_fig2_dict() -> dict:
    """Raw dict of the packaged radial-field demonstration config."""
    return bundled_config_dict("fig2")


def cmd_reproduce_fig2(args: argparse.Namespace) -> int:
    data = bundled_fig2_dict()
    _apply_flags(data, args)
    config = parse_config(data)
    out = Path(args.out)
    traj, metrics = _run_and_write(config, out)
    M = np.column_stack([traj.t, traj.s, traj.eta])
    np.savetxt(out / "eta_vs_stimulus.csv", M, fmt="%.17g", delimiter=",",
               header="t,s,eta", comments="")
    write_trajectory_svg(out / "trajectory.svg", traj, config.field.source)
    print(f"hit={_fmt(metrics['hit'])} t_hit={metrics['t_hit']:.6g} "
          f"min_dist={metrics['min_dist']:.6g} final_c={metrics['final_c']:.6g}")
    if traj.status != "ok":
        print(f"numerical abort at step {traj.abort_step}", file=sys.stderr)
        return EXIT_NUMERICAL
    pinned = not (args.planar or args.flip_omega_perp_1 or args.seed is not None)
    if pinned and not metrics["hit"]:
        print("regression: swimmer did not reach the source", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="override noise.seed from the config")
    p.add_argument("--planar", action="store_true",
                   help="zero the axial spin rates (planar motion)")
    p.add_argument("--flip-omega-perp-1", action="store_true",
                   help="negate the transverse feedback gain (descent tuning)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chemoseek",
        description="Closed-loop helical gradient climber: simulation, "
                    "sweeps, and analysis.")
    parser.add_argument("--version", action="version",
                        version=f"chemoseek {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one configuration")
    p.add_argument("--config", required=True, help="config JSON path")
    p.add_argument("--out", required=True, help="output directory")
    _add_common_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a parameter grid")
    p.add_argument("--config", required=True, help="base config JSON path")
    p.add_argument("--sweep", required=True,
                   help="JSON object mapping dotted config paths to value lists")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--parallelism", type=int, default=1,
                   help="worker processes (default 1)")
    _add_common_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="post-process a trajectory CSV")
    p.add_argument("--traj", required=True, help="trajectory.csv path")
    p.add_argument("--config", required=True,
                   help="config JSON the trajectory was produced with")
    p.add_argument("--kind", required=True,
                   choices=("ascent", "alignment", "quasi-steady"))
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("reproduce-fig2",
                       help="run the bundled radial-field demonstration")
    p.add_argument("--out", required=True, help="output directory")
    _add_common_flags(p)
    p.set_defaults(func=cmd_reproduce_fig2)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TrajectoryFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
