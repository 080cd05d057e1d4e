"""Command-line entry point: ``hotfall {groundstate,evolve,analyze,sweep,convert}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from .analysis import (
    PUBLISHED_BRAID_COUNTS,
    braid_count,
    detect_revivals,
    radial_profile,
)
from .config import ConfigError, RunConfig, set_path
from .grid import set_threads
from .initial import BracketError, ConvergenceError, analytic_seed, imaginary_time_ground_state, thomas_fermi_state
from .potential import sample_potential
from .propagate import NumericalError, evolve
from .snapshot import SnapshotError, read_snapshot, write_snapshot, write_vtk

log = logging.getLogger("hotfall")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

MANIFEST = "manifest.json"
GROUNDSTATE = "groundstate.snap"


class ManifestError(OSError):
    pass


def _versions() -> dict:
    return {
        "hotfall": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def _load_manifest(run_dir: Path) -> dict:
    path = run_dir / MANIFEST
    if not path.is_file():
        raise ManifestError(f"no manifest in {run_dir}")
    try:
        return json.loads(path.read_text())
    except ValueError as exc:
        raise ManifestError(f"corrupt manifest in {run_dir}: {exc}") from exc


def _save_manifest(run_dir: Path, manifest: dict) -> None:
    tmp = run_dir / (MANIFEST + ".part")
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    tmp.replace(run_dir / MANIFEST)


def _open_run(cfg: RunConfig, out: Path) -> tuple[Path, dict]:
    run_dir = Path(out) / cfg.hash
    run_dir.mkdir(parents=True, exist_ok=True)
    try:
        manifest = _load_manifest(run_dir)
    except ManifestError:
        manifest = {"config_hash": cfg.hash, "config": cfg.data, "versions": _versions(), "commands": {}}
        _save_manifest(run_dir, manifest)
    if manifest.get("config_hash") != cfg.hash:
        raise ManifestError(f"{run_dir} belongs to another configuration")
    return run_dir, manifest


def run_groundstate(cfg: RunConfig, out: Path, resume: bool = False) -> Path:
    run_dir, manifest = _open_run(cfg, out)
    done = manifest["commands"].get("groundstate", {})
    if resume and done.get("status") == "ok" and (run_dir / GROUNDSTATE).is_file():
        log.info("groundstate already complete in %s", run_dir)
        return run_dir

    t0 = time.perf_counter()
    sp, tp, grid = cfg.species(), cfg.trap(), cfg.grid()
    st = cfg.data["state"]
    pot = sample_potential(grid, tp)
    info: dict = {"kind": st["kind"], "dtau_ms": st["dtau_ms"], "tol": st["tol"], "max_iter": st["max_iter"]}
    rows = []

    def progress(it, e, res):
        rows.append((it, e, res))
        if it % 500 == 0:
            log.info("iteration %d  E=%.10g  residual=%.3e", it, e, res)

    try:
        if st["kind"] == "single_atom":
            res = imaginary_time_ground_state(
                pot, sp, 0.0, st["dtau_ms"], st["tol"], st["max_iter"],
                initial=analytic_seed(tp, sp, grid), callback=progress,
            )
            field = res.field
            info.update(energy=res.energy, iterations=res.iterations, residual=res.residual)
        else:
            tf = thomas_fermi_state(pot, sp, cfg.atom_number, cfg.scattering_length())
            field = tf.field
            info.update(chemical_potential=tf.mu, atom_number=tf.atom_number, g_int=tf.g_int)
            rows.append((0, tf.mu, 0.0))
            if st["refine"]:
                res = imaginary_time_ground_state(
                    pot, sp, tf.atom_number * tf.g_int, st["dtau_ms"], st["tol"], st["max_iter"],
                    initial=tf.field, callback=progress,
                )
                field = res.field
                info.update(energy=res.energy, iterations=res.iterations, residual=res.residual)
    except (ConvergenceError, NumericalError, BracketError) as exc:
        manifest["commands"]["groundstate"] = {"status": "failed", "error": str(exc), **info}
        _save_manifest(run_dir, manifest)
        _write_rows(run_dir / "convergence.csv", ("iteration", "energy", "residual"), rows)
        raise

    write_snapshot(run_dir / GROUNDSTATE, field, 0.0, cfg.hash, frame="trapped")
    _write_rows(run_dir / "convergence.csv", ("iteration", "energy", "residual"), rows)
    info.update(status="ok", wall_time_s=time.perf_counter() - t0, artifact=GROUNDSTATE)
    manifest["commands"]["groundstate"] = info
    _save_manifest(run_dir, manifest)
    return run_dir


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])


def run_evolve(cfg: RunConfig, out: Path, initial: Path | None = None, resume: bool = False) -> Path:
    run_dir, manifest = _open_run(cfg, out)
    done = manifest["commands"].get("evolve", {})
    if resume and done.get("status") == "ok":
        log.info("evolution already complete in %s", run_dir)
        return run_dir

    t0 = time.perf_counter()
    initial = Path(initial) if initial is not None else run_dir / GROUNDSTATE
    psi0, header = read_snapshot(initial)
    grid = cfg.grid()
    if psi0.grid != grid:
        raise ConfigError(f"snapshot grid {psi0.grid.as_dict()} does not match the configured grid")
    ecfg = cfg.evolution()
    snap_dir = run_dir / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    frame = "falling" if ecfg.gravity_mode == "falling_frame" else "lab"

    def sink(step, t, f):
        name = f"step_{step:07d}.snap"
        write_snapshot(snap_dir / name, f, t, cfg.hash, step=step, frame=frame)
        return f"snapshots/{name}"

    def progress(i, n):
        if i % 1000 == 0:
            log.info("step %d / %d", i, n)

    rec = evolve(psi0.normalize(), None, ecfg, snapshot_sink=sink, progress=progress)
    p0 = rec.peak_density[0]
    rows = [
        (s, t, n, e, p / p0, c)
        for s, t, n, e, p, c in rec.rows()
    ]
    _write_rows(run_dir / "scalars.csv", ("step", "time_ms", "norm", "energy", "peak_fraction", "com_z_um"), rows)
    manifest["commands"]["evolve"] = {
        "status": "ok",
        "initial": str(initial),
        "steps": ecfg.n_steps,
        "dt_ms": ecfg.dt,
        "mode": ecfg.gravity_mode,
        "g_eff": ecfg.g_eff,
        "max_norm_error": rec.max_norm_error,
        "boundary_contaminated": rec.contaminated,
        "contamination_time_ms": rec.contamination_time,
        "snapshots": rec.snapshots,
        "scalars": "scalars.csv",
        "wall_time_s": time.perf_counter() - t0,
    }
    _save_manifest(run_dir, manifest)
    return run_dir


def _read_scalars(path: Path):
    with open(path, newline="") as fh:
        return [(float(r["time_ms"]), float(r["peak_fraction"])) for r in csv.DictReader(fh)]


def run_analyze(run_dir: Path) -> dict:
    """Build report.json from whatever the run directory holds; never touches raw data."""
    run_dir = Path(run_dir)
    manifest = _load_manifest(run_dir)
    cfg = RunConfig.from_dict(manifest["config"])
    an = cfg.data["analysis"]
    ell = cfg.data["trap"]["ell"]
    report: dict = {"config_hash": manifest.get("config_hash"), "errors": [], "braids": [], "profiles": []}

    scalars = run_dir / "scalars.csv"
    if scalars.is_file():
        series = _read_scalars(scalars)
        report["final_peak_fraction"] = series[-1][1]
        if len(series) >= 5:
            rv = detect_revivals(series, an["smoothing_window"], an["prominence"])
            report["revivals"] = {
                "times_ms": rv.revival_times,
                "period_ms": rv.period,
                "period_uncertainty_ms": rv.period_uncertainty,
                "smoothing_window": an["smoothing_window"],
                "prominence": an["prominence"],
            }

    names = []
    if (run_dir / GROUNDSTATE).exists() or "groundstate" in manifest["commands"]:
        names.append(GROUNDSTATE)
    names += manifest["commands"].get("evolve", {}).get("snapshots", [])
    expected = 2 * abs(ell)
    published = PUBLISHED_BRAID_COUNTS.get(abs(ell))
    profile_names = set(names[:1] + names[-1:])
    for name in names:
        try:
            f, header = read_snapshot(run_dir / name)
        except (OSError, SnapshotError) as exc:
            report["errors"].append({"file": name, "error": str(exc)})
            continue
        for z in an["z_slices_um"]:
            try:
                bc = braid_count(f, z, an["braid_threshold"])
            except ValueError as exc:
                report["errors"].append({"file": name, "error": str(exc)})
                continue
            entry = {
                "snapshot": name,
                "time_ms": header.get("time_ms"),
                "z_um": z,
                "count": bc.count,
                "positions_rad": bc.angular_maxima_positions,
                "ring_radius_um": bc.radius,
                "strand_rule_count": expected,
            }
            if published is not None:
                entry["published_count"] = published
                entry["agrees_with_published"] = bc.count == published
            report["braids"].append(entry)
            if name in profile_names:
                prof = radial_profile(f, z)
                report["profiles"].append(
                    {"snapshot": name, "z_um": z, "rho_um": [p[0] for p in prof], "density": [p[1] for p in prof]}
                )
    trapped = [b for b in report["braids"] if b["snapshot"] == GROUNDSTATE]
    if trapped and published is not None:
        report["braid_discrepancy"] = {
            "ell": ell,
            "measured": trapped[0]["count"],
            "strand_rule": expected,
            "published": published,
            "note": "published strand count disagrees with the 2|l| rule; measured value reported as is",
        }
    (run_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    return report


def _sweep_job(args):
    data, out, resume = args
    cfg = RunConfig.from_dict(data)
    run_groundstate(cfg, Path(out), resume)
    run_dir = run_evolve(cfg, Path(out), resume=resume)
    run_analyze(run_dir)
    return str(run_dir)


def run_sweep(base: RunConfig, settings: list[str], out: Path, jobs: int = 1, resume: bool = False) -> list[dict]:
    axes = []
    for item in settings:
        if "=" not in item:
            raise ConfigError(f"--set expects key=v1,v2,..., got {item!r}")
        key, vals = item.split("=", 1)
        axes.append((key.strip(), [yaml.safe_load(v) for v in vals.split(",")]))
    combos = []
    for values in itertools.product(*[v for _, v in axes]):
        data = json.loads(json.dumps(base.data))
        for (key, _), v in zip(axes, values):
            set_path(data, key, v)
        RunConfig.from_dict(data)  # fail fast on bad combinations
        combos.append((dict(zip([k for k, _ in axes], values)), data))
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(data, str(out), resume) for _, data in combos]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            dirs = list(pool.map(_sweep_job, tasks))
    else:
        dirs = [_sweep_job(t) for t in tasks]
    summary = [{"parameters": p, "run_dir": d} for (p, _), d in zip(combos, dirs)]
    (out / "sweep.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hotfall", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=None, help="FFT worker threads (overrides HOTFALL_THREADS)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="YAML run configuration")
            p.add_argument("--out", default="runs", help="output root; runs go to <out>/<config hash>")
        p.add_argument("--resume", action="store_true", help="skip stages already completed")
        p.add_argument("--threads", type=int, default=argparse.SUPPRESS)

    common(sub.add_parser("groundstate", help="compute the trapped initial state"))
    p = sub.add_parser("evolve", help="release the state and propagate it")
    common(p)
    p.add_argument("--initial", default=None, help="initial snapshot (default: the run's ground state)")
    p = sub.add_parser("analyze", help="write report.json for a run directory")
    p.add_argument("run_dir")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    p = sub.add_parser("sweep", help="groundstate + evolve + analyze over a parameter grid")
    common(p)
    p.add_argument("--set", action="append", default=[], metavar="KEY=V1,V2", help="e.g. trap.waist_um=4,6,10")
    p.add_argument("--jobs", type=int, default=1, help="independent runs in parallel")
    p = sub.add_parser("convert", help="export a snapshot's density as a VTK volume")
    p.add_argument("snapshot")
    p.add_argument("output")
    return parser


def _fail(code: int, exc: BaseException) -> int:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(asctime)s %(message)s")
    if getattr(args, "threads", None) is not None:
        set_threads(args.threads)
    run_dir = None
    try:
        if args.command == "analyze":
            report = run_analyze(Path(args.run_dir))
            print(json.dumps({k: report[k] for k in ("revivals", "final_peak_fraction") if k in report}))
            return EXIT_OK
        if args.command == "convert":
            f, _ = read_snapshot(args.snapshot)
            write_vtk(args.output, f)
            return EXIT_OK
        cfg = RunConfig.load(args.config)
        out = Path(args.out)
        if args.command == "groundstate":
            run_dir = run_groundstate(cfg, out, args.resume)
        elif args.command == "evolve":
            run_dir = run_evolve(cfg, out, args.initial, args.resume)
        elif args.command == "sweep":
            run_sweep(cfg, args.set, out, args.jobs, args.resume)
            print(out / "sweep.json")
            return EXIT_OK
        print(run_dir)
        return EXIT_OK
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc)
    except (NumericalError, ConvergenceError, BracketError) as exc:
        code = _fail(EXIT_NUMERICAL, exc)
        if run_dir is None and getattr(args, "config", None):
            try:
                rd = Path(args.out) / RunConfig.load(args.config).hash
                (rd / "error.json").write_text(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
            except (OSError, ConfigError):
                pass
        return code
    except (OSError, SnapshotError) as exc:
        return _fail(EXIT_IO, exc)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
