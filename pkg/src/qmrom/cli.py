"""Command-line front end.

Subcommands:
    run       integrate one scenario with one method, write trajectory,
              probe trace, error report and figures
    compare   sweep a method x mode-count matrix against the full reference
    modes     eigenfrequency table and mode-shape export
    coupling  quadratic-coupling diagnostic from a linear-basis run

Exit codes: 0 completed, 1 configuration error, 2 diverged run (artifacts
are still written).  QMROM_THREADS caps the parallelism of compare sweeps.
"""

import argparse
import csv
import json
import os
import sys
import time

import numpy as np
import scipy

from . import __version__, plotting
from .metrics import gre_m
from .numerics import eig_gsym
from .runner import (
    compare_methods,
    coupling_diagnostic,
    config_hash,
    reference_trajectory,
    run_method,
)
from .scenarios import METHODS, build_model, builtin_scenarios, load_config

__all__ = ["main"]


class _UsageError(Exception):
    pass


def _resolve_config(args):
    if getattr(args, "config", None):
        return load_config(args.config)
    scenarios = builtin_scenarios()
    if args.scenario not in scenarios:
        raise _UsageError(
            f"unknown scenario {args.scenario!r}; available: {', '.join(sorted(scenarios))}"
        )
    return scenarios[args.scenario]


def _parse_probe(spec):
    try:
        x, y, comp = spec.split(",")
        return {"x": float(x), "y": float(y), "component": int(comp)}
    except ValueError as exc:
        raise _UsageError(f"bad probe spec {spec!r}; expected 'x,y,component'") from exc


def _probe_index(model, probe):
    target = np.array([probe["x"], probe["y"]])
    node = int(np.argmin(np.linalg.norm(model.mesh.nodes - target, axis=1)))
    comp = int(probe["component"])
    if not 0 <= comp < model.kernel.ndof_per_node:
        raise _UsageError(f"probe component {comp} out of range")
    idx = model.dof_index(node, comp)
    if idx < 0:
        raise _UsageError("probe dof is constrained; pick another point")
    return node, idx


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(header)
        writer.writerows(rows)


def _write_trajectory_csv(path, trajectory):
    n = trajectory.states.shape[1] if trajectory.states.size else 0
    header = ["t"] + [f"z_{i + 1}" for i in range(n)]
    rows = (
        [f"{t:.10g}"] + [f"{v:.10g}" for v in state]
        for t, state in zip(trajectory.times, trajectory.states)
    )
    _write_csv(path, header, rows)


def _write_snapshots(path, times, lifted, model):
    """Full-field displacement snapshots, one block per save time."""
    with open(path, "w") as stream:
        stream.write("# full-field snapshots: time then one 'node ux uy' line per node\n")
        for t, u in zip(times, lifted):
            stream.write(f"time {t:.10g}\n")
            full = model.expand(u)
            per_node = full.reshape(-1, model.kernel.ndof_per_node)
            for node, comps in enumerate(per_node):
                stream.write(f"{node} " + " ".join(f"{c:.10g}" for c in comps) + "\n")


def _metadata(out_dir, config, extra):
    meta = {
        "qmrom_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "config": config.to_dict(),
        "config_hash": config_hash(config),
    }
    meta.update(extra)
    path = os.path.join(out_dir, "run_metadata.json")
    with open(path, "w") as stream:
        json.dump(meta, stream, indent=2)
    return path


def cmd_run(args):
    config = _resolve_config(args)
    if args.method not in METHODS:
        raise _UsageError(f"unknown method {args.method!r}; valid: {', '.join(METHODS)}")
    n_modes = args.modes
    if args.method not in ("full", "linearized") and (n_modes is None or n_modes < 1):
        raise _UsageError(f"method {args.method} needs --modes N")
    os.makedirs(args.out, exist_ok=True)
    model = build_model(config)
    probe = _parse_probe(args.probe) if args.probe else config.probe
    probe_node, probe_idx = _probe_index(model, probe)

    t0 = time.perf_counter()
    result = run_method(config, args.method, n_modes, model=model)
    traj = result.trajectory
    files = []

    traj_path = os.path.join(args.out, "trajectory.csv")
    _write_trajectory_csv(traj_path, traj)
    files.append(traj_path)

    probe_series = result.lifted[:, probe_idx]
    probe_path = os.path.join(args.out, "probe.csv")
    _write_csv(
        probe_path,
        ["t", "value"],
        ([f"{t:.10g}", f"{v:.10g}"] for t, v in zip(traj.times, probe_series)),
    )
    files.append(probe_path)

    series = {args.method: (traj.times, probe_series)}
    gre = None
    if args.method != "full" and not args.no_gre:
        ref = reference_trajectory(config, model=model, cache_dir=_cache_dir(args))
        ref_series = ref.lifted[:, probe_idx]
        series["full"] = (ref.trajectory.times, ref_series)
        if traj.completed:
            gre = gre_m(result.lifted, ref.lifted, model.mass())
        err_path = os.path.join(args.out, "error_report.csv")
        _write_csv(
            err_path,
            ["scenario", "method", "n_modes", "reduced_dofs", "gre_m"],
            [
                [
                    config.name,
                    args.method,
                    n_modes or 0,
                    result.build.reduced_dofs,
                    f"{gre:.10g}" if gre is not None else "diverged",
                ]
            ],
        )
        files.append(err_path)

    fig_path = os.path.join(args.out, "probe.png")
    plotting.probe_figure(
        fig_path, traj.times, series, f"{config.name}: probe at node {probe_node}"
    )
    files.append(fig_path)

    if result.build.singular_values is not None:
        sv_path = os.path.join(args.out, "deflation_singular_values.csv")
        _write_csv(
            sv_path,
            ["index", "singular_value"],
            ([i, f"{s:.10g}"] for i, s in enumerate(result.build.singular_values)),
        )
        files.append(sv_path)
        svfig = os.path.join(args.out, "deflation_singular_values.png")
        plotting.singular_values_figure(
            svfig, result.build.singular_values, 1e-8, f"{config.name}: deflation spectrum"
        )
        files.append(svfig)

    if args.snapshots:
        snap_path = os.path.join(args.out, "snapshots.txt")
        _write_snapshots(snap_path, traj.times, result.lifted, model)
        files.append(snap_path)

    status = traj.status if traj.completed else f"diverged at {traj.diverged_at:.6g} s"
    exit_code = 0 if traj.completed else 2
    meta_extra = {
        "command": "run",
        "method": args.method,
        "n_modes": n_modes or 0,
        "reduced_dofs": result.build.reduced_dofs,
        "status": status,
        "exit_code": exit_code,
        "gre_m": gre,
        "probe": probe,
        "probe_node": probe_node,
        "timings": {"run_s": result.elapsed, "total_s": time.perf_counter() - t0},
        "files": [os.path.basename(f) for f in files],
    }
    _metadata(args.out, config, meta_extra)
    print(f"{config.name} / {args.method}: {status}" + (f", GRE_M = {gre:.4e}" if gre is not None else ""))
    return exit_code


def _cache_dir(args):
    return args.cache if getattr(args, "cache", None) else os.path.join(args.out, "reference_cache")


def cmd_compare(args):
    config = _resolve_config(args)
    methods = "all" if args.methods == "all" else [m.strip() for m in args.methods.split(",")]
    mode_counts = [int(n) for n in args.modes.split(",")]
    os.makedirs(args.out, exist_ok=True)
    t0 = time.perf_counter()
    report, ref, rows = compare_methods(
        config,
        methods,
        mode_counts,
        cache_dir=_cache_dir(args),
        parallel=not args.serial,
    )
    files = []
    report_path = os.path.join(args.out, "error_report.csv")
    with open(report_path, "w") as stream:
        report.to_csv(stream)
    files.append(report_path)

    fig_path = os.path.join(args.out, "error_overview.png")
    plotting.error_overview_figure(fig_path, report, f"{config.name}: error overview")
    files.append(fig_path)

    meta_extra = {
        "command": "compare",
        "methods": methods if isinstance(methods, list) else list(METHODS),
        "mode_counts": mode_counts,
        "cells": {
            f"{m}|{n}": (v if isinstance(v, str) else float(v))
            for (m, n), v in report.cells.items()
        },
        "reduced_dofs": {f"{m}|{n}": d for (m, n), d in report.reduced_dofs.items()},
        "status": "completed",
        "exit_code": 0,
        "timings": {
            "total_s": time.perf_counter() - t0,
            "per_run_s": {f"{m}|{n}": rows[(m, n)]["elapsed"] for (m, n) in rows},
        },
        "files": [os.path.basename(f) for f in files],
    }
    _metadata(args.out, config, meta_extra)
    print(f"wrote {report_path}")
    for (m, n), v in sorted(report.cells.items()):
        cell = v if isinstance(v, str) else f"{v:.4e}"
        print(f"  {m:18s} n={n:<3d} dofs={report.reduced_dofs[(m, n)]:<5d} {cell}")
    return 0


def cmd_modes(args):
    config = _resolve_config(args)
    os.makedirs(args.out, exist_ok=True)
    model = build_model(config)
    K0 = model.stiffness(np.zeros(model.n_free))
    omega2, phi = eig_gsym(K0, model.mass(), args.n)
    freqs = np.sqrt(omega2) / (2.0 * np.pi)
    files = []
    freq_path = os.path.join(args.out, "modes.csv")
    _write_csv(
        freq_path,
        ["mode", "frequency_hz", "omega_rad_s"],
        ([i + 1, f"{f:.10g}", f"{2 * np.pi * f:.10g}"] for i, f in enumerate(freqs)),
    )
    files.append(freq_path)

    shapes_path = os.path.join(args.out, "mode_shapes.csv")
    full = np.column_stack([model.expand(phi[:, i]) for i in range(phi.shape[1])])
    per_node = model.kernel.ndof_per_node
    header = ["node", "x", "y"] + [
        f"mode{i + 1}_c{c}" for i in range(phi.shape[1]) for c in range(per_node)
    ]
    rows = []
    for node in range(model.mesh.n_nodes):
        row = [node, f"{model.mesh.nodes[node, 0]:.10g}", f"{model.mesh.nodes[node, 1]:.10g}"]
        for i in range(phi.shape[1]):
            for c in range(per_node):
                row.append(f"{full[per_node * node + c, i]:.10g}")
        rows.append(row)
    _write_csv(shapes_path, header, rows)
    files.append(shapes_path)

    if per_node == 2:
        fig_path = os.path.join(args.out, "mode_shapes.png")
        plotting.mode_shapes_figure(
            fig_path, model.mesh, full, freqs, title=f"{config.name}: mode shapes"
        )
        files.append(fig_path)

    _metadata(
        args.out,
        config,
        {
            "command": "modes",
            "n": args.n,
            "frequencies_hz": [float(f) for f in freqs],
            "status": "completed",
            "exit_code": 0,
            "files": [os.path.basename(f) for f in files],
        },
    )
    for i, f in enumerate(freqs):
        print(f"mode {i + 1}: {f:10.3f} Hz")
    return 0


def cmd_coupling(args):
    config = _resolve_config(args)
    os.makedirs(args.out, exist_ok=True)
    diag = coupling_diagnostic(config, args.modes)
    traj = diag["result"].trajectory
    files = []
    path = os.path.join(args.out, "coupling_report.csv")
    header = ["pair_i", "pair_j", "discrepancy"]
    rows = [[i + 1, j + 1, f"{d:.10g}"] for (i, j), d in sorted(diag["per_pair"].items())]
    rows.append(["summary", "", f"{diag['score']:.10g}"])
    _write_csv(path, header, rows)
    files.append(path)

    fig_path = os.path.join(args.out, "coupling.png")
    plotting.coupling_figure(
        fig_path,
        traj.times,
        diag["q"],
        diag["q_pairs"],
        diag["pairs"],
        f"{config.name}: quadratic-coupling diagnostic (score {diag['score']:.3g})",
    )
    files.append(fig_path)
    _metadata(
        args.out,
        config,
        {
            "command": "coupling",
            "n_modes": args.modes,
            "score": diag["score"],
            "status": "completed",
            "exit_code": 0,
            "files": [os.path.basename(f) for f in files],
        },
    )
    print(f"{config.name}: coupling score {diag['score']:.6g}")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="qmrom",
        description="Quadratic-manifold and linear-basis model reduction experiments",
    )
    parser.add_argument("--version", action="version", version=f"qmrom {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--scenario", help="built-in scenario name")
        group.add_argument("--config", help="path to a scenario config JSON file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--cache", help="reference-trajectory cache directory")

    p_run = sub.add_parser("run", help="integrate one scenario with one method")
    add_common(p_run)
    p_run.add_argument("--method", required=True, help=f"one of: {', '.join(METHODS)}")
    p_run.add_argument("--modes", type=int, help="number of linear modes")
    p_run.add_argument("--probe", help="probe point 'x,y,component'")
    p_run.add_argument("--snapshots", action="store_true", help="write full-field snapshots")
    p_run.add_argument("--no-gre", action="store_true", help="skip the reference run and error")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="sweep methods x mode counts")
    add_common(p_cmp)
    p_cmp.add_argument("--methods", required=True, help="comma list or 'all'")
    p_cmp.add_argument("--modes", required=True, help="comma list of mode counts")
    p_cmp.add_argument("--serial", action="store_true", help="disable parallel runs")
    p_cmp.set_defaults(func=cmd_compare)

    p_modes = sub.add_parser("modes", help="eigenfrequency table and mode shapes")
    add_common(p_modes)
    p_modes.add_argument("-n", type=int, default=3, help="number of modes")
    p_modes.set_defaults(func=cmd_modes)

    p_coup = sub.add_parser("coupling", help="quadratic-coupling diagnostic")
    add_common(p_coup)
    p_coup.add_argument("--modes", type=int, default=5, help="number of linear modes")
    p_coup.set_defaults(func=cmd_coupling)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
