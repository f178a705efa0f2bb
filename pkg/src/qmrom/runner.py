"""Orchestration of scenario runs: model construction, method building,
integration, reference caching and artifact writing.

Full-model reference trajectories are cached on disk keyed by a hash of the
resolved scenario config, so comparison sweeps reuse them across CLI
invocations.
"""

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .integrate import IntegratorConfig, hht_run
from .methods import build_method
from .metrics import ErrorReport, coupling_report, gre_m, reconstruct_amplitudes
from .rom import Trajectory
from .scenarios import METHODS, ScenarioConfig, build_model

__all__ = [
    "RunResult",
    "integrator_config",
    "run_method",
    "reference_trajectory",
    "compare_methods",
    "config_hash",
    "max_workers",
]

DIVERGENCE_GUARD_FACTOR = 1e3


@dataclass
class RunResult:
    config: ScenarioConfig
    method: str
    n_modes: int
    trajectory: Trajectory
    build: object
    lifted: np.ndarray  # (n_times, N) free-dof displacements
    elapsed: float
    gre: float = None


def integrator_config(config, model):
    icfg = config.integrator
    return IntegratorConfig(
        alpha=icfg["alpha"],
        dt=icfg["dt"],
        t_end=icfg["t_end"],
        dt_save=icfg.get("dt_save", icfg["dt"]),
        state_norm_ceiling=DIVERGENCE_GUARD_FACTOR * model.char_length,
    )


def config_hash(config):
    """Stable hash of the resolved scenario config (integration-relevant part)."""
    payload = json.dumps(config.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def run_method(config, method, n_modes=None, model=None):
    """Build and integrate one method; lifted displacements included."""
    model = model if model is not None else build_model(config)
    t0 = time.perf_counter()
    build = build_method(model, method, n_modes)
    trajectory = hht_run(build.system, integrator_config(config, model))
    lifted = np.array([build.system.lift(z) for z in trajectory.states])
    elapsed = time.perf_counter() - t0
    return RunResult(config, method, n_modes or 0, trajectory, build, lifted, elapsed)


def reference_trajectory(config, model=None, cache_dir=None):
    """Full-model run, reusing a cached trajectory when available."""
    model = model if model is not None else build_model(config)
    key = config_hash(config)
    cache_file = None
    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)
        cache_file = os.path.join(cache_dir, f"reference-{key}.npz")
        if os.path.exists(cache_file):
            data = np.load(cache_file, allow_pickle=False)
            traj = Trajectory(
                times=data["times"],
                states=data["states"],
                newton_iterations=data["newton_iterations"],
                status=str(data["status"]),
            )
            build = build_method(model, "full")
            return RunResult(
                config, "full", 0, traj, build, data["states"], float(data["elapsed"])
            )
    result = run_method(config, "full", model=model)
    if cache_file is not None and result.trajectory.completed:
        np.savez(
            cache_file,
            times=result.trajectory.times,
            states=result.trajectory.states,
            newton_iterations=result.trajectory.newton_iterations,
            status=result.trajectory.status,
            elapsed=result.elapsed,
        )
    return result


def _run_task(args):
    config_dict, method, n_modes = args
    config = ScenarioConfig.from_dict(config_dict)
    result = run_method(config, method, n_modes)
    # keep the payload picklable and small-ish
    return (
        method,
        n_modes,
        result.trajectory,
        result.lifted,
        result.build.reduced_dofs,
        result.elapsed,
    )


def max_workers(n_tasks):
    cap = os.environ.get("QMROM_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(limit, n_tasks))


def compare_methods(config, methods, mode_counts, cache_dir=None, parallel=True):
    """Run the requested method x mode-count matrix against one reference.

    Returns (ErrorReport, reference RunResult, dict of (method, n) -> row)
    where each row holds the trajectory, reduced dof count and timing.
    Diverged runs enter the report as the string "diverged".
    """
    if methods == "all":
        methods = [m for m in METHODS if m != "full"]
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    model = build_model(config)
    ref = reference_trajectory(config, model=model, cache_dir=cache_dir)
    if not ref.trajectory.completed:
        raise RuntimeError("reference (full) run diverged; cannot compare")
    M = model.mass()

    tasks = []
    for method in methods:
        if method in ("full", "linearized"):
            tasks.append((method, None))
        else:
            tasks.extend((method, n) for n in mode_counts)

    rows = {}
    results = []
    workers = max_workers(len(tasks)) if parallel else 1
    if workers > 1:
        payload = [(config.to_dict(), m, n) for m, n in tasks]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task, payload))
    else:
        for method, n in tasks:
            r = run_method(config, method, n, model=model)
            results.append(
                (method, n, r.trajectory, r.lifted, r.build.reduced_dofs, r.elapsed)
            )

    report = ErrorReport(
        scenario=config.name, dt=config.integrator["dt"], t_end=config.integrator["t_end"]
    )
    for method, n, traj, lifted, reduced_dofs, elapsed in results:
        n_key = n if n is not None else 0
        if traj.status == "completed":
            value = gre_m(lifted, ref.lifted, M)
        else:
            value = "diverged"
        report.set(method, n_key, value, reduced_dofs)
        rows[(method, n_key)] = {
            "trajectory": traj,
            "lifted": lifted,
            "reduced_dofs": reduced_dofs,
            "elapsed": elapsed,
        }
    return report, ref, rows


def coupling_diagnostic(config, n_modes, model=None):
    """Coupling score of an LB run with modes and their static derivatives.

    Runs LB-SMD with the requested mode count, reconstructs the modal and
    derivative amplitudes from the lifted trajectory and scores the
    quadratic-coupling discrepancy.
    """
    model = model if model is not None else build_model(config)
    result = run_method(config, "LB-SMD", n_modes, model=model)
    if not result.trajectory.completed:
        raise RuntimeError("LB-SMD run diverged; coupling diagnostic unavailable")
    q, q_pairs, pairs = reconstruct_amplitudes(
        result.lifted, result.build.V, result.build.theta, model.mass()
    )
    per_pair, score = coupling_report(q, q_pairs, pairs)
    return {
        "result": result,
        "q": q,
        "q_pairs": q_pairs,
        "pairs": pairs,
        "per_pair": per_pair,
        "score": score,
    }
