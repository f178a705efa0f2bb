"""Implicit HHT-alpha time integration over the second-order residual
interface, with full-Newton iterations.

The scheme weights the force terms of consecutive steps with (1 - a) and a,
keeps the inertia terms at the new step, and uses the Newmark parameters
beta = (1 + a)^2 / 4, gamma = 1/2 + a.  a = 0 recovers the trapezoidal rule;
a in (0, 1/3] adds high-frequency numerical damping.

Numerical divergence is a result, not an error: the returned Trajectory is
truncated at the last completed save time and carries status "diverged".
"""

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as la
import scipy.sparse as sps
import scipy.sparse.linalg as spsla

from .rom import Trajectory

__all__ = ["IntegratorConfig", "NewtonReport", "newton_solve", "hht_run"]


@dataclass(frozen=True)
class IntegratorConfig:
    alpha: float = 0.1
    dt: float = 1e-4
    t_end: float = 0.2
    dt_save: float = None  # defaults to dt
    newton_rel_tol: float = 1e-6
    newton_abs_tol: float = 1e-9
    newton_max_iter: int = 20
    state_norm_ceiling: float = None  # lift(z) infinity-norm guard

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0 / 3.0:
            raise ValueError("alpha must lie in [0, 1/3]")
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        save = self.dt_save if self.dt_save is not None else self.dt
        ratio = save / self.dt
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("dt_save must be a positive integer multiple of dt")

    @property
    def save_every(self):
        save = self.dt_save if self.dt_save is not None else self.dt
        return int(round(save / self.dt))

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))


@dataclass
class NewtonReport:
    converged: bool
    iterations: int
    residual_norm: float
    message: str = ""


def _solve_linear(J, rhs):
    if sps.issparse(J):
        return spsla.splu(J.tocsc()).solve(rhs)
    J = np.atleast_2d(J)
    return la.solve(J, rhs)


def newton_solve(residual, jacobian, x0, rel_tol=1e-6, abs_tol=1e-9, max_iter=20,
                 scale=None):
    """Full-step Newton iteration.

    Converged when ||r|| <= max(abs_tol, rel_tol * s) with s the given scale
    (defaults to the initial residual norm).  Returns (x, NewtonReport); a
    singular iteration matrix or non-finite state yields a non-converged
    report instead of raising.
    """
    x = np.array(x0, dtype=float)
    r = np.atleast_1d(residual(x))
    r0_norm = np.linalg.norm(r)
    s = r0_norm if scale is None else scale
    tol = max(abs_tol, rel_tol * s)
    iterations = 0
    while np.linalg.norm(r) > tol:
        if iterations >= max_iter:
            return x, NewtonReport(False, iterations, float(np.linalg.norm(r)),
                                   "maximum iterations reached")
        try:
            with np.errstate(divide="ignore", invalid="ignore"):
                dx = _solve_linear(jacobian(x), -r)
        except (la.LinAlgError, RuntimeError) as exc:
            return x, NewtonReport(False, iterations, float(np.linalg.norm(r)),
                                   f"singular iteration matrix: {exc}")
        if not np.all(np.isfinite(dx)):
            return x, NewtonReport(False, iterations, float(np.linalg.norm(r)),
                                   "singular iteration matrix: non-finite update")
        x = x + dx
        if not np.all(np.isfinite(x)):
            return x, NewtonReport(False, iterations + 1, np.inf, "non-finite state")
        r = np.atleast_1d(residual(x))
        iterations += 1
        if not np.all(np.isfinite(r)):
            return x, NewtonReport(False, iterations, np.inf, "non-finite residual")
    return x, NewtonReport(True, iterations, float(np.linalg.norm(r)))


# Tangent projectors more ill-conditioned than this are reported as a
# diagnostic event on the trajectory.
TANGENT_CONDITION_FLOOR = 1e-8


def hht_run(system, config, initial_state=None):
    """March the system from rest (or the given (z, zd)) to t_end.

    States are saved every dt_save including t = 0.  Newton failure or a
    norm-ceiling breach terminates the run with status "diverged at t"; the
    trajectory keeps everything saved before the failure.
    """
    a = config.alpha
    beta = 0.25 * (1.0 + a) ** 2
    gamma = 0.5 + a
    dt = config.dt
    n = system.ndof

    if initial_state is None:
        z = np.zeros(n)
        zd = np.zeros(n)
    else:
        z, zd = (np.array(v, dtype=float) for v in initial_state)

    # initial acceleration from the residual at t = 0
    A0, _, _ = system.inertia_jacobians(z, zd, np.zeros(n))
    zdd = _solve_linear(A0, -np.asarray(system.force_residual(z, zd, 0.0)))

    times = [0.0]
    states = [z.copy()]
    iters = [0]
    diagnostics = []
    force_scale = max(system.external_force_norm(0.0), 0.0)

    status, diverged_at, message = "completed", None, ""
    for step in range(1, config.n_steps + 1):
        t_old, t_new = (step - 1) * dt, step * dt
        z_old, zd_old, zdd_old = z, zd, zdd
        rf_old = np.asarray(system.force_residual(z_old, zd_old, t_old))

        # Newmark predictor (constant-displacement start, zero acceleration)
        z = z_old + dt * zd_old + dt * dt * (0.5 - beta) * zdd_old
        zd = zd_old + dt * (1.0 - gamma) * zdd_old
        zdd = np.zeros(n)

        force_scale = max(force_scale, system.external_force_norm(t_new))
        tol = max(config.newton_abs_tol, config.newton_rel_tol * force_scale)

        converged = False
        for it in range(config.newton_max_iter + 1):
            r = (
                np.asarray(system.inertia_residual(z, zd, zdd))
                + (1.0 - a) * np.asarray(system.force_residual(z, zd, t_new))
                + a * rf_old
            )
            if not np.all(np.isfinite(r)):
                message = "non-finite residual"
                break
            if np.linalg.norm(r) <= tol:
                converged = True
                break
            if it == config.newton_max_iter:
                message = "Newton did not converge"
                break
            Ai, Bi, Ci = system.inertia_jacobians(z, zd, zdd)
            Bf, Cf = system.force_jacobians(z, zd, t_new)
            J = Ai / (beta * dt * dt)
            for part, w in ((Bi, 1.0), (Bf, 1.0 - a)):
                if part is not None:
                    J = J + (w * gamma / (beta * dt)) * part
            for part, w in ((Ci, 1.0), (Cf, 1.0 - a)):
                if part is not None:
                    J = J + w * part
            try:
                dz = _solve_linear(J, -r)
            except (la.LinAlgError, RuntimeError) as exc:
                message = f"singular iteration matrix: {exc}"
                break
            z = z + dz
            zd = zd + (gamma / (beta * dt)) * dz
            zdd = zdd + dz / (beta * dt * dt)
            if not np.all(np.isfinite(z)):
                message = "non-finite state"
                break

        if not converged:
            status, diverged_at = "diverged", t_new
            break

        if config.state_norm_ceiling is not None:
            if np.abs(system.lift(z)).max() > config.state_norm_ceiling:
                status, diverged_at = "diverged", t_new
                message = "state norm ceiling breached"
                break

        cond = system.tangent_condition(z)
        if cond is not None and cond < TANGENT_CONDITION_FLOOR:
            diagnostics.append(
                {"t": t_new, "event": "ill-conditioned tangent", "sv_ratio": cond}
            )

        if step % config.save_every == 0:
            times.append(t_new)
            states.append(z.copy())
            iters.append(it)

    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        newton_iterations=np.array(iters, dtype=int),
        status=status,
        diverged_at=diverged_at,
        diagnostics=diagnostics,
    )
