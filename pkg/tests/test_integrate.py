import numpy as np
import pytest

from qmrom.integrate import IntegratorConfig, hht_run, newton_solve
from qmrom.rom import LinearSecondOrderSystem, _SystemBase


class CubicSpring(_SystemBase):
    """SDOF with restoring force k x + c x^3, unit mass."""

    ndof = 1

    def __init__(self, k=1.0, c=1.0, F=None, g=None):
        self.k, self.c = k, c
        self.F = F
        self.g = g or (lambda t: 0.0)

    def external_force(self, t):
        return np.zeros(1) if self.F is None else self.F * self.g(t)

    def inertia_residual(self, z, zd, zdd):
        return zdd.copy()

    def force_residual(self, z, zd, t):
        return self.k * z + self.c * z**3 - self.external_force(t)

    def inertia_jacobians(self, z, zd, zdd):
        return np.eye(1), None, None

    def force_jacobians(self, z, zd, t):
        return None, np.array([[self.k + 3 * self.c * z[0] ** 2]])

    def lift(self, z):
        return z


def sdof(omega=2 * np.pi):
    return LinearSecondOrderSystem(M=[[1.0]], K=[[omega**2]])


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(alpha=0.5)
    with pytest.raises(ValueError):
        IntegratorConfig(dt=1e-3, dt_save=2.5e-3)
    with pytest.raises(ValueError):
        IntegratorConfig(dt=-1.0)


def test_newton_linear_converges_in_one_iteration():
    A = np.array([[2.0, 1.0], [1.0, 3.0]])
    b = np.array([1.0, -1.0])
    x, report = newton_solve(lambda x: A @ x - b, lambda x: A, np.zeros(2))
    assert report.converged
    assert report.iterations == 1
    assert np.allclose(A @ x, b)


def test_newton_scalar_cubic_against_bisection():
    # brute-force bisection oracle for x^3 + x - 1
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid**3 + mid - 1.0 > 0:
            hi = mid
        else:
            lo = mid
    root = 0.5 * (lo + hi)
    x, report = newton_solve(
        lambda x: np.array([x[0] ** 3 + x[0] - 1.0]),
        lambda x: np.array([[3.0 * x[0] ** 2 + 1.0]]),
        np.array([0.0]),
        rel_tol=0.0,
        abs_tol=1e-14,
    )
    assert report.converged
    assert abs(x[0] - root) <= 1e-12
    assert abs(x[0] - 0.6823278038280193) <= 1e-12


def test_newton_quadratic_convergence_order():
    errors = []
    root = 0.6823278038280193

    def residual(x):
        errors.append(abs(x[0] - root))
        return np.array([x[0] ** 3 + x[0] - 1.0])

    newton_solve(
        residual,
        lambda x: np.array([[3.0 * x[0] ** 2 + 1.0]]),
        np.array([0.3]),
        rel_tol=0.0,
        abs_tol=1e-13,
    )
    es = [e for e in errors if e > 1e-14]
    orders = [
        np.log(es[k + 1] / es[k]) / np.log(es[k] / es[k - 1])
        for k in range(1, len(es) - 1)
        if es[k] < 0.5 * es[k - 1]
    ]
    assert max(orders) >= 1.9


def test_newton_reports_singular_matrix():
    x, report = newton_solve(
        lambda x: np.array([1.0]), lambda x: np.array([[0.0]]), np.array([0.0])
    )
    assert not report.converged
    assert "singular" in report.message


def test_sdof_energy_conservation_alpha0():
    omega = 2 * np.pi
    T = 1.0
    system = sdof(omega)
    cfg = IntegratorConfig(alpha=0.0, dt=T / 1000, t_end=10 * T)
    traj = hht_run(system, cfg, initial_state=(np.array([1.0]), np.array([0.0])))
    assert traj.completed
    # velocity by central differences of the dense samples
    z = traj.states[:, 0]
    v = np.gradient(z, cfg.dt)
    energy = 0.5 * v**2 + 0.5 * omega**2 * z**2
    e_ref = 0.5 * omega**2
    drift = np.abs(energy[5:-5] - e_ref).max() / e_ref
    assert drift <= 1e-3


def test_sdof_amplitude_decays_with_numerical_damping():
    omega = 2 * np.pi
    system = sdof(omega)
    cfg = IntegratorConfig(alpha=0.1, dt=1.0 / 100, t_end=10.0)
    traj = hht_run(system, cfg, initial_state=(np.array([1.0]), np.array([0.0])))
    z = traj.states[:, 0]
    # successive oscillation peaks must strictly decay
    peaks = [
        z[i] for i in range(1, len(z) - 1) if z[i] > z[i - 1] and z[i] > z[i + 1]
    ]
    assert len(peaks) >= 8
    assert all(b < a for a, b in zip(peaks, peaks[1:]))


def test_alpha0_matches_trapezoidal_update_matrix():
    omega = 3.0
    dt = 0.01
    system = sdof(omega)
    cfg = IntegratorConfig(alpha=0.0, dt=dt, t_end=dt)
    # analytic trapezoidal one-step map on (z, zd)
    S = np.array([[0.0, 1.0], [-(omega**2), 0.0]])
    A = np.linalg.solve(np.eye(2) - dt / 2 * S, np.eye(2) + dt / 2 * S)
    for state0 in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
        traj = hht_run(system, cfg, initial_state=(state0[:1], state0[1:]))
        z1 = traj.states[-1, 0]
        expected = (A @ state0)[0]
        assert abs(z1 - expected) <= 1e-10


def test_runs_are_deterministic():
    system = CubicSpring(k=(2 * np.pi) ** 2, c=5.0, F=np.array([1.0]), g=np.sin)
    cfg = IntegratorConfig(alpha=0.1, dt=1e-3, t_end=0.5)
    a = hht_run(system, cfg)
    b = hht_run(system, cfg)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.times, b.times)


def test_second_order_consistency_on_nonlinear_run():
    # halving dt must shrink the terminal error against a dt/8 reference by
    # at least 3.5x when alpha = 0
    system = CubicSpring(k=(2 * np.pi) ** 2, c=200.0, F=np.array([30.0]), g=np.sin)
    t_end = 0.5

    def terminal(dt):
        cfg = IntegratorConfig(alpha=0.0, dt=dt, t_end=t_end, newton_rel_tol=1e-12,
                               newton_abs_tol=1e-13)
        return hht_run(system, cfg).states[-1, 0]

    dt = 1e-2
    ref = terminal(dt / 8)
    err1 = abs(terminal(dt) - ref)
    err2 = abs(terminal(dt / 2) - ref)
    assert err1 / err2 >= 3.5


def test_divergence_is_a_result_not_an_error():
    # negative cubic spring: finite-time blowup under forcing
    system = CubicSpring(k=1.0, c=-50.0, F=np.array([10.0]), g=lambda t: 1.0)
    cfg = IntegratorConfig(alpha=0.0, dt=1e-2, t_end=5.0)
    traj = hht_run(system, cfg)
    assert traj.status == "diverged"
    assert traj.diverged_at is not None
    assert np.all(np.isfinite(traj.states))
    assert traj.times[-1] < 5.0


def test_norm_ceiling_flags_divergence():
    system = LinearSecondOrderSystem(M=[[1.0]], K=[[1.0]], F=np.array([1e9]),
                                     g=lambda t: 1.0)
    cfg = IntegratorConfig(alpha=0.0, dt=1e-2, t_end=1.0, state_norm_ceiling=1e3)
    traj = hht_run(system, cfg)
    assert traj.status == "diverged"


def test_save_grid_includes_t0_and_is_strictly_increasing():
    system = sdof()
    cfg = IntegratorConfig(alpha=0.0, dt=1e-3, t_end=0.02, dt_save=5e-3)
    traj = hht_run(system, cfg, initial_state=(np.array([1.0]), np.array([0.0])))
    assert traj.times[0] == 0.0
    assert len(traj.times) == 5
    assert np.all(np.diff(traj.times) > 0)


def test_initial_acceleration_from_rest_residual():
    # M zdd0 = g(0) F - K z0 with z0 = zd0 = 0 and g(0) nonzero
    system = LinearSecondOrderSystem(M=[[2.0]], K=[[5.0]], F=np.array([3.0]),
                                     g=lambda t: np.cos(t))
    cfg = IntegratorConfig(alpha=0.0, dt=1e-4, t_end=1e-4)
    traj = hht_run(system, cfg)
    assert traj.completed
    # reproduce one exact trapezoidal step from (0, 0) with zdd0 = 1.5
    zdd0 = 3.0 / 2.0
    assert traj.states[-1, 0] == pytest.approx(
        # Newmark with beta=1/4, gamma=1/2 from rest
        0.25 * cfg.dt**2 * (zdd0 + _newmark_zdd1(system, cfg, zdd0)),
        rel=1e-8,
    )


def _newmark_zdd1(system, cfg, zdd0):
    # closed-form acceleration after one average-acceleration step from rest
    dt = cfg.dt
    m, k, f = 2.0, 5.0, 3.0 * np.cos(dt)
    # z1 = dt^2/4 (zdd0 + zdd1), zd1 = dt/2 (zdd0 + zdd1)
    return (f - k * dt**2 / 4 * zdd0) / (m + k * dt**2 / 4)
