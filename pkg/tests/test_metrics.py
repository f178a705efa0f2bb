import io

import numpy as np
import pytest

from qmrom.basis import QuadTensor, pair_list
from qmrom.metrics import (
    ErrorReport,
    coupling_report,
    gre_m,
    gre_m_trajectories,
    reconstruct_amplitudes,
)
from qmrom.rom import QuadraticManifold, Trajectory


def random_spd_mass(N, rng):
    A = rng.standard_normal((N, N))
    return A @ A.T / N + np.eye(N)


@pytest.fixture
def setup():
    rng = np.random.default_rng(0)
    N, T = 30, 12
    M = random_spd_mass(N, rng)
    u_ref = rng.standard_normal((T, N))
    return rng, M, u_ref


def test_gre_identical_is_zero(setup):
    _, M, u_ref = setup
    assert gre_m(u_ref, u_ref, M) == 0.0


def test_gre_zero_test_is_one(setup):
    _, M, u_ref = setup
    assert gre_m(np.zeros_like(u_ref), u_ref, M) == pytest.approx(1.0, rel=1e-12)


def test_gre_scaled_test_gives_delta(setup):
    _, M, u_ref = setup
    for delta in (0.3, -0.2, 1e-6):
        val = gre_m((1.0 + delta) * u_ref, u_ref, M)
        assert val == pytest.approx(abs(delta), rel=1e-9)


def test_gre_invariant_under_common_rescaling(setup):
    rng, M, u_ref = setup
    u_test = u_ref + 0.1 * rng.standard_normal(u_ref.shape)
    v1 = gre_m(u_test, u_ref, M)
    v2 = gre_m(7.5 * u_test, 7.5 * u_ref, M)
    assert v1 == pytest.approx(v2, rel=1e-12)


def test_gre_linear_in_small_perturbations(setup):
    rng, M, u_ref = setup
    w = rng.standard_normal(u_ref.shape)
    vals = [gre_m(u_ref + d * w, u_ref, M) for d in (1e-3, 1e-6)]
    assert vals[0] / vals[1] == pytest.approx(1e3, rel=1e-6)


def test_gre_shape_mismatch(setup):
    _, M, u_ref = setup
    with pytest.raises(ValueError):
        gre_m(u_ref[:-1], u_ref, M)


def test_gre_zero_reference(setup):
    _, M, u_ref = setup
    with pytest.raises(ValueError):
        gre_m(u_ref, np.zeros_like(u_ref), M)


def test_gre_trajectory_grid_check(setup):
    _, M, u_ref = setup

    class Identity:
        def lift(self, z):
            return z

    t1 = Trajectory(np.arange(3.0), u_ref[:3], np.zeros(3, int))
    t2 = Trajectory(np.arange(3.0) + 0.5, u_ref[:3], np.zeros(3, int))
    with pytest.raises(ValueError):
        gre_m_trajectories(t1, t2, Identity(), Identity(), M)


def synthetic_manifold(rng, N=40, n=3):
    V = np.linalg.qr(rng.standard_normal((N, n)))[0]
    n_pairs = n * (n + 1) // 2
    cols = 0.3 * rng.standard_normal((N, n_pairs))
    theta = QuadTensor(cols, n)
    return QuadraticManifold(V, theta), V, theta


def test_reconstruct_pure_linear_combination(setup):
    rng, M, _ = setup
    man, V, theta = synthetic_manifold(rng, N=30)
    T = 8
    zs = rng.standard_normal((T, 3))
    u = zs @ V.T
    q, q_pairs, pairs = reconstruct_amplitudes(u, V, theta, M)
    assert np.abs(q - zs).max() <= 1e-10
    assert np.abs(q_pairs).max() <= 1e-10


def test_reconstruct_quadratic_map_amplitudes(setup):
    rng, M, _ = setup
    man, V, theta = synthetic_manifold(rng, N=30)
    T = 8
    zs = rng.standard_normal((T, 3))
    u = np.array([man.gamma(z) for z in zs])
    q, q_pairs, pairs = reconstruct_amplitudes(u, V, theta, M)
    assert np.abs(q - zs).max() <= 1e-8
    for col, (i, j) in enumerate(pairs):
        expected = 0.5 * zs[:, i] ** 2 if i == j else zs[:, i] * zs[:, j]
        assert np.abs(q_pairs[:, col] - expected).max() <= 1e-8


def test_reconstruct_rejects_rank_deficiency(setup):
    rng, M, _ = setup
    man, V, theta = synthetic_manifold(rng, N=30)
    theta.columns[:, 1] = V[:, 0]  # duplicate a mode into the pair columns
    theta.columns[:, 2] = V[:, 0]
    with pytest.raises(ValueError, match="rank deficient"):
        reconstruct_amplitudes(rng.standard_normal((4, 30)), V, theta, M)


def test_coupling_score_on_synthesized_manifold(setup):
    rng, M, _ = setup
    man, V, theta = synthetic_manifold(rng, N=30)
    zs = rng.standard_normal((20, 3))
    u = np.array([man.gamma(z) for z in zs])
    q, q_pairs, pairs = reconstruct_amplitudes(u, V, theta, M)
    _, score = coupling_report(q, q_pairs, pairs)
    assert score <= 1e-6


def test_coupling_score_uncorrelated_inputs():
    rng = np.random.default_rng(5)
    T, n = 400, 3
    q = rng.standard_normal((T, n))
    pairs = pair_list(n)
    q_pairs = rng.standard_normal((T, len(pairs)))
    _, score = coupling_report(q, q_pairs, pairs)
    assert 0.5 <= score <= 1.5


def test_coupling_floor_prevents_division_by_zero():
    pairs = pair_list(2)
    q = np.zeros((5, 2))
    q_pairs = np.zeros((5, len(pairs)))
    per_pair, score = coupling_report(q, q_pairs, pairs)
    assert score == 0.0


def test_error_report_csv_layout():
    report = ErrorReport(scenario="s", dt=1e-4, t_end=0.1)
    report.set("QM-SMD", 5, 1.5e-3, 5)
    report.set("QM-SMD", 10, "diverged", 10)
    report.set("LB-SMD", 5, 2.0e-4, 17)
    buf = io.StringIO()
    report.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "n_modes,LB-SMD,QM-SMD"
    assert lines[2].startswith("5,2.000000e-04 (17),1.500000e-03 (5)")
    assert "diverged (10)" in lines[3]
