import numpy as np
import pytest

from qmrom.basis import static_derivatives
from qmrom.fem import Material, assemble_mass
from qmrom.numerics import eig_gsym
from qmrom.rom import QuadraticManifold
from qmrom.vkbeam import vk_beam_model

MAT = Material(70e9, 0.3, 2700.0, 1.0)


@pytest.fixture(scope="module")
def beam():
    return vk_beam_model(2.0, 0.05, 40, MAT)


def transverse_field(model, amplitude=1e-3):
    n_nodes = model.n_full // 3
    x = np.linspace(0.0, 1.0, n_nodes)
    u = np.zeros(model.n_full)
    u[1::3] = amplitude * np.sin(np.pi * x)
    u[2::3] = amplitude * np.pi / 2.0 * np.cos(np.pi * x)
    return model.restrict(u)


def test_first_bending_frequency_matches_euler_bernoulli(beam):
    K0 = beam.stiffness(np.zeros(beam.n_free))
    M = assemble_mass(beam)
    omega2, _ = eig_gsym(K0, M, 1)
    f1 = np.sqrt(omega2[0]) / (2 * np.pi)
    L, h = 2.0, 0.05
    EI = 70e9 * h**3 / 12.0
    rhoA = 2700.0 * h
    analytic = 4.730040744862704**2 / (2 * np.pi * L**2) * np.sqrt(EI / rhoA)
    assert abs(f1 - analytic) / analytic < 0.01


def test_transverse_only_axial_residual_is_quadratic(beam):
    w = transverse_field(beam)
    alphas = np.array([0.5, 1.0, 1.5, 2.0])
    axial = []
    for a in alphas:
        f_full = beam.expand(beam.internal_force(a * w))
        axial.append(f_full[0::3])
    axial = np.array(axial)
    vand = np.vander(alphas, 3, increasing=True)
    coef, *_ = np.linalg.lstsq(vand, axial, rcond=None)
    resid = np.linalg.norm(vand @ coef - axial) / np.linalg.norm(axial)
    assert resid <= 1e-10
    # and it is a *pure* quadratic: constant and linear parts vanish
    assert np.linalg.norm(coef[0]) <= 1e-12 * np.linalg.norm(coef[2])
    assert np.linalg.norm(coef[1]) <= 1e-10 * np.linalg.norm(coef[2])


def test_axial_only_force_linear_and_membrane_block_constant(beam):
    rng = np.random.default_rng(11)
    u_full = np.zeros(beam.n_full)
    u_full[0::3] = 1e-2 * rng.standard_normal(beam.n_full // 3)
    u = beam.restrict(u_full)
    K0 = beam.stiffness(np.zeros(beam.n_free)).toarray()
    f = beam.internal_force(u)
    assert np.linalg.norm(f - K0 @ u) <= 1e-12 * np.linalg.norm(f)
    # the membrane (axial) rows of the tangent do not move with axial u;
    # the bending block picks up the axial-prestress coupling term
    Ku = beam.stiffness(u).toarray()
    full_map = beam.dof_map
    axial_rows = [full_map[i] for i in range(0, beam.n_full, 3) if full_map[i] >= 0]
    diff = Ku - K0
    assert np.abs(diff[axial_rows, :]).max() <= 1e-12 * np.abs(K0).max()
    assert np.abs(diff).max() > 0  # prestress term present in the bending block


def test_tangent_matches_finite_differences(beam):
    rng = np.random.default_rng(12)
    u = 1e-3 * rng.standard_normal(beam.n_free)
    K = beam.stiffness(u).toarray()
    h = 1e-7
    worst = 0.0
    for j in range(beam.n_free):
        e = np.zeros(beam.n_free)
        e[j] = h
        col = (beam.internal_force(u + e) - beam.internal_force(u - e)) / (2 * h)
        worst = max(worst, np.linalg.norm(col - K[:, j]) / np.linalg.norm(K[:, j]))
    assert worst <= 1e-6


def test_static_condensation_of_axial_dofs(beam):
    """The quadratic map built from transverse modes condenses the axial
    dofs exactly as the membrane equation predicts."""
    K0 = beam.stiffness(np.zeros(beam.n_free))
    M = assemble_mass(beam)
    omega2, phi = eig_gsym(K0, M, 3)
    # bending modes of the straight beam are purely transverse already;
    # scrub roundoff so the basis is exactly transverse
    phi_full = np.column_stack([beam.expand(phi[:, i]) for i in range(3)])
    phi_full[0::3, :] = 0.0
    V = phi_full[beam.free_dofs]
    theta = static_derivatives(beam, V)
    manifold = QuadraticManifold(V, theta)

    # axial/transverse partition on the free dofs
    axial = np.array([i for i, g in enumerate(beam.free_dofs) if g % 3 == 0])
    Kd = K0.toarray()
    K_mm = Kd[np.ix_(axial, axial)]

    rng = np.random.default_rng(13)
    z = rng.standard_normal(3)
    u = manifold.gamma(z)
    w = u.copy()
    w[axial] = 0.0
    # quadratic force the transverse field exerts on the membrane equation
    f_w = beam.internal_force(w)
    condensed = np.linalg.solve(K_mm, -f_w[axial])
    assert np.linalg.norm(u[axial] - condensed) <= 1e-8 * np.linalg.norm(condensed)
