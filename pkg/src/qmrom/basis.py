"""Reduction ingredients: vibration modes, M-orthogonal Krylov vectors,
directional stiffness derivatives, static (modal) derivatives, full modal
derivatives, orthogonalization of the quadratic tensor against the linear
basis, and SVD deflation of stacked bases.

The second-order stiffness tensor is never materialized; its action along a
basis vector is obtained from a central finite difference of the assembled
tangent, which is exact (up to roundoff) for internal forces that are
polynomial in the displacements.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import fem
from .numerics import eig_gsym, factor_spd, solve_bordered, svd_thin

__all__ = [
    "ReductionBasis",
    "QuadTensor",
    "DegenerateModeError",
    "vibration_modes",
    "krylov_modes",
    "stiffness_directional_derivative",
    "static_derivatives",
    "static_modal_derivatives",
    "modal_derivatives",
    "orthogonalize_theta",
    "deflate_basis",
    "combine_bases",
    "save_basis",
    "load_basis",
]

# Default dimensionless step of the central stiffness difference.  The
# St. Venant-Kirchhoff and von Karman kernels have tangents that are exact
# polynomials in the displacement, so the central difference carries no
# truncation error and a generous step suppresses the roundoff that an
# ill-conditioned solve would otherwise amplify.  The Richardson check below
# guards kernels for which this assumption fails.
DEFAULT_FD_STEP = 1e-2
DEFLATION_TOL = 1e-8


class DegenerateModeError(Exception):
    """Raised when modal derivatives are requested for clustered eigenvalues."""


@dataclass
class ReductionBasis:
    """Columns of a linear reduction basis with per-column provenance.

    kinds holds one tag per column ("vibration_mode", "krylov", "other");
    omegas carries the angular eigenfrequency for vibration modes and NaN
    otherwise.
    """

    V: np.ndarray
    kinds: list = field(default_factory=list)
    omegas: np.ndarray = None

    def __post_init__(self):
        if not self.kinds:
            self.kinds = ["other"] * self.V.shape[1]
        if self.omegas is None:
            self.omegas = np.full(self.V.shape[1], np.nan)

    @property
    def n(self):
        return self.V.shape[1]


def _pair_index(i, j, n):
    """Column index of the (i, j) pair, i <= j, in lexicographic order."""
    return i * n - i * (i - 1) // 2 + (j - i)


def pair_list(n):
    return [(i, j) for i in range(n) for j in range(i, n)]


@dataclass
class QuadTensor:
    """Symmetric-in-last-two-indices quadratic coupling tensor.

    Stored as the n(n+1)/2 distinct columns theta_ij (i <= j, lexicographic)
    of length N.  ``orthogonalized`` records whether the columns have been
    projected against a linear basis.
    """

    columns: np.ndarray  # (N, n_pairs)
    n: int
    orthogonalized: bool = False

    @classmethod
    def zeros(cls, N, n):
        return cls(np.zeros((N, n * (n + 1) // 2)), n)

    def column(self, i, j):
        if i > j:
            i, j = j, i
        return self.columns[:, _pair_index(i, j, self.n)]

    def set_column(self, i, j, value):
        if i > j:
            i, j = j, i
        self.columns[:, _pair_index(i, j, self.n)] = value

    def full(self):
        """Dense (N, n, n) tensor; symmetric in the trailing indices."""
        N, n = self.columns.shape[0], self.n
        T = np.empty((N, n, n))
        for i, j in pair_list(n):
            col = self.columns[:, _pair_index(i, j, n)]
            T[:, i, j] = col
            T[:, j, i] = col
        return T

    def norm(self):
        return float(np.linalg.norm(self.columns))

    def copy(self, orthogonalized=None):
        return QuadTensor(
            self.columns.copy(),
            self.n,
            self.orthogonalized if orthogonalized is None else orthogonalized,
        )


def vibration_modes(model, n):
    """Lowest n mass-normalized vibration modes of the linearized model."""
    K0 = model.stiffness(np.zeros(model.n_free))
    M = model.mass()
    omega2, phi = eig_gsym(K0, M, n)
    return ReductionBasis(V=phi, kinds=["vibration_mode"] * n, omegas=np.sqrt(omega2))


def krylov_modes(model, F, n):
    """M-orthogonal Krylov vectors spanning the zero-frequency moments.

    The raw sequence is K^-1 F, K^-1 M K^-1 F, ...; each new vector is
    M-orthogonalized against the previous ones (two Gram-Schmidt sweeps) and
    M-normalized.  On breakdown the basis attained so far is returned with a
    warning.
    """
    F = np.asarray(F, dtype=float)
    if not np.any(F):
        raise ValueError("load pattern must be nonzero")
    K0 = model.stiffness(np.zeros(model.n_free))
    M = model.mass()
    factor = factor_spd(K0)
    vecs = []
    v = factor.solve(F)
    for k in range(n):
        if k > 0:
            v = factor.solve(M @ vecs[-1])
        norm_before = np.sqrt(v @ (M @ v))
        for _ in range(2):
            for w in vecs:
                v = v - w * (w @ (M @ v))
        norm_after = np.sqrt(v @ (M @ v))
        if norm_after < 1e-10 * norm_before or norm_after == 0.0:
            warnings.warn(
                f"Krylov iteration broke down after {k} vectors; returning "
                "the basis attained so far"
            )
            break
        vecs.append(v / norm_after)
    V = np.column_stack(vecs)
    return ReductionBasis(V=V, kinds=["krylov"] * V.shape[1])


def directional_stiffness_derivative(k_func, v, step):
    """Central difference (K(step·v) - K(-step·v)) / (2·step)."""
    return (k_func(step * v) - k_func(-step * v)) / (2.0 * step)


def _fd_step(model, v, delta):
    """Step so the perturbation has max nodal displacement delta·L_char."""
    vmax = np.abs(v).max()
    if vmax == 0.0:
        raise ValueError("direction vector must be nonzero")
    return delta * model.char_length / vmax


def stiffness_directional_derivative(model, v, delta=DEFAULT_FD_STEP, check=False):
    """Directional derivative of the tangent stiffness along v.

    The perturbation amplitude is chosen so that the largest nodal
    displacement equals delta times the model's characteristic length.  With
    ``check=True`` a Richardson comparison against half the step warns above
    1e-4 relative discrepancy.
    """
    v = np.asarray(v, dtype=float)
    step = _fd_step(model, v, delta)
    k_func = lambda u: model.stiffness(u)
    D = directional_stiffness_derivative(k_func, v, step)
    if check:
        D_half = directional_stiffness_derivative(k_func, v, step / 2)
        num = _sparse_norm(D - D_half)
        den = _sparse_norm(D)
        if den > 0 and num / den > 1e-4:
            warnings.warn(
                f"stiffness derivative is step-sensitive (relative change "
                f"{num / den:.2e} when halving the step)"
            )
    return D


def _sparse_norm(A):
    try:
        return np.sqrt((A.multiply(A)).sum())
    except AttributeError:
        return np.linalg.norm(A)


def static_derivatives(model, basis, delta=DEFAULT_FD_STEP):
    """Quadratic tensor from the force-compensation condition.

    For every pair i <= j solves K(0) θ_ij = -(dK/dq_j) v_i against a single
    SPD factorization; the stiffness is assembled 2n+1 times in total (once
    unperturbed, twice per direction).
    """
    V = basis.V if isinstance(basis, ReductionBasis) else np.asarray(basis, dtype=float)
    n = V.shape[1]
    K0 = model.stiffness(np.zeros(model.n_free))
    factor = factor_spd(K0)
    theta = QuadTensor.zeros(model.n_free, n)
    for j in range(n):
        Dj = stiffness_directional_derivative(model, V[:, j], delta=delta)
        rhs = -(Dj @ V[:, : j + 1])  # all i <= j at once
        sol = factor.solve(rhs)
        for i in range(j + 1):
            theta.set_column(i, j, sol[:, i] if rhs.ndim == 2 else sol)
    return theta


def static_modal_derivatives(model, modes, delta=DEFAULT_FD_STEP):
    """Static derivatives with the vibration modes as the linear basis."""
    return static_derivatives(model, modes, delta=delta)


def modal_derivatives(model, modes, delta=DEFAULT_FD_STEP, gap_tol=1e-6):
    """Full modal derivatives (inertia retained), symmetrized.

    Each derivative solves the singular system (K - ω_i² M) x = rhs with the
    constraint φ_iᵀ M x = 0 through a bordered solve; the right-hand side is
    made solvable by removing the eigenvalue-derivative component.  The
    tensor entry is the average (dφ_i/dq_j + dφ_j/dq_i)/2, restoring the
    symmetry the quadratic mapping requires.
    """
    if not isinstance(modes, ReductionBasis) or np.any(np.isnan(modes.omegas)):
        raise ValueError("modal derivatives need vibration modes with eigenfrequencies")
    V, omegas = modes.V, modes.omegas
    n = V.shape[1]
    lam = omegas**2
    for a in range(n):
        for b in range(a + 1, n):
            gap = abs(lam[a] - lam[b]) / max(lam[a], lam[b])
            if gap < gap_tol:
                raise DegenerateModeError(
                    f"eigenvalues {a} and {b} are nearly degenerate "
                    f"(relative gap {gap:.2e})"
                )
    K0 = model.stiffness(np.zeros(model.n_free))
    M = model.mass()
    D = [stiffness_directional_derivative(model, V[:, j], delta=delta) for j in range(n)]
    raw = np.empty((model.n_free, n, n))
    for i in range(n):
        phi = V[:, i]
        A = K0 - lam[i] * M
        b = M @ phi
        for j in range(n):
            Dj_phi = D[j] @ phi
            rhs = -(Dj_phi - (phi @ Dj_phi) * b)
            raw[:, i, j] = solve_bordered(A, b, rhs, nullspace=phi)
    theta = QuadTensor.zeros(model.n_free, n)
    for i, j in pair_list(n):
        theta.set_column(i, j, 0.5 * (raw[:, i, j] + raw[:, j, i]))
    return theta


def orthogonalize_theta(theta, V):
    """Project every tensor column onto the orthogonal complement of span(V).

    Columns of V are orthonormalized internally; for already-orthonormal V
    this is the textbook (I - Σ v_i v_iᵀ) sweep, and in general it enforces
    Vᵀ Θ_⊥V = 0 exactly.
    """
    Q, _ = np.linalg.qr(np.asarray(V, dtype=float))
    cols = theta.columns - Q @ (Q.T @ theta.columns)
    return QuadTensor(cols, theta.n, orthogonalized=True)


def deflate_basis(V, theta=None, rho=DEFLATION_TOL, return_singular_values=False):
    """Orthonormal basis of the stacked linear and quadratic columns.

    Stacks [v_1 .. v_n, θ_11, θ_12, .., θ_nn] (distinct pairs only), applies
    a thin SVD and keeps the left singular vectors with σ_k >= ρ·σ_1.
    """
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    V = np.asarray(V, dtype=float)
    if V.size == 0:
        raise ValueError("empty basis")
    R = V if theta is None else np.hstack([V, theta.columns])
    U, s, _ = svd_thin(R)
    m = int(np.count_nonzero(s >= rho * s[0]))
    if return_singular_values:
        return U[:, :m], s
    return U[:, :m]


def combine_bases(first, second, rho=DEFLATION_TOL):
    """Orthonormalized concatenation of two bases (thin SVD, tolerance rho)."""
    V = np.hstack([first.V, second.V])
    U, s, _ = svd_thin(V)
    m = int(np.count_nonzero(s >= rho * s[0]))
    if m < V.shape[1]:
        warnings.warn(
            f"combined basis is rank deficient; kept {m} of {V.shape[1]} columns"
        )
    kinds = ["other"] * m
    return ReductionBasis(V=U[:, :m], kinds=kinds)


def save_basis(path, V, theta=None, metadata=None):
    """Store basis and tensor columns with a JSON provenance header (.npz)."""
    import json

    payload = {"V": np.asarray(V, dtype=float)}
    if theta is not None:
        payload["theta_columns"] = theta.columns
        payload["theta_n"] = np.array([theta.n])
        payload["theta_orth"] = np.array([int(theta.orthogonalized)])
    payload["metadata_json"] = np.frombuffer(
        json.dumps(metadata or {}).encode(), dtype=np.uint8
    )
    np.savez(path, **payload)


def load_basis(path):
    import json

    data = np.load(path)
    V = data["V"]
    theta = None
    if "theta_columns" in data:
        theta = QuadTensor(
            data["theta_columns"],
            int(data["theta_n"][0]),
            orthogonalized=bool(data["theta_orth"][0]),
        )
    metadata = json.loads(bytes(data["metadata_json"]).decode() or "{}")
    return V, theta, metadata
