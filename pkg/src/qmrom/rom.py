"""Reduced-model evaluation: quadratic mapping, tangent projector,
convective term, residuals and exact Jacobians for the quadratic-manifold
and linear-basis variants, plus the full and linearized systems behind the
same second-order residual interface.

Every system exposes

    inertia_residual(z, zd, zdd)      mass and convective terms
    force_residual(z, zd, t)          damping + internal - external forces
    residual(z, zd, zdd, t)           sum of the two
    jacobians(z, zd, zdd, t)          exact (d r/d zdd, d r/d zd, d r/d z)
    lift(z)                           full free-dof displacements

which is what the implicit integrator consumes.  The trailing pieces of the
Jacobian split (inertia vs force parts) exist so that the integrator can
alpha-weight only the force terms.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

__all__ = [
    "QuadraticManifold",
    "Trajectory",
    "FullSystem",
    "LinearizedSystem",
    "LinearBasisSystem",
    "QuadraticManifoldSystem",
    "LinearSecondOrderSystem",
    "qm_evaluate",
    "qm_residual",
    "qm_jacobians",
    "lift",
]


class QuadraticManifold:
    """Quadratic configuration map u = V z + Θ z z / 2.

    theta may be None, in which case the manifold degenerates to the linear
    subspace spanned by V.
    """

    def __init__(self, V, theta=None, method=""):
        self.V = np.asarray(V, dtype=float)
        self.theta = theta
        self.method = method
        self.n = self.V.shape[1]
        self._T = None if theta is None else theta.full()  # (N, n, n)

    @property
    def has_curvature(self):
        return self._T is not None

    def gamma(self, z):
        """Configuration u(z); quadratic in z, Γ(0) = 0."""
        u = self.V @ z
        if self._T is not None:
            u = u + 0.5 * np.einsum("ljk,j,k->l", self._T, z, z)
        return u

    def tangent(self, z):
        """Tangent projector P(z) = V + Θ z; P(0) = V exactly."""
        P = self.V
        if self._T is not None:
            P = P + self._T @ z
        return P

    def curvature_contraction(self, w):
        """Θ w w, the curvature term entering the convective force."""
        if self._T is None:
            return np.zeros(self.V.shape[0])
        return np.einsum("ljk,j,k->l", self._T, w, w)

    def theta_slice(self, k):
        """N x n slice Θ[:, :, k] = dP/dz_k."""
        if self._T is None:
            return None
        return self._T[:, :, k]


@dataclass
class Trajectory:
    """Time-sampled states of one integration run.

    states holds the reduced coordinates (or free-dof displacements for full
    runs) at the save times; a diverged run carries the truncated arrays and
    the divergence time, never non-finite values.
    """

    times: np.ndarray
    states: np.ndarray
    newton_iterations: np.ndarray
    status: str = "completed"  # "completed" | "diverged"
    diverged_at: float = None
    diagnostics: list = field(default_factory=list)

    @property
    def completed(self):
        return self.status == "completed"


def _matvec(A, x):
    return A @ x if A is not None else np.zeros_like(x)


class _SystemBase:
    """Shared residual plumbing for all second-order systems."""

    def residual(self, z, zd, zdd, t):
        return self.inertia_residual(z, zd, zdd) + self.force_residual(z, zd, t)

    def jacobians(self, z, zd, zdd, t):
        Ai, Bi, Ci = self.inertia_jacobians(z, zd, zdd)
        Bf, Cf = self.force_jacobians(z, zd, t)
        return Ai, _addm(Bi, Bf), _addm(Ci, Cf)

    def external_force_norm(self, t):
        """Scale used by the Newton relative tolerance."""
        g = self.external_force(t)
        return float(np.linalg.norm(g))

    def tangent_condition(self, z):
        """Smallest-over-largest singular value of the tangent, or None."""
        return None


def _addm(A, B):
    if A is None:
        return B
    if B is None:
        return A
    return A + B


class FullSystem(_SystemBase):
    """Unreduced model: M u'' + C u' + f(u) = F g(t) on the free dofs."""

    def __init__(self, model):
        self.model = model
        self.ndof = model.n_free
        self.M = model.mass()
        self.C = model.damping()
        self.F = model.load_pattern
        self.g = model.g or (lambda t: 0.0)
        self._cache_u = None
        self._cache_fk = None

    def _fk(self, u):
        if self._cache_u is None or not np.array_equal(u, self._cache_u):
            self._cache_fk = self.model.internal_force_and_stiffness(u)
            self._cache_u = u.copy()
        return self._cache_fk

    def external_force(self, t):
        if self.F is None:
            return np.zeros(self.ndof)
        return self.F * self.g(t)

    def inertia_residual(self, z, zd, zdd):
        return self.M @ zdd

    def force_residual(self, z, zd, t):
        f, _ = self._fk(z)
        r = f - self.external_force(t)
        if self.C is not None:
            r = r + self.C @ zd
        return r

    def inertia_jacobians(self, z, zd, zdd):
        return self.M, None, None

    def force_jacobians(self, z, zd, t):
        _, K = self._fk(z)
        return self.C, K

    def lift(self, z):
        return z


class LinearizedSystem(_SystemBase):
    """Full model linearized about the unloaded equilibrium."""

    def __init__(self, model):
        self.model = model
        self.ndof = model.n_free
        self.M = model.mass()
        self.C = model.damping()
        self.K0 = model.stiffness(np.zeros(model.n_free))
        self.F = model.load_pattern
        self.g = model.g or (lambda t: 0.0)

    def external_force(self, t):
        if self.F is None:
            return np.zeros(self.ndof)
        return self.F * self.g(t)

    def inertia_residual(self, z, zd, zdd):
        return self.M @ zdd

    def force_residual(self, z, zd, t):
        r = self.K0 @ z - self.external_force(t)
        if self.C is not None:
            r = r + self.C @ zd
        return r

    def inertia_jacobians(self, z, zd, zdd):
        return self.M, None, None

    def force_jacobians(self, z, zd, t):
        return self.C, self.K0

    def lift(self, z):
        return z


class LinearBasisSystem(_SystemBase):
    """Galerkin reduction onto a fixed linear basis V."""

    def __init__(self, model, V):
        self.model = model
        self.V = np.asarray(V, dtype=float)
        self.ndof = self.V.shape[1]
        self.Mr = self.V.T @ (model.mass() @ self.V)
        C = model.damping()
        self.Cr = None if C is None else self.V.T @ (C @ self.V)
        self.F = model.load_pattern
        self.g = model.g or (lambda t: 0.0)
        self.Fr = None if self.F is None else self.V.T @ self.F
        self._cache_z = None
        self._cache_fk = None

    def _fk(self, z):
        if self._cache_z is None or not np.array_equal(z, self._cache_z):
            u = self.V @ z
            f, K = self.model.internal_force_and_stiffness(u)
            self._cache_fk = (self.V.T @ f, self.V.T @ (K @ self.V))
            self._cache_z = z.copy()
        return self._cache_fk

    def external_force(self, t):
        if self.Fr is None:
            return np.zeros(self.ndof)
        return self.Fr * self.g(t)

    def inertia_residual(self, z, zd, zdd):
        return self.Mr @ zdd

    def force_residual(self, z, zd, t):
        fr, _ = self._fk(z)
        r = fr - self.external_force(t)
        if self.Cr is not None:
            r = r + self.Cr @ zd
        return r

    def inertia_jacobians(self, z, zd, zdd):
        return self.Mr, None, None

    def force_jacobians(self, z, zd, t):
        _, Kr = self._fk(z)
        return self.Cr, Kr

    def lift(self, z):
        return self.V @ z


class QuadraticManifoldSystem(_SystemBase):
    """Galerkin projection onto the position-dependent tangent space of a
    quadratic manifold.

    The residual is P(z)ᵀ [M P z'' + M Θ z' z' + C P z' + f(Γ(z)) - g(t)]
    and the Jacobians are its exact linearization, including all tensor
    coupling terms.
    """

    def __init__(self, model, manifold):
        self.model = model
        self.manifold = manifold
        self.ndof = manifold.n
        self.M = model.mass()
        self.C = model.damping()
        self.F = model.load_pattern
        self.g = model.g or (lambda t: 0.0)
        self._cache_u = None
        self._cache_fk = None

    def _fk(self, u):
        if self._cache_u is None or not np.array_equal(u, self._cache_u):
            self._cache_fk = self.model.internal_force_and_stiffness(u)
            self._cache_u = u.copy()
        return self._cache_fk

    def external_force_full(self, t):
        if self.F is None:
            return np.zeros(self.model.n_free)
        return self.F * self.g(t)

    def external_force(self, t):
        # reduced external force at the rest tangent, used for tolerance scale
        return self.manifold.V.T @ self.external_force_full(t)

    def inertia_residual(self, z, zd, zdd):
        P = self.manifold.tangent(z)
        a = self.M @ (P @ zdd + self.manifold.curvature_contraction(zd))
        return P.T @ a

    def force_residual(self, z, zd, t):
        P = self.manifold.tangent(z)
        u = self.manifold.gamma(z)
        f, _ = self._fk(u)
        w = f - self.external_force_full(t)
        if self.C is not None:
            w = w + self.C @ (P @ zd)
        return P.T @ w

    def inertia_jacobians(self, z, zd, zdd):
        man = self.manifold
        P = man.tangent(z)
        MP = self.M @ P
        A = P.T @ MP
        conv = man.curvature_contraction(zd)
        # d/dzd of Pᵀ M Θ zd zd = 2 Pᵀ M (Θ zd)
        if man.has_curvature:
            Tzd = man._T @ zd  # (N, n)
            B = 2.0 * (P.T @ (self.M @ Tzd))
            w = self.M @ (P @ zdd + conv)
            Cmat = np.empty((self.ndof, self.ndof))
            for k in range(self.ndof):
                Tk = man.theta_slice(k)
                Cmat[:, k] = Tk.T @ w + P.T @ (self.M @ (Tk @ zdd))
        else:
            B = None
            Cmat = None
        return A, B, Cmat

    def force_jacobians(self, z, zd, t):
        man = self.manifold
        P = man.tangent(z)
        u = man.gamma(z)
        f, K = self._fk(u)
        w = f - self.external_force_full(t)
        Czd = None
        if self.C is not None:
            Czd = self.C @ (P @ zd)
            w = w + Czd
        B = None if self.C is None else P.T @ (self.C @ P)
        KP = K @ P
        Cmat = P.T @ KP
        if man.has_curvature:
            for k in range(self.ndof):
                Tk = man.theta_slice(k)
                Cmat[:, k] += Tk.T @ w
                if self.C is not None:
                    Cmat[:, k] += P.T @ (self.C @ (Tk @ zd))
        return B, Cmat

    def lift(self, z):
        return self.manifold.gamma(z)

    def tangent_condition(self, z):
        s = np.linalg.svd(self.manifold.tangent(z), compute_uv=False)
        return float(s[-1] / s[0])


class LinearSecondOrderSystem(_SystemBase):
    """Small dense linear system M z'' + C z' + K z = F g(t), used by the
    integrator tests and available for toy problems."""

    def __init__(self, M, K, C=None, F=None, g=None):
        self.M = np.atleast_2d(np.asarray(M, dtype=float))
        self.K = np.atleast_2d(np.asarray(K, dtype=float))
        self.C = None if C is None else np.atleast_2d(np.asarray(C, dtype=float))
        self.ndof = self.M.shape[0]
        self.F = None if F is None else np.asarray(F, dtype=float)
        self.g = g or (lambda t: 0.0)

    def external_force(self, t):
        if self.F is None:
            return np.zeros(self.ndof)
        return self.F * self.g(t)

    def inertia_residual(self, z, zd, zdd):
        return self.M @ zdd

    def force_residual(self, z, zd, t):
        r = self.K @ z - self.external_force(t)
        if self.C is not None:
            r = r + self.C @ zd
        return r

    def inertia_jacobians(self, z, zd, zdd):
        return self.M, None, None

    def force_jacobians(self, z, zd, t):
        return self.C, self.K

    def lift(self, z):
        return z


# -- functional forms of the quadratic-manifold operations ------------------


def qm_evaluate(manifold, z):
    """Configuration and tangent projector at z: (Γ(z), P(z))."""
    z = np.asarray(z, dtype=float)
    if z.shape != (manifold.n,):
        raise ValueError(f"expected reduced state of length {manifold.n}")
    return manifold.gamma(z), manifold.tangent(z)


def qm_residual(system, z, zd, zdd, t):
    return system.residual(z, zd, zdd, t)


def qm_jacobians(system, z, zd, zdd, t):
    return system.jacobians(z, zd, zdd, t)


def lift(system, z):
    """Full-space displacements for a reduced (or full) state."""
    return system.lift(np.asarray(z, dtype=float))
