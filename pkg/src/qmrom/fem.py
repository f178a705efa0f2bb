"""Total-Lagrangian finite-element kernel for 6-node plane-stress triangles.

St. Venant-Kirchhoff material with Green-Lagrange strain, so the internal
force is an exact cubic polynomial in the displacements and the assembled
tangent is the exact derivative of the force.  Element loops are vectorized
over the whole mesh; scatter into a fixed CSR pattern keeps assembly
deterministic and cheap enough for time stepping.

Dirichlet constraints are handled by dof elimination: assembled vectors and
matrices live on the free dofs only.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

__all__ = [
    "Material",
    "FEModel",
    "AssemblyError",
    "build_tri6_model",
    "assemble_mass",
    "assemble_damping",
    "assemble_internal_force",
    "assemble_stiffness",
    "assemble_internal_force_and_stiffness",
    "assemble_load_pattern",
    "to_triplets",
]


class AssemblyError(Exception):
    """Raised for degenerate elements or invalid assembly input."""


@dataclass(frozen=True)
class Material:
    """Isotropic linear-elastic material for 2D plane stress."""

    youngs_modulus: float
    poisson_ratio: float
    density: float
    thickness: float = 1.0

    def __post_init__(self):
        if self.youngs_modulus <= 0:
            raise ValueError("Young's modulus must be positive")
        if not -1.0 < self.poisson_ratio < 0.5:
            raise ValueError("Poisson ratio must lie in (-1, 0.5)")
        if self.density <= 0:
            raise ValueError("density must be positive")
        if self.thickness <= 0:
            raise ValueError("thickness must be positive")

    def plane_stress_matrix(self):
        E, nu = self.youngs_modulus, self.poisson_ratio
        c = E / (1.0 - nu**2)
        return c * np.array([[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, 0.5 * (1.0 - nu)]])


# 6-point, degree-4 triangle rule (weights include the reference area 1/2)
_TRI6_QP = np.array(
    [
        [0.108103018168070, 0.445948490915965, 0.445948490915965],
        [0.445948490915965, 0.108103018168070, 0.445948490915965],
        [0.445948490915965, 0.445948490915965, 0.108103018168070],
        [0.816847572980459, 0.091576213509771, 0.091576213509771],
        [0.091576213509771, 0.816847572980459, 0.091576213509771],
        [0.091576213509771, 0.091576213509771, 0.816847572980459],
    ]
)
_TRI6_W = 0.5 * np.array(
    [
        0.223381589678011,
        0.223381589678011,
        0.223381589678011,
        0.109951743655322,
        0.109951743655322,
        0.109951743655322,
    ]
)


def _tri6_shape(bary):
    """Shape functions and (xi, eta) gradients at barycentric points.

    Corner order 1-2-3 then midsides 1-2, 2-3, 3-1; xi, eta are the areal
    coordinates of corners 2 and 3.
    """
    L1, L2, L3 = bary[:, 0], bary[:, 1], bary[:, 2]
    N = np.column_stack(
        [
            L1 * (2 * L1 - 1),
            L2 * (2 * L2 - 1),
            L3 * (2 * L3 - 1),
            4 * L1 * L2,
            4 * L2 * L3,
            4 * L3 * L1,
        ]
    )
    dL = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])  # dL_i/d(xi, eta)
    nq = bary.shape[0]
    dN = np.empty((nq, 6, 2))
    for q in range(nq):
        l1, l2, l3 = L1[q], L2[q], L3[q]
        dN[q, 0] = (4 * l1 - 1) * dL[0]
        dN[q, 1] = (4 * l2 - 1) * dL[1]
        dN[q, 2] = (4 * l3 - 1) * dL[2]
        dN[q, 3] = 4 * (l2 * dL[0] + l1 * dL[1])
        dN[q, 4] = 4 * (l3 * dL[1] + l2 * dL[2])
        dN[q, 5] = 4 * (l1 * dL[2] + l3 * dL[0])
    return N, dN


class _CsrPattern:
    """Scatter of element-major entry streams into a fixed CSR matrix."""

    def __init__(self, rows, cols, n):
        order = np.lexsort((cols, rows))
        self.order = order
        key = rows[order].astype(np.int64) * n + cols[order]
        unique_keys, seg_starts = np.unique(key, return_index=True)
        self.seg_starts = seg_starts
        self.indices = (unique_keys % n).astype(np.int32)
        counts = np.zeros(n + 1, dtype=np.int64)
        np.add.at(counts, (unique_keys // n) + 1, 1)
        self.indptr = np.cumsum(counts).astype(np.int32)
        self.shape = (n, n)

    def assemble(self, values):
        data = np.add.reduceat(values[self.order], self.seg_starts)
        return sps.csr_matrix((data, self.indices, self.indptr), shape=self.shape)


class Tri6Kernel:
    """Vectorized element kernel for all tri6 elements of one mesh."""

    def __init__(self, mesh, material):
        self.mesh = mesh
        self.material = material
        self.ndof_per_node = 2
        conn = mesh.elements
        coords = mesh.nodes[conn]  # (nel, 6, 2)
        _, dN = _tri6_shape(_TRI6_QP)
        self._N = _tri6_shape(_TRI6_QP)[0]
        # jacobian of the reference->physical map, J_ab = dx_a/dxi_b
        J = np.einsum("qib,eia->eqab", dN, coords)
        detJ = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
        bad = np.flatnonzero(np.any(detJ <= 0.0, axis=1))
        if bad.size:
            raise AssemblyError(
                f"element {bad[0]} has a non-positive Jacobian; check corner ordering"
            )
        invJ = np.empty_like(J)
        invJ[..., 0, 0] = J[..., 1, 1]
        invJ[..., 1, 1] = J[..., 0, 0]
        invJ[..., 0, 1] = -J[..., 0, 1]
        invJ[..., 1, 0] = -J[..., 1, 0]
        invJ /= detJ[..., None, None]
        self.dN_dX = np.einsum("qia,eqab->eqib", dN, invJ)  # (nel, nq, 6, 2)
        self.wdet = _TRI6_W[None, :] * detJ  # (nel, nq)
        self.C = material.plane_stress_matrix()
        # element dof indices, interleaved (ux0, uy0, ux1, ...)
        edof = np.empty((conn.shape[0], 12), dtype=np.int64)
        edof[:, 0::2] = 2 * conn
        edof[:, 1::2] = 2 * conn + 1
        self.edof = edof
        self.n_full = 2 * mesh.n_nodes

    def area(self):
        return float(self.wdet.sum())

    def displacement_gradients(self, u_full):
        ue = u_full.reshape(-1, 2)[self.mesh.elements]  # (nel, 6, 2)
        return np.einsum("eia,eqib->eqab", ue, self.dN_dX)

    def strain_stress(self, H):
        """Green-Lagrange strain and PK2 stress (Voigt) from grad u."""
        F = H.copy()
        F[..., 0, 0] += 1.0
        F[..., 1, 1] += 1.0
        Cg11 = F[..., 0, 0] ** 2 + F[..., 1, 0] ** 2
        Cg22 = F[..., 0, 1] ** 2 + F[..., 1, 1] ** 2
        Cg12 = F[..., 0, 0] * F[..., 0, 1] + F[..., 1, 0] * F[..., 1, 1]
        E = np.stack([0.5 * (Cg11 - 1.0), 0.5 * (Cg22 - 1.0), Cg12], axis=-1)
        S = E @ self.C.T
        return F, E, S

    def _b_matrix(self, F):
        dNx = self.dN_dX[..., 0]
        dNy = self.dN_dX[..., 1]
        nel, nq = dNx.shape[:2]
        B = np.zeros((nel, nq, 3, 12))
        F00 = F[..., 0, 0, None]
        F10 = F[..., 1, 0, None]
        F01 = F[..., 0, 1, None]
        F11 = F[..., 1, 1, None]
        B[..., 0, 0::2] = F00 * dNx
        B[..., 0, 1::2] = F10 * dNx
        B[..., 1, 0::2] = F01 * dNy
        B[..., 1, 1::2] = F11 * dNy
        B[..., 2, 0::2] = F00 * dNy + F01 * dNx
        B[..., 2, 1::2] = F10 * dNy + F11 * dNx
        return B

    def force_and_tangent(self, u_full, need_tangent=True):
        """Element internal forces (nel, 12) and tangents (nel, 12, 12)."""
        t = self.material.thickness
        H = self.displacement_gradients(u_full)
        F, _, S = self.strain_stress(H)
        B = self._b_matrix(F)
        w = t * self.wdet
        fe = np.einsum("eqkl,eqk,eq->el", B, S, w)
        if not need_tangent:
            return fe, None
        CB = np.einsum("km,eqml->eqkl", self.C, B)
        Km = np.einsum("eqkl,eqkn,eq->eln", B, CB, w)
        # geometric stiffness from the stress acting on shape gradients
        dN = self.dN_dX
        Smat = np.empty(S.shape[:2] + (2, 2))
        Smat[..., 0, 0] = S[..., 0]
        Smat[..., 1, 1] = S[..., 1]
        Smat[..., 0, 1] = S[..., 2]
        Smat[..., 1, 0] = S[..., 2]
        G = np.einsum("eqia,eqab,eqjb,eq->eij", dN, Smat, dN, w)
        Kg = np.zeros_like(Km)
        Kg[:, 0::2, 0::2] = G
        Kg[:, 1::2, 1::2] = G
        return fe, Km + Kg

    def mass_elements(self):
        rho_t = self.material.density * self.material.thickness
        M6 = rho_t * np.einsum("qi,qj,eq->eij", self._N, self._N, self.wdet)
        Me = np.zeros((M6.shape[0], 12, 12))
        Me[:, 0::2, 0::2] = M6
        Me[:, 1::2, 1::2] = M6
        return Me


class FEModel:
    """Constrained finite-element model over a shared element kernel.

    Vectors and matrices produced by the assemble_* operations live on the
    free dofs (Dirichlet dofs eliminated).  ``load_pattern`` is the spatial
    reference force and ``g`` the scalar forcing time function.
    """

    def __init__(self, kernel, constrained_dofs, char_length, rayleigh=None):
        self.kernel = kernel
        self.mesh = kernel.mesh
        self.material = kernel.material
        n_full = kernel.n_full
        constrained = np.zeros(n_full, dtype=bool)
        if len(constrained_dofs):
            constrained[np.asarray(constrained_dofs, dtype=np.int64)] = True
        self.free_dofs = np.flatnonzero(~constrained)
        self.dof_map = -np.ones(n_full, dtype=np.int64)
        self.dof_map[self.free_dofs] = np.arange(self.free_dofs.size)
        self.n_free = int(self.free_dofs.size)
        self.n_full = n_full
        self.char_length = float(char_length)
        self.rayleigh = rayleigh  # (alpha_mass, beta_stiffness) or None
        self.load_pattern = None
        self.g = None
        self._pattern = None
        self._keep = None
        self._mass = None
        self._damping_cached = False
        self._damping = None
        self._build_scatter()

    def _build_scatter(self):
        edof = self.kernel.edof
        red = self.dof_map[edof]  # (nel, ndof_e), -1 for constrained
        ne, nd = red.shape
        rows = np.repeat(red, nd, axis=1).ravel()
        cols = np.tile(red, (1, nd)).ravel()
        keep = (rows >= 0) & (cols >= 0)
        self._keep = keep
        self._pattern = _CsrPattern(rows[keep], cols[keep], self.n_free)
        vec_keep = red.ravel() >= 0
        self._vec_keep = vec_keep
        self._vec_rows = red.ravel()[vec_keep]

    # -- dof bookkeeping ---------------------------------------------------

    def expand(self, u_free):
        u_full = np.zeros(self.n_full)
        u_full[self.free_dofs] = u_free
        return u_full

    def restrict(self, v_full):
        return v_full[self.free_dofs]

    def dof_index(self, node, component):
        """Reduced dof index of (node, component), or -1 if constrained."""
        return int(self.dof_map[self.kernel.ndof_per_node * node + component])

    # -- assembly ----------------------------------------------------------

    def _scatter_matrix(self, element_matrices):
        return self._pattern.assemble(element_matrices.reshape(-1)[self._keep])

    def _scatter_vector(self, element_vectors):
        return np.bincount(
            self._vec_rows,
            weights=element_vectors.reshape(-1)[self._vec_keep],
            minlength=self.n_free,
        )

    def mass(self):
        if self._mass is None:
            self._mass = self._scatter_matrix(self.kernel.mass_elements())
        return self._mass

    def damping(self):
        """Rayleigh damping a·M + b·K(0), or None when undamped."""
        if not self._damping_cached:
            if self.rayleigh is None:
                self._damping = None
            else:
                a, b = self.rayleigh
                self._damping = a * self.mass() + b * self.stiffness(np.zeros(self.n_free))
            self._damping_cached = True
        return self._damping

    def _check_state(self, u_free):
        u_free = np.asarray(u_free, dtype=float)
        if u_free.shape != (self.n_free,):
            raise ValueError(f"expected state of length {self.n_free}, got {u_free.shape}")
        if not np.all(np.isfinite(u_free)):
            raise ValueError("displacement state contains non-finite entries")
        return u_free

    def internal_force(self, u_free):
        u_free = self._check_state(u_free)
        fe, _ = self.kernel.force_and_tangent(self.expand(u_free), need_tangent=False)
        return self._scatter_vector(fe)

    def stiffness(self, u_free):
        return self.internal_force_and_stiffness(u_free)[1]

    def internal_force_and_stiffness(self, u_free):
        u_free = self._check_state(u_free)
        fe, Ke = self.kernel.force_and_tangent(self.expand(u_free))
        return self._scatter_vector(fe), self._scatter_matrix(Ke)


def build_tri6_model(mesh, material, clamped_edges=(), rayleigh=None):
    """FEModel on a tri6 mesh with both dofs fixed on the named edge sets."""
    kernel = Tri6Kernel(mesh, material)
    constrained = []
    for name in clamped_edges:
        if name not in mesh.node_sets:
            raise KeyError(f"unknown edge set {name!r}")
        for node in mesh.node_sets[name]:
            constrained.extend((2 * node, 2 * node + 1))
    return FEModel(kernel, constrained, mesh.bounding_box_diagonal(), rayleigh=rayleigh)


# -- spec-level operations -------------------------------------------------


def assemble_mass(model):
    """Consistent mass matrix on the free dofs (CSR, SPD)."""
    return model.mass()


def assemble_damping(model):
    return model.damping()


def assemble_internal_force(model, u):
    """Total-Lagrangian internal force f(u); f(0) = 0."""
    return model.internal_force(u)


def assemble_stiffness(model, u):
    """Exact tangent stiffness K(u) = df/du (CSR, symmetric)."""
    return model.stiffness(u)


def assemble_internal_force_and_stiffness(model, u):
    return model.internal_force_and_stiffness(u)


def assemble_load_pattern(model, traction, edge_set, direction):
    """Consistent nodal forces for a uniform traction on a named edge set.

    traction is a force per unit reference edge length; direction is
    normalized internally, so the assembled components along it sum to
    traction times the total edge length.
    """
    mesh = model.mesh
    if edge_set not in mesh.edge_sets:
        raise KeyError(f"unknown edge set {edge_set!r}")
    edges = mesh.edge_sets[edge_set]
    if len(edges) == 0:
        raise ValueError(f"edge set {edge_set!r} is empty")
    direction = np.asarray(direction, dtype=float)
    nrm = np.linalg.norm(direction)
    if nrm == 0:
        raise ValueError("direction must be nonzero")
    direction = direction / nrm
    F_full = np.zeros(model.n_full)
    # straight 3-node edges: consistent weights L/6, 2L/3, L/6
    for n0, nm, n1 in edges:
        L = np.linalg.norm(mesh.nodes[n1] - mesh.nodes[n0])
        for node, w in ((n0, L / 6.0), (nm, 2.0 * L / 3.0), (n1, L / 6.0)):
            F_full[2 * node : 2 * node + 2] += traction * w * direction
    return model.restrict(F_full)


def to_triplets(matrix):
    """Upper-triangle triplet export (rows, cols, values) of a symmetric matrix."""
    coo = sps.coo_matrix(matrix)
    mask = coo.row <= coo.col
    return coo.row[mask], coo.col[mask], coo.data[mask]
