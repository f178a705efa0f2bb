"""Geometrically nonlinear 2-node beam element with von Karman kinematics.

Axial strain e = u' + w'^2/2 and curvature w'' give a membrane equation that
is linear in the axial displacements u plus quadratic in the transverse
displacements w, and a bending equation with quadratic u-w coupling and a
cubic w term.  Dofs per node are (u, w, w'); w is interpolated with cubic
Hermite polynomials and u linearly.
"""

import numpy as np

from .fem import FEModel, _CsrPattern
from .mesh import Mesh

__all__ = ["VkBeamKernel", "vk_beam_model"]

# 5-point Gauss-Legendre rule on [-1, 1]
_GP, _GW = np.polynomial.legendre.leggauss(5)


def _hermite(xi, le):
    """Hermite/linear shape values and x-derivatives at xi in [-1, 1]."""
    s = (xi + 1.0) / 2.0
    H = np.array(
        [
            1 - 3 * s**2 + 2 * s**3,
            le * (s - 2 * s**2 + s**3),
            3 * s**2 - 2 * s**3,
            le * (-(s**2) + s**3),
        ]
    )
    dH = (
        np.array(
            [
                -6 * s + 6 * s**2,
                le * (1 - 4 * s + 3 * s**2),
                6 * s - 6 * s**2,
                le * (-2 * s + 3 * s**2),
            ]
        )
        / le
    )
    ddH = (
        np.array(
            [
                -6 + 12 * s,
                le * (-4 + 6 * s),
                6 - 12 * s,
                le * (-2 + 6 * s),
            ]
        )
        / le**2
    )
    L = np.array([1 - s, s])
    dL = np.array([-1.0, 1.0]) / le
    return L, dL, H, dH, ddH


class VkBeamKernel:
    """Vectorized kernel for all elements of a uniform von Karman beam."""

    def __init__(self, nodes_x, material, height):
        self.nodes_x = np.asarray(nodes_x, dtype=float)
        self.material = material
        self.height = float(height)
        self.ndof_per_node = 3
        n_nodes = self.nodes_x.size
        self.n_full = 3 * n_nodes
        nel = n_nodes - 1
        le = np.diff(self.nodes_x)
        if np.any(le <= 0):
            raise ValueError("node coordinates must be strictly increasing")
        b = material.thickness
        self.EA = material.youngs_modulus * b * height
        self.EI = material.youngs_modulus * b * height**3 / 12.0
        self.rhoA = material.density * b * height
        # element dof order: (u1, w1, t1, u2, w2, t2)
        n0 = np.arange(nel)
        edof = np.empty((nel, 6), dtype=np.int64)
        edof[:, 0] = 3 * n0
        edof[:, 1] = 3 * n0 + 1
        edof[:, 2] = 3 * n0 + 2
        edof[:, 3] = 3 * (n0 + 1)
        edof[:, 4] = 3 * (n0 + 1) + 1
        edof[:, 5] = 3 * (n0 + 1) + 2
        self.edof = edof
        self.le = le
        nq = _GP.size
        # shape-function tables: Bu (axial strain), Bw1 (slope), Bw2 (curvature)
        self.Bu = np.zeros((nel, nq, 6))
        self.Bw1 = np.zeros((nel, nq, 6))
        self.Bw2 = np.zeros((nel, nq, 6))
        self.Nu = np.zeros((nel, nq, 6))
        self.Nw = np.zeros((nel, nq, 6))
        for q, xi in enumerate(_GP):
            for e in range(nel):
                Le, dLe, He, dHe, ddHe = _hermite(xi, le[e])
                self.Bu[e, q, [0, 3]] = dLe
                self.Bw1[e, q, [1, 2, 4, 5]] = dHe
                self.Bw2[e, q, [1, 2, 4, 5]] = ddHe
                self.Nu[e, q, [0, 3]] = Le
                self.Nw[e, q, [1, 2, 4, 5]] = He
        self.wdx = 0.5 * le[:, None] * _GW[None, :]  # (nel, nq)

    def force_and_tangent(self, u_full, need_tangent=True):
        ue = u_full[self.edof]  # (nel, 6)
        du = np.einsum("eqj,ej->eq", self.Bu, ue)
        dw = np.einsum("eqj,ej->eq", self.Bw1, ue)
        ddw = np.einsum("eqj,ej->eq", self.Bw2, ue)
        axial = self.EA * (du + 0.5 * dw**2)  # membrane force
        moment = self.EI * ddw
        Bmem = self.Bu + dw[..., None] * self.Bw1  # d(e)/d(dofs)
        w = self.wdx
        fe = np.einsum("eq,eqj,eq->ej", axial, Bmem, w) + np.einsum(
            "eq,eqj,eq->ej", moment, self.Bw2, w
        )
        if not need_tangent:
            return fe, None
        Ke = (
            self.EA * np.einsum("eqi,eqj,eq->eij", Bmem, Bmem, w)
            + np.einsum("eq,eqi,eqj,eq->eij", axial, self.Bw1, self.Bw1, w)
            + self.EI * np.einsum("eqi,eqj,eq->eij", self.Bw2, self.Bw2, w)
        )
        return fe, Ke

    def mass_elements(self):
        return self.rhoA * (
            np.einsum("eqi,eqj,eq->eij", self.Nu, self.Nu, self.wdx)
            + np.einsum("eqi,eqj,eq->eij", self.Nw, self.Nw, self.wdx)
        )

    def transverse_load(self, p):
        """Consistent nodal forces of a uniform transverse line load p."""
        F = np.zeros(self.n_full)
        fe = p * np.einsum("eqj,eq->ej", self.Nw, self.wdx)
        np.add.at(F, self.edof, fe)
        return F


def vk_beam_model(length, height, n_elements, material, clamped=("left", "right")):
    """Clamped von Karman beam model with dofs (u, w, w') per node.

    The returned FEModel shares the assembly interface of the tri6 models;
    its dof layout is 3 per node.  ``clamped`` may contain "left" and/or
    "right"; a clamp fixes all three dofs of the end node.
    """
    if n_elements < 1:
        raise ValueError("n_elements must be at least 1")
    nodes_x = np.linspace(0.0, length, n_elements + 1)
    kernel = VkBeamKernel(nodes_x, material, height)
    constrained = []
    ends = {"left": 0, "right": n_elements}
    for name in clamped:
        if name not in ends:
            raise KeyError(f"unknown end {name!r}; use 'left' or 'right'")
        n = ends[name]
        constrained.extend((3 * n, 3 * n + 1, 3 * n + 2))
    # minimal mesh stand-in so generic code can query geometry
    nodes2d = np.column_stack([nodes_x, np.zeros_like(nodes_x)])
    mesh = Mesh(
        nodes=nodes2d,
        elements=np.empty((0, 6), dtype=np.int64),
        edge_sets={},
        node_sets={"left": np.array([0]), "right": np.array([n_elements])},
    )
    kernel.mesh = mesh
    model = FEModel(kernel, constrained, char_length=length)
    return model
