"""Construction of the reduction-method matrix.

Given a model, a method name from the closed vocabulary and a mode count,
builds the reduction ingredients (modes, Krylov vectors, derivative tensors,
deflated bases) and wraps them in the matching second-order system.
"""

from dataclasses import dataclass

import numpy as np

from . import basis as basis_mod
from .rom import (
    FullSystem,
    LinearBasisSystem,
    LinearizedSystem,
    QuadraticManifold,
    QuadraticManifoldSystem,
)
from .scenarios import METHODS

__all__ = ["ReducedBuild", "build_method"]


@dataclass
class ReducedBuild:
    """A ready-to-integrate system plus the ingredients that produced it."""

    method: str
    n_modes: int
    system: object
    reduced_dofs: int
    V: np.ndarray = None  # linear basis actually used (raw, pre-deflation)
    theta: object = None  # QuadTensor actually used
    singular_values: np.ndarray = None  # deflation spectrum for LB methods


def _half_split(n):
    # half Krylov vectors, half vibration modes; odd counts favor the modes
    return n // 2, n - n // 2


def build_method(model, method, n_modes=None):
    """Build the system for one method of the experiment matrix.

    n_modes is the number of linear modes chosen a priori; for QM methods it
    equals the reduced dof count, for LB methods the count after deflation
    differs.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; valid: {METHODS}")
    if method == "full":
        system = FullSystem(model)
        return ReducedBuild(method, 0, system, reduced_dofs=model.n_free)
    if method == "linearized":
        system = LinearizedSystem(model)
        return ReducedBuild(method, 0, system, reduced_dofs=model.n_free)
    if n_modes is None or n_modes < 1:
        raise ValueError(f"method {method!r} needs a positive mode count")

    needs_krylov = "Kry" in method
    needs_vm = method in (
        "QM-MD",
        "QM-SMD",
        "QM-SMD-orth",
        "QM-KrySD-SMD",
        "QM-Kry-SMD-orth",
        "LB-MD",
        "LB-SMD",
        "LB-KrySD-SMD",
    )

    if method in ("QM-KrySD-SMD", "QM-Kry-SMD-orth", "LB-KrySD-SMD"):
        n_kry, n_vm = _half_split(n_modes)
        kry = basis_mod.krylov_modes(model, model.load_pattern, n_kry)
        vm = basis_mod.vibration_modes(model, n_vm)
        combined = basis_mod.combine_bases(kry, vm)
        V = combined.V
        theta = basis_mod.static_derivatives(model, V)
    elif needs_krylov:
        kry = basis_mod.krylov_modes(model, model.load_pattern, n_modes)
        V = kry.V
        theta = basis_mod.static_derivatives(model, V)
    elif needs_vm:
        modes = basis_mod.vibration_modes(model, n_modes)
        V = modes.V
        if method in ("QM-MD", "LB-MD"):
            theta = basis_mod.modal_derivatives(model, modes)
        else:
            theta = basis_mod.static_modal_derivatives(model, modes)
    else:  # pragma: no cover - vocabulary is closed
        raise AssertionError(method)

    if method.endswith("-orth"):
        theta = basis_mod.orthogonalize_theta(theta, V)

    if method.startswith("QM"):
        manifold = QuadraticManifold(V, theta, method=method)
        system = QuadraticManifoldSystem(model, manifold)
        return ReducedBuild(
            method, n_modes, system, reduced_dofs=V.shape[1], V=V, theta=theta
        )

    # LB family: deflated orthonormal span of [V, theta]
    V_defl, svals = basis_mod.deflate_basis(V, theta, return_singular_values=True)
    system = LinearBasisSystem(model, V_defl)
    return ReducedBuild(
        method,
        n_modes,
        system,
        reduced_dofs=V_defl.shape[1],
        V=V,
        theta=theta,
        singular_values=svals,
    )
