"""Declarative experiment definitions: geometry, material, loading, scalar
forcing, integrator settings and method lists, plus the built-in presets
(clamped-clamped beam, arch, cantilever and their desk-scale variants).

Configs serialize to JSON with a mandatory schema_version field and
round-trip exactly.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import fem, vkbeam
from .mesh import generate_arch_mesh, generate_beam_mesh

__all__ = [
    "SCHEMA_VERSION",
    "METHODS",
    "ScenarioConfig",
    "builtin_scenarios",
    "build_model",
    "load_config",
    "save_config",
]

SCHEMA_VERSION = 1

# closed method vocabulary for the experiment matrix
METHODS = (
    "linearized",
    "QM-MD",
    "QM-SMD",
    "QM-KrySD",
    "QM-KrySD-SMD",
    "QM-SMD-orth",
    "QM-KrySD-orth",
    "QM-Kry-SMD-orth",
    "LB-MD",
    "LB-SMD",
    "LB-KrySD",
    "LB-KrySD-SMD",
    "full",
)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    geometry: dict  # kind: beam | arch | vk_beam, plus dimensions and resolution
    material: dict  # youngs_modulus, poisson_ratio, density, thickness
    clamped: tuple  # edge-set names
    traction: dict  # edge_set, amplitude (N/m), direction (2-vector)
    forcing: tuple  # ((amplitude, frequency_hz), ...), g(t) = sum a*sin(2*pi*f*t)
    integrator: dict  # alpha, dt, t_end, dt_save
    probe: dict  # x, y, component — default probe point
    methods: tuple = METHODS
    mode_counts: tuple = (5, 10)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        for amp, freq in self.forcing:
            if freq <= 0:
                raise ValueError("forcing frequencies must be positive")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; valid: {METHODS}")

    def g(self, t):
        return sum(a * np.sin(2.0 * np.pi * f * t) for a, f in self.forcing)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {version!r}")
        data["clamped"] = tuple(data["clamped"])
        data["forcing"] = tuple((float(a), float(f)) for a, f in data["forcing"])
        data["methods"] = tuple(data["methods"])
        data["mode_counts"] = tuple(int(n) for n in data["mode_counts"])
        traction = dict(data["traction"])
        if "direction" in traction:
            traction["direction"] = tuple(float(c) for c in traction["direction"])
        data["traction"] = traction
        return cls(**data)


def save_config(config, path):
    with open(path, "w") as stream:
        json.dump(config.to_dict(), stream, indent=2)


def load_config(path):
    with open(path) as stream:
        return ScenarioConfig.from_dict(json.load(stream))


def _material(config):
    m = config.material
    return fem.Material(
        youngs_modulus=m["youngs_modulus"],
        poisson_ratio=m["poisson_ratio"],
        density=m["density"],
        thickness=m.get("thickness", 1.0),
    )


def build_model(config):
    """FEModel with load pattern and forcing attached, per the config."""
    geo = config.geometry
    mat = _material(config)
    kind = geo["kind"]
    if kind == "beam":
        mesh = generate_beam_mesh(geo["length"], geo["height"], geo["nx"], geo["ny"])
        model = fem.build_tri6_model(mesh, mat, clamped_edges=config.clamped)
    elif kind == "arch":
        mesh = generate_arch_mesh(
            geo["chord"],
            geo["thickness"],
            geo["radius"],
            geo["nx"],
            geo["ny"],
            length_is=geo.get("length_is", "chord"),
        )
        model = fem.build_tri6_model(mesh, mat, clamped_edges=config.clamped)
    elif kind == "vk_beam":
        model = vkbeam.vk_beam_model(
            geo["length"], geo["height"], geo["n_elements"], mat, clamped=config.clamped
        )
        model.load_pattern = model.kernel.transverse_load(config.traction["amplitude"])[
            model.free_dofs
        ]
        model.g = config.g
        return model
    else:
        raise ValueError(f"unknown geometry kind {kind!r}")
    model.load_pattern = fem.assemble_load_pattern(
        model,
        config.traction["amplitude"],
        config.traction["edge_set"],
        config.traction["direction"],
    )
    model.g = config.g
    return model


def _beam_cc(name, nx, t_end):
    return ScenarioConfig(
        name=name,
        geometry={"kind": "beam", "length": 2.0, "height": 0.05, "nx": nx, "ny": 2},
        material={
            "youngs_modulus": 70e9,
            "poisson_ratio": 0.3,
            "density": 2700.0,
            "thickness": 1.0,
        },
        clamped=("left", "right"),
        traction={"edge_set": "top", "amplitude": 5e5, "direction": (0.0, -1.0)},
        forcing=((1.0, 72.0), (1.0, 100.0)),
        integrator={"alpha": 0.1, "dt": 1e-4, "t_end": t_end, "dt_save": 1e-4},
        probe={"x": 1.0, "y": 0.05, "component": 1},
    )


def _arch(name, nx, t_end):
    return ScenarioConfig(
        name=name,
        geometry={
            "kind": "arch",
            "chord": 2.0,
            "thickness": 0.05,
            "radius": 8.0,
            "nx": nx,
            "ny": 2,
            "length_is": "chord",
        },
        material={
            "youngs_modulus": 70e9,
            "poisson_ratio": 0.3,
            "density": 2700.0,
            "thickness": 1.0,
        },
        clamped=("left", "right"),
        traction={"edge_set": "top", "amplitude": 3e5, "direction": (0.0, -1.0)},
        forcing=((1.0, 115.0), (1.0, 150.0)),
        integrator={"alpha": 0.1, "dt": 1e-4, "t_end": t_end, "dt_save": 1e-4},
        probe={"x": 1.0, "y": 0.0877, "component": 1},
    )


def _cantilever(name, nx, t_end):
    return ScenarioConfig(
        name=name,
        geometry={"kind": "beam", "length": 2.0, "height": 0.05, "nx": nx, "ny": 2},
        material={
            "youngs_modulus": 70e9,
            "poisson_ratio": 0.3,
            "density": 2700.0,
            "thickness": 1.0,
        },
        clamped=("left",),
        traction={"edge_set": "right", "amplitude": 3e6, "direction": (0.0, -1.0)},
        forcing=((1.0, 20.0), (1.0, 48.0)),
        integrator={"alpha": 0.1, "dt": 1e-4, "t_end": t_end, "dt_save": 1e-4},
        probe={"x": 1.95, "y": 0.05, "component": 1},
    )


def _beam_cc_vk(name, n_elements, t_end):
    return ScenarioConfig(
        name=name,
        geometry={"kind": "vk_beam", "length": 2.0, "height": 0.05, "n_elements": n_elements},
        material={
            "youngs_modulus": 70e9,
            "poisson_ratio": 0.3,
            "density": 2700.0,
            "thickness": 1.0,
        },
        clamped=("left", "right"),
        traction={"amplitude": -5e5},
        forcing=((1.0, 72.0), (1.0, 100.0)),
        integrator={"alpha": 0.1, "dt": 1e-4, "t_end": t_end, "dt_save": 1e-4},
        probe={"x": 1.0, "y": 0.0, "component": 1},
    )


def builtin_scenarios():
    """Named scenario presets; *_desk variants are coarser and shorter."""
    return {
        "beam_cc": _beam_cc("beam_cc", nx=80, t_end=0.2),
        "beam_cc_desk": _beam_cc("beam_cc_desk", nx=40, t_end=0.05),
        "arch": _arch("arch", nx=82, t_end=0.2),
        "arch_desk": _arch("arch_desk", nx=40, t_end=0.05),
        "cantilever": _cantilever("cantilever", nx=80, t_end=0.2),
        "cantilever_desk": _cantilever("cantilever_desk", nx=40, t_end=0.05),
        "beam_cc_vk": _beam_cc_vk("beam_cc_vk", n_elements=40, t_end=0.2),
        "beam_cc_vk_desk": _beam_cc_vk("beam_cc_vk_desk", n_elements=40, t_end=0.05),
    }
