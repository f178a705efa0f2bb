import numpy as np
import pytest

from qmrom.scenarios import (
    METHODS,
    ScenarioConfig,
    build_model,
    builtin_scenarios,
    load_config,
    save_config,
)


def test_builtin_names():
    scenarios = builtin_scenarios()
    for name in (
        "beam_cc",
        "arch",
        "cantilever",
        "beam_cc_vk",
        "beam_cc_desk",
        "cantilever_desk",
    ):
        assert name in scenarios
        assert scenarios[name].name == name


def test_beam_cc_parameters_as_reported():
    sc = builtin_scenarios()["beam_cc"]
    assert sc.geometry["length"] == 2.0
    assert sc.geometry["height"] == 0.05
    assert sc.material["youngs_modulus"] == 70e9
    assert sc.material["poisson_ratio"] == 0.3
    assert sc.material["density"] == 2700.0
    assert sc.traction["amplitude"] == 5e5
    assert sc.traction["edge_set"] == "top"
    assert set(sc.clamped) == {"left", "right"}
    assert sc.forcing == ((1.0, 72.0), (1.0, 100.0))
    assert sc.integrator == {"alpha": 0.1, "dt": 1e-4, "t_end": 0.2, "dt_save": 1e-4}


def test_arch_parameters_as_reported():
    sc = builtin_scenarios()["arch"]
    assert sc.geometry["radius"] == 8.0
    assert sc.traction["amplitude"] == 3e5
    assert sc.forcing == ((1.0, 115.0), (1.0, 150.0))


def test_cantilever_parameters_as_reported():
    sc = builtin_scenarios()["cantilever"]
    assert sc.clamped == ("left",)
    assert sc.traction == {"edge_set": "right", "amplitude": 3e6, "direction": (0.0, -1.0)}
    assert sc.forcing == ((1.0, 20.0), (1.0, 48.0))


def test_vk_twin_shares_beam_parameters():
    beam = builtin_scenarios()["beam_cc"]
    vk = builtin_scenarios()["beam_cc_vk"]
    assert vk.geometry["kind"] == "vk_beam"
    assert vk.geometry["length"] == beam.geometry["length"]
    assert vk.geometry["height"] == beam.geometry["height"]
    assert vk.material == beam.material
    assert vk.forcing == beam.forcing
    assert vk.integrator == beam.integrator


def test_desk_variants_truncate_time():
    full = builtin_scenarios()["beam_cc"]
    desk = builtin_scenarios()["beam_cc_desk"]
    assert desk.integrator["t_end"] < full.integrator["t_end"]
    assert desk.geometry["nx"] < full.geometry["nx"]
    assert desk.material == full.material


def test_forcing_time_function():
    sc = builtin_scenarios()["beam_cc"]
    t = 0.0123
    expected = np.sin(72 * 2 * np.pi * t) + np.sin(100 * 2 * np.pi * t)
    assert sc.g(t) == pytest.approx(expected, rel=1e-12)
    assert sc.g(0.0) == 0.0


def test_config_roundtrip(tmp_path):
    for name, sc in builtin_scenarios().items():
        path = tmp_path / f"{name}.json"
        save_config(sc, path)
        loaded = load_config(path)
        assert loaded == sc


def test_schema_version_is_mandatory(tmp_path):
    sc = builtin_scenarios()["beam_cc_desk"]
    data = sc.to_dict()
    data.pop("schema_version")
    with pytest.raises(ValueError, match="schema_version"):
        ScenarioConfig.from_dict(data)


def test_unknown_method_rejected():
    sc = builtin_scenarios()["beam_cc_desk"]
    with pytest.raises(ValueError, match="unknown method"):
        ScenarioConfig.from_dict({**sc.to_dict(), "methods": ("QM-bogus",)})


def test_nonpositive_frequency_rejected():
    sc = builtin_scenarios()["beam_cc_desk"]
    with pytest.raises(ValueError, match="frequencies"):
        ScenarioConfig.from_dict({**sc.to_dict(), "forcing": ((1.0, -3.0),)})


def test_method_vocabulary_is_closed():
    assert METHODS == (
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


@pytest.mark.parametrize("name", ["beam_cc_desk", "arch_desk", "cantilever_desk", "beam_cc_vk_desk"])
def test_build_model_attaches_load_and_forcing(name):
    sc = builtin_scenarios()[name]
    model = build_model(sc)
    assert model.load_pattern is not None
    assert np.linalg.norm(model.load_pattern) > 0
    assert model.g(0.0) == 0.0
    assert model.g(0.001) != 0.0


def test_unknown_geometry_kind():
    sc = builtin_scenarios()["beam_cc_desk"]
    bad = ScenarioConfig.from_dict({**sc.to_dict(), "geometry": {"kind": "sphere"}})
    with pytest.raises(ValueError, match="geometry"):
        build_model(bad)
