import csv
import json
import os

import numpy as np
import pytest

from qmrom.cli import main
from qmrom.scenarios import builtin_scenarios, save_config


def read_metadata(out_dir):
    with open(os.path.join(out_dir, "run_metadata.json")) as fh:
        return json.load(fh)


def test_run_completes_and_writes_declared_artifacts(tmp_path):
    out = tmp_path / "run"
    code = main(
        [
            "run",
            "--scenario",
            "beam_cc_vk_desk",
            "--method",
            "QM-SMD",
            "--modes",
            "3",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    meta = read_metadata(out)
    assert meta["status"] == "completed"
    assert meta["config"]["name"] == "beam_cc_vk_desk"
    for name in meta["files"]:
        assert (out / name).exists(), name
    assert meta["gre_m"] is not None and meta["gre_m"] > 0
    with open(out / "trajectory.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "z_1", "z_2", "z_3"]
    assert float(rows[1][0]) == 0.0
    with open(out / "probe.csv") as fh:
        probe_rows = list(csv.reader(fh))
    assert probe_rows[0] == ["t", "value"]
    assert len(probe_rows) == len(rows)


def test_run_reports_divergence_with_exit_code_2(tmp_path):
    out = tmp_path / "div"
    code = main(
        [
            "run",
            "--scenario",
            "cantilever_desk",
            "--method",
            "QM-SMD",
            "--modes",
            "10",
            "--out",
            str(out),
            "--no-gre",
        ]
    )
    assert code == 2
    meta = read_metadata(out)
    assert meta["status"].startswith("diverged at")
    assert (out / "trajectory.csv").exists()
    assert (out / "probe.png").exists()


def test_run_unknown_method_is_usage_error(tmp_path):
    code = main(
        ["run", "--scenario", "beam_cc_desk", "--method", "QM-XX", "--out", str(tmp_path)]
    )
    assert code == 1


def test_run_unknown_scenario_is_usage_error(tmp_path):
    code = main(
        ["run", "--scenario", "nope", "--method", "full", "--out", str(tmp_path)]
    )
    assert code == 1


def test_compare_writes_report_and_figure(tmp_path):
    out = tmp_path / "cmp"
    code = main(
        [
            "compare",
            "--scenario",
            "beam_cc_vk_desk",
            "--methods",
            "QM-SMD,linearized",
            "--modes",
            "3",
            "--out",
            str(out),
            "--serial",
        ]
    )
    assert code == 0
    assert (out / "error_overview.png").exists()
    with open(out / "error_report.csv") as fh:
        text = fh.read()
    assert "QM-SMD" in text and "linearized" in text
    meta = read_metadata(out)
    assert meta["cells"]["QM-SMD|3"] > 0
    # reference cache reused on the second invocation
    assert (out / "reference_cache").is_dir()
    code = main(
        [
            "compare",
            "--scenario",
            "beam_cc_vk_desk",
            "--methods",
            "QM-SMD",
            "--modes",
            "3",
            "--out",
            str(out),
            "--serial",
        ]
    )
    assert code == 0


def test_modes_frequency_table(tmp_path):
    out = tmp_path / "modes"
    code = main(["modes", "--scenario", "beam_cc_desk", "--out", str(out), "-n", "3"])
    assert code == 0
    with open(out / "modes.csv") as fh:
        rows = list(csv.reader(fh))
    freqs = [float(r[1]) for r in rows[1:]]
    assert len(freqs) == 3
    # desk mesh still resolves the reported frequencies to within 2%
    for got, want in zip(freqs, (65.2, 178.8, 348.0)):
        assert abs(got - want) / want < 0.02
    assert (out / "mode_shapes.csv").exists()
    assert (out / "mode_shapes.png").exists()


def test_coupling_subcommand(tmp_path):
    out = tmp_path / "coupling"
    code = main(
        ["coupling", "--scenario", "beam_cc_vk_desk", "--modes", "3", "--out", str(out)]
    )
    assert code == 0
    with open(out / "coupling_report.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["pair_i", "pair_j", "discrepancy"]
    assert rows[-1][0] == "summary"
    assert float(rows[-1][2]) < 0.05  # vk beam satisfies the quadratic coupling
    assert (out / "coupling.png").exists()


def test_config_file_path(tmp_path):
    sc = builtin_scenarios()["beam_cc_vk_desk"]
    cfg_path = tmp_path / "scenario.json"
    save_config(sc, cfg_path)
    out = tmp_path / "from_config"
    code = main(
        [
            "run",
            "--config",
            str(cfg_path),
            "--method",
            "linearized",
            "--out",
            str(out),
            "--no-gre",
        ]
    )
    assert code == 0
    meta = read_metadata(out)
    assert meta["config"]["name"] == "beam_cc_vk_desk"


def test_probe_override(tmp_path):
    out = tmp_path / "probe"
    code = main(
        [
            "run",
            "--scenario",
            "beam_cc_vk_desk",
            "--method",
            "linearized",
            "--out",
            str(out),
            "--probe",
            "0.5,0.0,1",
            "--no-gre",
        ]
    )
    assert code == 0
    meta = read_metadata(out)
    assert meta["probe"] == {"x": 0.5, "y": 0.0, "component": 1}


def test_bad_probe_spec(tmp_path):
    code = main(
        [
            "run",
            "--scenario",
            "beam_cc_vk_desk",
            "--method",
            "full",
            "--out",
            str(tmp_path),
            "--probe",
            "1.0,abc",
        ]
    )
    assert code == 1


def test_snapshots_flag(tmp_path):
    out = tmp_path / "snaps"
    code = main(
        [
            "run",
            "--scenario",
            "beam_cc_vk_desk",
            "--method",
            "linearized",
            "--out",
            str(out),
            "--snapshots",
            "--no-gre",
        ]
    )
    assert code == 0
    snap = out / "snapshots.txt"
    assert snap.exists()
    with open(snap) as fh:
        head = fh.readline()
    assert head.startswith("#")
