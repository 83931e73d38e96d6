"""End-to-end pipeline through the command-line interface: stage
artifacts, exit codes, invalid-input handling, and byte-identical
re-runs."""

import json
import subprocess
import sys

import numpy as np
import pytest

from shapeforge.cli import main

MINI_TEMPLATE = """
seed: 0
out: {out}
resolution: 16
bounds_margin: 0.2
dataset:
  procedural:
    - kind: sphere
      count: 1
      radius: 0.8
      subdivisions: 2
    - kind: box
      count: 1
      half_x: 0.62
      half_y: 0.62
      half_z: 0.62
sampling:
  n_points: 600
network:
  hidden_layers: 2
  hidden_width: 32
  latent_dim: 1
  levels: 2
training:
  epochs: 120
  batch_size: 128
ga:
  population_size: 4
  generations: 3
evaluation:
  n_points: 400
objectives:
  - name: mass
    kind: mass
    direction: minimize
  - name: frontal_area
    kind: drag_proxy
    direction: minimize
    axis: z
"""

STAGES = ["preprocess", "train", "reconstruct", "evaluate", "optimize", "export"]


def write_mini_config(tmp_path, name="mini.yaml", **extra):
    out = tmp_path / "run"
    text = MINI_TEMPLATE.format(out=out)
    for key, value in extra.items():
        text += f"{key}:\n"
        for k, v in value.items():
            text += f"  {k}: {v}\n"
    path = tmp_path / name
    path.write_text(text)
    return path, out


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    """One complete six-stage run shared by the artifact assertions."""
    tmp_path = tmp_path_factory.mktemp("e2e")
    config, out = write_mini_config(tmp_path)
    codes = {stage: main([stage, "--config", str(config)]) for stage in STAGES}
    return codes, out


class TestFullRun:
    def test_every_stage_succeeds(self, full_run):
        codes, _ = full_run
        assert codes == {stage: 0 for stage in STAGES}

    def test_preprocess_artifacts(self, full_run):
        _, out = full_run
        assert sorted(p.name for p in (out / "samples").glob("*.json")) == [
            "000_sphere.json",
            "001_box.json",
        ]
        assert (out / "meshes" / "000_sphere_ref.obj").exists()
        assert (out / "meshes" / "001_box_ref.obj").exists()
        assert (out / "resolved_config.yaml").exists()

    def test_checkpoint_artifact(self, full_run):
        _, out = full_run
        doc = json.loads((out / "checkpoints" / "checkpoint.json").read_text())
        assert doc["epoch"] == 120
        assert doc["latent_dim"] == 1
        assert set(doc["latents"]) == {"000_sphere", "001_box"}

    def test_reconstruction_artifacts(self, full_run):
        _, out = full_run
        assert (out / "meshes" / "000_sphere_recon.obj").exists()
        assert (out / "meshes" / "001_box_recon.obj").exists()

    def test_metrics_report(self, full_run):
        _, out = full_run
        lines = (out / "report.csv").read_text().strip().split("\n")
        assert lines[0] == "metric,value,value_x1e3"
        names = [line.split(",")[0] for line in lines[1:]]
        assert names == [
            "cd_000_sphere",
            "cd_001_box",
            "cd_mean",
            "cd_median",
            "mmd",
            "coverage",
        ]
        values = {line.split(",")[0]: float(line.split(",")[1]) for line in lines[1:]}
        assert values["coverage"] in (0.5, 1.0)
        assert values["cd_mean"] > 0

    def test_front_artifacts(self, full_run):
        _, out = full_run
        gen_lines = (out / "fronts" / "generations.csv").read_text().strip().split("\n")
        assert len(gen_lines) == 1 + 3 * 4  # header + generations x population
        front_lines = (out / "fronts" / "pareto.csv").read_text().strip().split("\n")
        assert front_lines[0] == "individual,genome_0,objective_0,objective_1"
        assert len(front_lines) >= 2
        exported = sorted((out / "meshes").glob("front_*.obj"))
        assert len(exported) == len(front_lines) - 1


class TestExitCodes:
    def test_config_error_is_2(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("dataset: {}\n")
        assert main(["preprocess", "--config", str(bad)]) == 2

    def test_unknown_key_is_2(self, tmp_path):
        config, _ = write_mini_config(tmp_path)
        text = config.read_text() + "unknown_section:\n  a: 1\n"
        config.write_text(text)
        assert main(["train", "--config", str(config)]) == 2

    def test_missing_config_file_is_2(self, tmp_path):
        assert main(["train", "--config", str(tmp_path / "absent.yaml")]) == 2

    def test_missing_artifact_is_3(self, tmp_path, capsys):
        config, _ = write_mini_config(tmp_path)
        assert main(["train", "--config", str(config)]) == 3
        assert "preprocess" in capsys.readouterr().err

    def test_stage_order_enforced_for_export(self, tmp_path, capsys):
        config, _ = write_mini_config(tmp_path)
        assert main(["export", "--config", str(config)]) == 3
        err = capsys.readouterr().err
        assert "train" in err or "optimize" in err

    def test_divergence_is_4(self, tmp_path, capsys):
        config, _ = write_mini_config(
            tmp_path,
            training={"epochs": 5, "batch_size": 32,
                      "lr_weights": "1.0e+200", "lr_latents": "1.0e+200"},
        )
        assert main(["preprocess", "--config", str(config)]) == 0
        with np.errstate(over="ignore", invalid="ignore"):
            assert main(["train", "--config", str(config)]) == 4
        assert "divergence" in capsys.readouterr().err

    def test_missing_subcommand_is_argparse_2(self):
        with pytest.raises(SystemExit) as excinfo:
            main([])
        assert excinfo.value.code == 2

    def test_unknown_subcommand_is_argparse_2(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["frobnicate", "--config", "x.yaml"])
        assert excinfo.value.code == 2


class TestInvalidInputs:
    def _open_mesh(self, tmp_path):
        path = tmp_path / "open_patch.obj"
        path.write_text(
            "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n"
        )
        return path

    def test_non_watertight_input_aborts_with_3(self, tmp_path, capsys):
        patch = self._open_mesh(tmp_path)
        config, _ = write_mini_config(tmp_path)
        text = config.read_text().replace(
            "dataset:\n",
            f"dataset:\n  meshes:\n    - {patch}\n",
        )
        config.write_text(text)
        assert main(["preprocess", "--config", str(config)]) == 3
        assert "open_patch" in capsys.readouterr().err

    def test_skip_invalid_keeps_good_shapes(self, tmp_path, capsys):
        patch = self._open_mesh(tmp_path)
        config, out = write_mini_config(tmp_path)
        text = config.read_text().replace(
            "dataset:\n",
            f"dataset:\n  meshes:\n    - {patch}\n",
        )
        config.write_text(text)
        assert main(["preprocess", "--config", str(config), "--skip-invalid"]) == 0
        stdout = capsys.readouterr().out
        assert "skipped" in stdout
        kept = sorted(p.stem for p in (out / "samples").glob("*.json"))
        assert kept == ["000_sphere", "001_box"]

    def test_all_invalid_still_fails(self, tmp_path):
        patch = self._open_mesh(tmp_path)
        config = tmp_path / "only_bad.yaml"
        config.write_text(
            f"out: {tmp_path / 'run2'}\n"
            f"dataset:\n  meshes:\n    - {patch}\n"
        )
        assert main(["preprocess", "--config", str(config), "--skip-invalid"]) == 3


class TestOverridesAndRepro:
    def test_seed_override_changes_artifacts(self, tmp_path):
        config, out = write_mini_config(tmp_path)
        assert main(["preprocess", "--config", str(config)]) == 0
        first = (out / "samples" / "000_sphere.json").read_bytes()
        assert main(["preprocess", "--config", str(config), "--seed", "7"]) == 0
        second = (out / "samples" / "000_sphere.json").read_bytes()
        assert first != second

    def test_out_override_redirects_run_dir(self, tmp_path):
        config, _ = write_mini_config(tmp_path)
        other = tmp_path / "elsewhere"
        assert main(
            ["preprocess", "--config", str(config), "--out", str(other)]
        ) == 0
        assert (other / "samples" / "000_sphere.json").exists()

    def test_rerun_is_byte_identical(self, tmp_path):
        config, out = write_mini_config(tmp_path, name="a.yaml")
        artifacts = (
            "samples/000_sphere.json",
            "samples/001_box.json",
            "checkpoints/checkpoint.json",
            "report.csv",
            "fronts/generations.csv",
            "fronts/pareto.csv",
        )
        for stage in STAGES[:5]:  # through optimize
            assert main([stage, "--config", str(config)]) == 0
        first = {rel: (out / rel).read_bytes() for rel in artifacts}
        for stage in STAGES[:5]:
            assert main([stage, "--config", str(config)]) == 0
        for rel in artifacts:
            assert (out / rel).read_bytes() == first[rel], rel


class TestConsoleScript:
    def test_installed_entry_point_runs(self, tmp_path):
        config, out = write_mini_config(tmp_path)
        proc = subprocess.run(
            ["shapeforge", "preprocess", "--config", str(config)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert "watertight" in proc.stdout
        assert (out / "samples" / "000_sphere.json").exists()

    def test_module_invocation_runs(self, tmp_path):
        config, _ = write_mini_config(tmp_path)
        proc = subprocess.run(
            [sys.executable, "-m", "shapeforge.cli",
             "preprocess", "--config", str(config)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
