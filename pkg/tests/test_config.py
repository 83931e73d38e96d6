"""YAML run configuration: strict key checking, seed cascade, CLI
overrides, and the resolved echo."""

import pytest
import yaml

from shapeforge.config import (
    RunConfig,
    load_config,
    resolved_config_dict,
    write_config_echo,
)
from shapeforge.errors import ConfigError

MINIMAL = """
dataset:
  procedural:
    - kind: sphere
      count: 1
"""


def write(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadConfig:
    def test_minimal_document_gets_defaults(self, tmp_path):
        cfg = load_config(write(tmp_path, MINIMAL))
        assert cfg.seed == 0
        assert cfg.resolution == 64
        assert cfg.network.hidden_layers == 8
        assert cfg.network.hidden_width == 256
        assert cfg.network.latent_dim == 5
        assert cfg.network.levels == 6
        assert cfg.training.epochs == 2000
        assert cfg.training.lr_weights == pytest.approx(5e-4)
        assert cfg.training.lr_latents == pytest.approx(1e-3)
        assert cfg.training.w_lipschitz == pytest.approx(1e-7)
        assert cfg.training.delta == pytest.approx(0.1)
        assert cfg.ga.population_size == 10
        assert cfg.evaluation.n_points == 20000
        assert cfg.objectives == []

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.yaml")

    def test_invalid_yaml_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="invalid YAML"):
            load_config(write(tmp_path, "dataset: [unclosed"))

    def test_non_mapping_top_level_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="mapping"):
            load_config(write(tmp_path, "- just\n- a\n- list\n"))

    def test_unknown_top_level_key_rejected(self, tmp_path):
        text = MINIMAL + "lerning_rate: 0.1\n"
        with pytest.raises(ConfigError, match="lerning_rate"):
            load_config(write(tmp_path, text))

    def test_unknown_section_key_rejected(self, tmp_path):
        text = MINIMAL + "training:\n  epocs: 10\n"
        with pytest.raises(ConfigError, match="epocs"):
            load_config(write(tmp_path, text))

    def test_unknown_objective_key_rejected(self, tmp_path):
        text = MINIMAL + (
            "objectives:\n  - name: m\n    kind: mass\n    weight: 2\n"
        )
        with pytest.raises(ConfigError, match=r"objectives\[0\].*weight"):
            load_config(write(tmp_path, text))

    def test_empty_dataset_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="dataset"):
            load_config(write(tmp_path, "dataset: {}\n"))

    def test_section_validation_wrapped_with_location(self, tmp_path):
        text = MINIMAL + "ga:\n  population_size: 3\n"
        with pytest.raises(ConfigError, match="ga"):
            load_config(write(tmp_path, text))

    def test_objectives_parsed_in_order(self, tmp_path):
        text = MINIMAL + (
            "objectives:\n"
            "  - name: mass\n    kind: mass\n    direction: minimize\n"
            "  - name: stiff\n    kind: stiffness_proxy\n"
            "    direction: maximize\n    axis: z\n"
        )
        cfg = load_config(write(tmp_path, text))
        assert [o.name for o in cfg.objectives] == ["mass", "stiff"]
        assert cfg.objectives[1].direction == "maximize"
        assert cfg.objectives[1].axis == "z"


class TestSeedCascade:
    def test_top_level_seed_reaches_every_stage(self, tmp_path):
        cfg = load_config(write(tmp_path, MINIMAL + "seed: 11\n"))
        assert cfg.seed == 11
        assert cfg.sampling.seed == 11
        assert cfg.training.seed == 11
        assert cfg.ga.seed == 11
        assert cfg.evaluation.seed == 11

    def test_section_seed_beats_cascade(self, tmp_path):
        text = MINIMAL + "seed: 11\nga:\n  seed: 99\n"
        cfg = load_config(write(tmp_path, text))
        assert cfg.ga.seed == 99
        assert cfg.training.seed == 11

    def test_seed_override_beats_file(self, tmp_path):
        cfg = load_config(write(tmp_path, MINIMAL + "seed: 11\n"), seed_override=5)
        assert cfg.seed == 5
        assert cfg.training.seed == 5

    def test_override_does_not_beat_explicit_section_seed(self, tmp_path):
        text = MINIMAL + "seed: 11\ntraining:\n  seed: 42\n"
        cfg = load_config(write(tmp_path, text), seed_override=5)
        assert cfg.training.seed == 42
        assert cfg.ga.seed == 5


class TestOverrides:
    def test_out_and_resolution_and_margin(self, tmp_path):
        cfg = load_config(
            write(tmp_path, MINIMAL + "out: original\nresolution: 32\n"),
            out_override="elsewhere",
            resolution_override=16,
            bounds_margin_override=0.5,
        )
        assert cfg.out == "elsewhere"
        assert cfg.resolution == 16
        assert cfg.bounds_margin == pytest.approx(0.5)

    def test_bad_resolution_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="resolution"):
            load_config(write(tmp_path, MINIMAL + "resolution: 4\n"))

    def test_negative_margin_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="margin"):
            load_config(write(tmp_path, MINIMAL + "bounds_margin: -0.1\n"))


class TestEcho:
    def test_resolved_dict_is_plain_data(self, tmp_path):
        cfg = load_config(write(tmp_path, MINIMAL + "seed: 3\n"))
        doc = resolved_config_dict(cfg)
        assert doc["seed"] == 3
        assert doc["training"]["seed"] == 3
        assert isinstance(doc["network"], dict)
        assert isinstance(doc["dataset"]["procedural"], list)

    def test_echo_round_trips_and_is_deterministic(self, tmp_path):
        cfg = load_config(write(tmp_path, MINIMAL + "seed: 3\n"))
        p1, p2 = tmp_path / "echo1.yaml", tmp_path / "echo2.yaml"
        write_config_echo(cfg, p1)
        write_config_echo(cfg, p2)
        assert p1.read_bytes() == p2.read_bytes()
        doc = yaml.safe_load(p1.read_text())
        assert doc["training"]["epochs"] == 2000

    def test_echo_reloads_to_same_resolved_config(self, tmp_path):
        original = load_config(write(tmp_path, MINIMAL + "seed: 7\nresolution: 32\n"))
        echo_path = tmp_path / "echo.yaml"
        write_config_echo(original, echo_path)
        reloaded = load_config(echo_path)
        assert resolved_config_dict(reloaded) == resolved_config_dict(original)

    def test_two_shapes_recipe_parses(self):
        from pathlib import Path

        recipe = Path(__file__).resolve().parents[1] / "configs" / "two_shapes.yaml"
        cfg = load_config(recipe)
        assert isinstance(cfg, RunConfig)
        assert cfg.network.latent_dim == 1
        assert cfg.network.levels == 6
        assert cfg.training.epochs == 2000
        assert cfg.training.batch_size == 2048
        assert cfg.ga.population_size == 8
        assert cfg.ga.generations == 20
        assert len(cfg.objectives) == 2
