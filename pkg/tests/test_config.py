"""Experiment configuration: serialization and environment overrides."""

import json

import pytest

from beac.config import (
    ExperimentConfig,
    apply_env_overrides,
    load_config,
    save_config,
)
from beac.env import EnvConfig
from beac.models import ModelConfig
from beac.training import TrainConfig


def test_dict_round_trip_preserves_everything():
    cfg = ExperimentConfig(
        env=EnvConfig(sigma=0.05, horizon=123, goal_pos=(0.2, 0.1)),
        model=ModelConfig(variant="beac_no_past", hidden_dim=32, k=7),
        train=TrainConfig(epochs=9, batch_size=4, lr=3e-4, seed=2),
        n_demos=17, demo_seed=5, task_only=True,
        eval_episodes=3, eval_seed_base=777)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_file_round_trip_is_byte_stable(tmp_path):
    p1, p2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    cfg = ExperimentConfig(n_demos=12)
    save_config(p1, cfg)
    save_config(p2, load_config(p1))
    assert open(p1, "rb").read() == open(p2, "rb").read()
    assert load_config(p1) == cfg


def test_unknown_fields_are_rejected_by_name(tmp_path):
    d = ExperimentConfig().to_dict()
    d["train"]["misspelled"] = 1
    with pytest.raises(ValueError, match="misspelled"):
        ExperimentConfig.from_dict(d)
    d2 = ExperimentConfig().to_dict()
    d2["bogus_top"] = 1
    with pytest.raises(ValueError, match="bogus_top"):
        ExperimentConfig.from_dict(d2)


def test_env_overrides_parse_by_declared_type():
    cfg = apply_env_overrides(ExperimentConfig(), {
        "BEAC_TRAIN__EPOCHS": "41",
        "BEAC_TRAIN__LR": "5e-4",
        "BEAC_MODEL__VARIANT": "bc_switch",
        "BEAC_ENV__SIGMA": "0.07",
        "BEAC_ENV__GOAL_POS": "0.25,-0.1",
        "BEAC_TASK_ONLY": "yes",
        "BEAC_N_DEMOS": "33",
        "UNRELATED": "ignored",
    })
    assert cfg.train.epochs == 41
    assert cfg.train.lr == 5e-4
    assert cfg.model.variant == "bc_switch"
    assert cfg.env.sigma == 0.07
    assert cfg.env.goal_pos == (0.25, -0.1)
    assert cfg.task_only is True
    assert cfg.n_demos == 33
    # untouched fields keep their defaults
    assert cfg.train.batch_size == ExperimentConfig().train.batch_size


@pytest.mark.parametrize("raw,expected", [
    ("1", True), ("true", True), ("ON", True),
    ("0", False), ("False", False), ("off", False),
])
def test_bool_override_spellings(raw, expected):
    cfg = apply_env_overrides(ExperimentConfig(), {"BEAC_TASK_ONLY": raw})
    assert cfg.task_only is expected


def test_override_errors_name_the_variable():
    with pytest.raises(ValueError, match="BEAC_TRAIN__EPOCHS"):
        apply_env_overrides(ExperimentConfig(), {"BEAC_TRAIN__EPOCHS": "many"})
    with pytest.raises(ValueError, match="BEAC_TASK_ONLY"):
        apply_env_overrides(ExperimentConfig(), {"BEAC_TASK_ONLY": "maybe"})
    with pytest.raises(ValueError, match="nope"):
        apply_env_overrides(ExperimentConfig(), {"BEAC_NOPE__EPOCHS": "3"})
    with pytest.raises(ValueError, match="wrong"):
        apply_env_overrides(ExperimentConfig(), {"BEAC_TRAIN__WRONG": "3"})
    with pytest.raises(ValueError, match="BEAC_TRAIN"):
        apply_env_overrides(ExperimentConfig(), {"BEAC_TRAIN": "3"})


def test_no_matching_variables_returns_config_unchanged():
    base = ExperimentConfig()
    assert apply_env_overrides(base, {"PATH": "/bin"}) is base


def test_overrides_layer_on_top_of_file_config(tmp_path):
    p = str(tmp_path / "cfg.json")
    save_config(p, ExperimentConfig(train=TrainConfig(epochs=7, lr=0.01)))
    cfg = apply_env_overrides(load_config(p), {"BEAC_TRAIN__EPOCHS": "2"})
    assert cfg.train.epochs == 2   # env wins
    assert cfg.train.lr == 0.01    # file value survives


def test_config_json_has_no_nan(tmp_path):
    p = str(tmp_path / "cfg.json")
    save_config(p, ExperimentConfig())
    text = open(p).read()
    json.loads(text)
    assert "NaN" not in text
