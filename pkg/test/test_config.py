"""Test cho các dataclass cấu hình: schema, miền giá trị và round-trip qua dict."""

import sys
from dataclasses import replace
from pathlib import Path

import pytest

project_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(project_root))

from src.models.config import DatasetSpec, ModelConfig, RunConfig, TrainConfig
from src.models.errors import SchemaError
from src.utils.synthetic import gen_csl, gen_tree_match


def test_defaults_are_valid():
    config = RunConfig.from_dict({})
    assert config.model.drop_prob == 0.3
    assert config.model.partitioner == "metis"
    assert config.model.token_width == 16
    assert config.model.channel_width == 4 * config.model.hidden
    assert config.train.clip_norm == 5.0


def test_run_config_roundtrip():
    data = {"model": {"hidden": 16, "mixer": "vit", "gmha": "kernel"},
            "train": {"epochs": 3}, "dataset": {"source": "tree", "depth": 3},
            "seed": 7, "out": "runs/x"}
    config = RunConfig.from_dict(data)
    again = RunConfig.from_dict(config.to_dict())
    assert again.to_dict() == config.to_dict()
    assert again.model.gmha == "kernel" and again.dataset.depth == 3


@pytest.mark.parametrize("section,values,bad_key", [
    ("model", {"hidden": 0}, "hidden"),
    ("model", {"drop_prob": 1.0}, "drop_prob"),
    ("model", {"encoder": "gin"}, "encoder"),
    ("model", {"mixer": "vit", "hidden": 10, "heads": 4}, "heads"),
    ("model", {"task": "classification", "num_classes": 1}, "num_classes"),
    ("train", {"lr": 0.0}, "lr"),
    ("train", {"beta2": 1.0}, "beta2"),
    ("dataset", {"source": "jsonl"}, "path"),
    ("dataset", {"split": "kfold", "folds": 5, "fold": 5}, "folds"),
    ("dataset", {"fractions": [0.5, 0.5, 0.5]}, "fractions"),
])
def test_invalid_values_name_their_keys(section, values, bad_key):
    with pytest.raises(SchemaError) as info:
        RunConfig.from_dict({section: values})
    assert bad_key in info.value.keys


def test_fold_minus_one_means_all_folds():
    spec = DatasetSpec.from_dict({"split": "kfold", "folds": 3, "fold": -1})
    assert spec.fold == -1


def test_with_dataset_fills_input_sizes():
    config = ModelConfig().with_dataset(gen_tree_match(2))
    assert config.task == "classification"
    assert config.num_classes == 4
    assert config.node_in_dim == 9
    assert config.output_dim == 4
    csl = ModelConfig().with_dataset(gen_csl(0))
    assert csl.num_classes == 10 and csl.node_in_dim == 1 and csl.edge_in_dim == 0


def test_token_and_channel_width_overrides():
    config = replace(ModelConfig(num_patches=7), token_dim=5, channel_dim=12)
    assert config.token_width == 5 and config.channel_width == 12
    assert ModelConfig(num_patches=7).token_width == 4


def test_train_config_rejects_unknown_key():
    with pytest.raises(SchemaError) as info:
        TrainConfig.from_dict({"epoch": 3})
    assert info.value.keys == ["epoch"]
