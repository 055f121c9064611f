"""
Test cho tầng dữ liệu: đọc/ghi JSON-lines, chia split/k-fold, bộ sinh dữ liệu
tổng hợp, checkpoint và xuất kết quả.
"""

import json
import math
import struct
import sys
from pathlib import Path

import numpy as np
import pytest
from openpyxl import load_workbook

project_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(project_root))

from src.core.layers import Linear, ModelParams
from src.core.solvers.trainer import train_loop
from src.models.config import ModelConfig, TrainConfig
from src.models.dataset import Dataset, Task
from src.models.errors import CheckpointError, DataError, InvalidArgumentError
from src.models.graph import Graph
from src.models.run_record import EpochRecord, RunRecord
from src.utils.checkpoint import load_checkpoint, read_checkpoint, save_checkpoint
from src.utils.data_loader import (
    full_split, kfold_split, load_jsonl, random_split, save_jsonl,
)
from src.utils.exporter import Exporter, to_jsonable
from src.utils.synthetic import (
    CSL_NODES, gen_csl, gen_tree_match, gen_triangle_regression, triangle_count,
)


def write_lines(path, records):
    path.write_text("\n".join(r if isinstance(r, str) else json.dumps(r) for r in records)
                    + "\n", encoding="utf-8")
    return str(path)


def triangle_record(y, split=None):
    record = {"num_nodes": 3, "edges": [[0, 1], [1, 2], [0, 2]],
              "node_feat": [[0.5], [1.5], [2.5]], "y": y}
    if split:
        record["split"] = split
    return record


# ============================================================
# JSON-lines
# ============================================================

def test_load_jsonl_regression_with_splits(tmp_path):
    path = write_lines(tmp_path / "reg.jsonl", [
        triangle_record(0.5, "train"), "", triangle_record(1.25, "train"),
        triangle_record(2.0, "test"),
    ])
    ds = load_jsonl(path)
    assert len(ds) == 3
    assert ds.task.kind == "regression"
    assert ds.splits["train"].tolist() == [0, 1]
    assert ds.splits["test"].tolist() == [2]
    assert "valid" not in ds.splits
    assert ds.node_vocab is None
    assert ds[1].target == 1.25


def test_load_jsonl_infers_classification_and_vocab(tmp_path):
    path = write_lines(tmp_path / "cls.jsonl", [
        {"num_nodes": 2, "edges": [[0, 1]], "node_feat": [[0], [2]],
         "edge_feat": [[1]], "y": 0},
        {"num_nodes": 2, "edges": [], "node_feat": [[1], [1]], "y": 3},
    ])
    ds = load_jsonl(path)
    assert ds.task.is_classification
    assert ds.task.num_classes == 4
    assert ds.node_vocab == (3,)
    assert ds.edge_vocab == (2,)
    assert ds[0].categorical_nodes


def test_load_jsonl_reports_line_numbers(tmp_path):
    path = write_lines(tmp_path / "bad.jsonl", [triangle_record(1.0), "{not json"])
    with pytest.raises(DataError) as info:
        load_jsonl(path)
    assert info.value.line == 2

    path = write_lines(tmp_path / "range.jsonl", [
        {"num_nodes": 2, "edges": [[0, 5]], "node_feat": [[1.0], [1.0]], "y": 1.0},
    ])
    with pytest.raises(DataError) as info:
        load_jsonl(path)
    assert info.value.line == 1
    assert info.value.to_dict()["line"] == 1


def test_load_jsonl_missing_field_and_bad_split(tmp_path):
    with pytest.raises(DataError):
        load_jsonl(write_lines(tmp_path / "a.jsonl", [{"num_nodes": 1, "edges": []}]))
    with pytest.raises(DataError):
        load_jsonl(write_lines(tmp_path / "b.jsonl", [triangle_record(1.0, "holdout")]))
    with pytest.raises(DataError):
        load_jsonl(write_lines(tmp_path / "c.jsonl", [""]))
    with pytest.raises(FileNotFoundError):
        load_jsonl(str(tmp_path / "missing.jsonl"))


def test_load_jsonl_forced_task_rejects_label(tmp_path):
    path = write_lines(tmp_path / "label.jsonl", [triangle_record(5)])
    with pytest.raises(DataError):
        load_jsonl(path, task=Task.classify(3))


def test_load_jsonl_cap(tmp_path):
    path = write_lines(tmp_path / "many.jsonl", [triangle_record(float(i)) for i in range(10)])
    assert len(load_jsonl(path, cap=4, seed=1)) == 4
    assert len(load_jsonl(path, cap=20)) == 10


def test_save_then_load_keeps_graphs_and_splits(tmp_path):
    ds = gen_tree_match(1)
    path = tmp_path / "tree.jsonl"
    assert save_jsonl(ds, str(path)) == len(ds)
    loaded = load_jsonl(str(path), task=ds.task)
    assert [g.num_edges for g in loaded.graphs] == [g.num_edges for g in ds.graphs]
    assert loaded.targets().tolist() == ds.targets().tolist()
    for key, indices in ds.splits.items():
        if len(indices):
            assert loaded.splits[key].tolist() == indices.tolist()


def zinc_like_records(count=100, seed=0):
    """Phân tử giả: khung cây + vài vòng, loại nguyên tử/liên kết categorical, y thực."""
    rng = np.random.default_rng(seed)
    splits = ["train"] * 80 + ["valid"] * 10 + ["test"] * 10
    records = []
    for i in range(count):
        n = int(rng.integers(9, 24))
        edges = {(int(rng.integers(0, v)), v) for v in range(1, n)}
        for _ in range(int(rng.integers(0, 3))):
            u, v = sorted(int(x) for x in rng.choice(n, size=2, replace=False))
            edges.add((u, v))
        atoms = rng.integers(0, 6, size=n)
        bonds = rng.integers(0, 3, size=len(edges))
        y = float(np.mean(atoms == 1) * 3.0 - 0.2 * (len(edges) - n + 1))
        records.append({
            "num_nodes": n, "edges": sorted(edges),
            "node_feat": [[int(a)] for a in atoms], "edge_feat": [[int(b)] for b in bonds],
            "y": y, "split": splits[i % len(splits)],
        })
    return records


def test_zinc_like_fixture_trains(tmp_path):
    """Bộ 100 đồ thị JSON-lines kiểu ZINC: đọc được và loss train giảm."""
    ds = load_jsonl(write_lines(tmp_path / "zinc.jsonl", zinc_like_records()))
    assert len(ds) == 100
    assert ds.task.kind == "regression"
    assert ds.node_vocab == (6,) and ds.edge_vocab == (3,)
    assert [len(ds.splits[k]) for k in ("train", "valid", "test")] == [80, 10, 10]
    config = ModelConfig(hidden=16, encoder_layers=2, mixer_layers=2, num_patches=4,
                         node_pe="rwse", node_pe_dim=4, patch_pe_dim=2, drop_prob=0.0)
    result = train_loop(config, TrainConfig(epochs=8, batch_size=16, lr=0.01), ds, seed=0)
    losses = [r.train_loss for r in result.record.epochs]
    assert losses[-1] < losses[0]
    assert np.isfinite(result.metrics["test"]["mae"])


# ============================================================
# Split
# ============================================================

def test_kfold_stratified_is_balanced_and_disjoint():
    ds = gen_csl(0)
    folds = kfold_split(ds, 5, stratified=True, seed=0)
    assert len(folds) == 5
    all_test = np.concatenate([f.test for f in folds])
    assert sorted(all_test.tolist()) == list(range(len(ds)))
    for fold in folds:
        assert np.bincount(ds.targets(fold.test), minlength=10).tolist() == [3] * 10
        assert not set(fold.train) & set(fold.test)
        assert len(fold.train) + len(fold.test) == len(ds)
    ds.with_folds(folds)


def test_kfold_with_valid_and_unstratified():
    ds = gen_csl(1)
    folds = kfold_split(ds, 5, stratified=False, seed=3, with_valid=True)
    for fold in folds:
        assert len(fold.test) == 30 and len(fold.valid) == 30 and len(fold.train) == 90
        assert not set(fold.valid) & (set(fold.train) | set(fold.test))


def test_kfold_invalid_requests():
    ds = gen_csl(0)
    with pytest.raises(InvalidArgumentError):
        kfold_split(ds, 1)
    with pytest.raises(DataError):
        kfold_split(ds, 16)
    with pytest.raises(InvalidArgumentError):
        kfold_split(gen_triangle_regression(20), 5, stratified=True)


def test_random_and_full_split():
    ds = gen_triangle_regression(10, seed=2)
    parts = random_split(ds, (0.8, 0.1, 0.1), seed=0)
    assert [len(parts[k]) for k in ("train", "valid", "test")] == [8, 1, 1]
    assert sorted(np.concatenate(list(parts.values())).tolist()) == list(range(10))
    with pytest.raises(InvalidArgumentError):
        random_split(ds, (0.5, 0.5, 0.5))
    assert full_split(ds)["train"].tolist() == list(range(10))


def test_overlapping_splits_rejected():
    ds = gen_triangle_regression(5)
    with pytest.raises(DataError):
        ds.with_splits({"train": [0, 1], "test": [1, 2]})
    with pytest.raises(DataError):
        ds.with_splits({"train": [7]})


# ============================================================
# Dữ liệu tổng hợp
# ============================================================

def test_gen_csl_shape_and_regularity():
    ds = gen_csl(0)
    assert len(ds) == 150
    assert ds.task.num_classes == 10
    assert np.bincount(ds.targets()).tolist() == [15] * 10
    for g in ds.graphs:
        assert g.num_nodes == CSL_NODES
        assert np.all(np.asarray(g.adjacency.sum(axis=1)).ravel() == 4)


def test_gen_tree_match_enumerates_depth_two():
    ds = gen_tree_match(2)
    assert len(ds) == math.factorial(4) * 4 == 96
    assert ds.task.num_classes == 4
    g = ds[0]
    assert g.num_nodes == 7 and g.num_edges == 6
    assert g.node_feat.shape == (7, 9)
    assert g.node_feat[0, 8] == 1.0
    assert [len(ds.splits[k]) for k in ("train", "valid", "test")] == [76, 9, 11]


def test_gen_tree_match_target_is_label_of_matching_leaf():
    for g in gen_tree_match(2, num_samples=20, seed=4).graphs:
        feat = g.node_feat
        target_key = int(np.argmax(feat[0, :4]))
        leaf = 3 + int(np.flatnonzero(feat[3:, target_key])[0])
        assert int(np.argmax(feat[leaf, 4:8])) == g.target


def test_gen_tree_match_invalid():
    with pytest.raises(InvalidArgumentError):
        gen_tree_match(0)
    with pytest.raises(InvalidArgumentError):
        gen_tree_match(3)
    assert len(gen_tree_match(3, num_samples=10)) == 10


def test_triangle_count_and_regression_targets():
    k4 = Graph(num_nodes=4, edges=[(i, j) for i in range(4) for j in range(i + 1, 4)],
               node_feat=np.ones(4))
    assert triangle_count(k4) == 4
    ds = gen_triangle_regression(20, seed=1)
    assert ds.task.kind == "regression"
    for g in ds.graphs:
        assert 10 <= g.num_nodes <= 30
        assert g.target == pytest.approx(triangle_count(g) / g.num_nodes)
    with pytest.raises(InvalidArgumentError):
        gen_triangle_regression(0)


# ============================================================
# Checkpoint
# ============================================================

def test_checkpoint_roundtrip(tmp_path):
    params = ModelParams(seed=1)
    Linear(params, "fc", 3, 2)
    path = save_checkpoint(params, {"hidden": 3}, str(tmp_path / "ckpt" / "model.bin"))
    restored = ModelParams(seed=99)
    Linear(restored, "fc", 3, 2)
    assert load_checkpoint(restored, path) == {"hidden": 3}
    for name in params.names():
        assert np.array_equal(restored[name].data, params[name].data)


def test_checkpoint_corrupt_files(tmp_path):
    short = tmp_path / "short.bin"
    short.write_bytes(b"abc")
    with pytest.raises(CheckpointError):
        read_checkpoint(str(short))
    truncated = tmp_path / "truncated.bin"
    truncated.write_bytes(struct.pack("<Q", 1000) + b"{}")
    with pytest.raises(CheckpointError):
        read_checkpoint(str(truncated))
    garbage = tmp_path / "garbage.bin"
    garbage.write_bytes(struct.pack("<Q", 4) + b"nope")
    with pytest.raises(CheckpointError):
        read_checkpoint(str(garbage))
    with pytest.raises(FileNotFoundError):
        read_checkpoint(str(tmp_path / "none.bin"))


def test_checkpoint_shape_mismatch(tmp_path):
    params = ModelParams()
    Linear(params, "fc", 3, 2)
    path = save_checkpoint(params, {}, str(tmp_path / "a.bin"))
    other = ModelParams()
    Linear(other, "fc", 4, 2)
    with pytest.raises(CheckpointError):
        load_checkpoint(other, path)


# ============================================================
# Xuất kết quả
# ============================================================

def sample_record():
    record = RunRecord(metric_name="mae", higher_is_better=False)
    for epoch, (loss, valid) in enumerate([(1.0, 0.8), (0.7, 0.5), (0.6, 0.5)], start=1):
        record.add(EpochRecord(epoch, loss, valid, valid + 0.1, 0.01))
    return record


def test_run_record_keeps_earliest_best():
    record = sample_record()
    assert record.selected_epoch == 2
    summary = record.summary()
    assert summary["best_valid"] == 0.5
    assert summary["test_at_best_valid"] == pytest.approx(0.6)
    assert summary["final_train_loss"] == 0.6


def test_export_csv_json_excel_and_plot(tmp_path):
    record = sample_record()
    csv_path = Exporter.export_record_csv(record, str(tmp_path / "out" / "record.csv"))
    lines = Path(csv_path).read_text(encoding="utf-8").splitlines()
    assert lines[0] == "epoch,train_loss,valid_metric,test_metric,seconds"
    assert len(lines) == 4

    json_path = Exporter.export_json({"x": float("nan"), "a": np.arange(2)},
                                     str(tmp_path / "summary.json"))
    assert json.loads(Path(json_path).read_text(encoding="utf-8")) == {"a": [0, 1], "x": None}

    xlsx = tmp_path / "record.xlsx"
    assert Exporter.export_record_excel(record, str(xlsx))
    sheet = load_workbook(xlsx)["Lich_Su"]
    assert sheet.cell(1, 1).value == "Epoch"
    assert sheet.cell(3, 1).fill.start_color.rgb.endswith("FFF2CC")

    png = Exporter.plot_learning_curve(record, str(tmp_path / "curve.png"))
    assert Path(png).stat().st_size > 0


def test_excel_export_of_empty_record(tmp_path):
    empty = RunRecord(metric_name="accuracy", higher_is_better=True)
    assert not Exporter.export_record_excel(empty, str(tmp_path / "empty.xlsx"))


def test_to_jsonable_converts_numpy():
    data = to_jsonable({"a": np.float64(1.5), "b": (np.int64(2), float("inf"))})
    assert data == {"a": 1.5, "b": [2, None]}
