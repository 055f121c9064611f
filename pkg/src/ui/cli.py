"""
Giao diện dòng lệnh: gen-data | partition | posenc | train | eval.

Thứ tự ưu tiên cấu hình: giá trị mặc định < file --config < cờ dòng lệnh.
Lỗi được in ra stderr dưới dạng JSON {"error": kind, "message": ...} với mã
thoát: 2 (schema/đối số), 3 (I/O), 4 (dữ liệu), 1 (khác).
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.core.partition import extract_patches, patch_statistics
from src.core.posenc import compute_node_pe, patch_pe
from src.core.solvers.trainer import GraphMixerTrainer, run_cross_validation, train_loop
from src.models.config import (
    ENCODERS, GMHA_KINDS, MIXERS, PARTITIONERS, DatasetSpec, RunConfig,
)
from src.models.dataset import Dataset
from src.models.errors import (
    GraphMixerError, InvalidArgumentError, SchemaError,
)
from src.utils.checkpoint import load_checkpoint, read_checkpoint, save_checkpoint
from src.utils.data_loader import (
    full_split, kfold_split, load_jsonl, random_split, save_jsonl,
)
from src.utils.exporter import Exporter, to_jsonable
from src.utils.synthetic import gen_csl, gen_tree_match, gen_triangle_regression

logger = logging.getLogger(__name__)


DATASET_SOURCES = ("csl", "tree", "triangles")
DEFAULT_TRIANGLE_GRAPHS = 2000


class _Parser(argparse.ArgumentParser):
    """ArgumentParser ném InvalidArgumentError thay vì tự thoát."""

    def error(self, message: str) -> None:
        raise InvalidArgumentError(message)


# ============================================================================
# CẤU HÌNH
# ============================================================================

def _read_config_file(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"File không tồn tại: {path}")
    try:
        data = json.loads(file_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"Config không phải JSON hợp lệ: {e.msg}")
    if not isinstance(data, dict):
        raise SchemaError("Config phải là một JSON object")
    return data


def _apply_flags(data: Dict[str, Any], args: argparse.Namespace) -> Dict[str, Any]:
    """Ghi đè các khóa của file config bằng cờ dòng lệnh (nếu có)."""
    data = json.loads(json.dumps(data))
    model = data.setdefault("model", {})
    train = data.setdefault("train", {})
    dataset = data.setdefault("dataset", {})
    flag_map = {
        "encoder": (model, "encoder"),
        "mixer": (model, "mixer"),
        "gmha": (model, "gmha"),
        "patches": (model, "num_patches"),
        "khop": (model, "k_hop"),
        "drop_prob": (model, "drop_prob"),
        "partitioner": (model, "partitioner"),
        "epochs": (train, "epochs"),
    }
    for flag, (section, key) in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            section[key] = value
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        data["out"] = args.out
    source = getattr(args, "dataset", None)
    if source is not None:
        if source in DATASET_SOURCES:
            dataset["source"] = source
        else:
            dataset["source"] = "jsonl"
            dataset["path"] = source
    return data


def resolve_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig.from_dict(_apply_flags(_read_config_file(args.config), args))


# ============================================================================
# DATASET
# ============================================================================

def build_dataset(spec: DatasetSpec, seed: int) -> Dataset:
    """Sinh hoặc đọc dataset theo cấu hình rồi gắn split/fold."""
    if spec.source == "csl":
        dataset = gen_csl(seed)
    elif spec.source == "tree":
        dataset = gen_tree_match(spec.depth, spec.num_samples, seed)
    elif spec.source == "triangles":
        dataset = gen_triangle_regression(spec.num_samples or DEFAULT_TRIANGLE_GRAPHS, seed)
    else:
        dataset = load_jsonl(spec.path, cap=spec.cap, seed=seed)

    if spec.split == "random" or (spec.split == "given" and not dataset.splits):
        if spec.split == "given":
            logger.warning("⚠️ Dataset không có split cho sẵn, chia ngẫu nhiên theo fractions")
        return dataset.with_splits(random_split(dataset, spec.fractions, seed))
    if spec.split == "full":
        return dataset.with_splits(full_split(dataset))
    if spec.split == "kfold":
        stratified = spec.stratified and dataset.task.is_classification
        folds = kfold_split(dataset, spec.folds, stratified, seed)
        dataset = dataset.with_folds(folds)
        if spec.fold >= 0:
            fold = folds[spec.fold]
            return dataset.with_splits({"train": fold.train, "valid": fold.valid,
                                        "test": fold.test})
    return dataset


# ============================================================================
# SUBCOMMANDS
# ============================================================================

def cmd_gen_data(args: argparse.Namespace) -> Dict[str, Any]:
    seed = args.seed or 0
    if args.kind == "csl":
        dataset = gen_csl(seed)
    elif args.kind == "tree":
        dataset = gen_tree_match(args.depth, args.num_samples, seed)
    else:
        dataset = gen_triangle_regression(args.num_samples or DEFAULT_TRIANGLE_GRAPHS, seed)
    out = args.out or f"{args.kind}.jsonl"
    count = save_jsonl(dataset, out)
    return {"dataset": dataset.name, "graphs": count, "out": out}


def cmd_partition(args: argparse.Namespace) -> Dict[str, Any]:
    run_config = resolve_config(args)
    model = run_config.model
    dataset = build_dataset(run_config.dataset, run_config.seed)
    dumps = []
    for i, g in enumerate(dataset.graphs):
        patches = extract_patches(g, model.num_patches, model.k_hop, model.partitioner,
                                  model.epsilon, model.drop_prob if args.augment else 0.0,
                                  run_config.seed + i, model.refine_passes)
        dumps.append(Exporter.patch_set_dict(patches, patch_statistics(patches), g.name))
    out = Path(run_config.out)
    Exporter.export_json(run_config.to_dict(), str(out / "config.json"))
    path = Exporter.export_json({"graphs": dumps}, str(out / "patches.json"))
    return {"graphs": len(dumps), "out": path}


def cmd_posenc(args: argparse.Namespace) -> Dict[str, Any]:
    run_config = resolve_config(args)
    model = run_config.model
    dataset = build_dataset(run_config.dataset, run_config.seed)
    dumps = []
    for i, g in enumerate(dataset.graphs):
        node = compute_node_pe(g, model.node_pe, model.node_pe_dim)
        entry = Exporter.node_pe_dict(node.values, node.kind, g.name)
        if model.patch_pe_dim > 0:
            patches = extract_patches(g, model.num_patches, model.k_hop, model.partitioner,
                                      model.epsilon, 0.0, run_config.seed + i,
                                      model.refine_passes)
            entry["patch_pe"] = patch_pe(patches.coarse_adj, model.patch_pe_dim,
                                         model.patch_pe_binary)
        dumps.append(entry)
    out = Path(run_config.out)
    Exporter.export_json(run_config.to_dict(), str(out / "config.json"))
    path = Exporter.export_json({"graphs": dumps}, str(out / "posenc.json"))
    return {"graphs": len(dumps), "out": path}


def cmd_train(args: argparse.Namespace) -> Dict[str, Any]:
    run_config = resolve_config(args)
    out = Path(run_config.out)
    dataset = build_dataset(run_config.dataset, run_config.seed)
    Exporter.export_json(run_config.to_dict(), str(out / "config.json"))

    if run_config.dataset.split == "kfold" and run_config.dataset.fold < 0:
        result = run_cross_validation(run_config.model, run_config.train, dataset,
                                      run_config.seed)
        for i, record in enumerate(result.records):
            Exporter.export_record_csv(record, str(out / f"record_fold{i}.csv"))
        summary = result.to_dict()
        Exporter.export_json(summary, str(out / "summary.json"))
        return summary

    result = train_loop(run_config.model, run_config.train, dataset, run_config.seed)
    model_config = result.model.config
    save_checkpoint(result.params, {**run_config.to_dict(), "model": model_config.to_dict()},
                    str(out / "checkpoint.bin"))
    Exporter.export_record_csv(result.record, str(out / "record.csv"))
    summary = {**result.record.summary(), "metrics": result.metrics}
    Exporter.export_json(summary, str(out / "summary.json"))
    if run_config.train.export_excel:
        Exporter.export_record_excel(result.record, str(out / "record.xlsx"))
    if run_config.train.plot and not result.record.is_empty():
        Exporter.plot_learning_curve(result.record, str(out / "learning_curve.png"),
                                     title=dataset.name)
    return summary


def evaluate_checkpoint(checkpoint: str, dataset_override: Optional[str] = None,
                        split: str = "test") -> Dict[str, Any]:
    """Nạp checkpoint, dựng lại dataset theo config đã lưu và tính metric trên split."""
    _, saved = read_checkpoint(checkpoint)
    run_config = RunConfig.from_dict(saved)
    if dataset_override is not None:
        args = argparse.Namespace(dataset=dataset_override)
        run_config = RunConfig.from_dict(_apply_flags(run_config.to_dict(), args))
    dataset = build_dataset(run_config.dataset, run_config.seed)
    trainer = GraphMixerTrainer(run_config.model, run_config.train, dataset, run_config.seed,
                                require_train=False)
    load_checkpoint(trainer.params, checkpoint)

    indices = dataset.splits.get(split)
    if indices is None or len(indices) == 0:
        logger.warning("⚠️ Không có split '%s', đánh giá trên toàn bộ dataset", split)
        indices = np.arange(len(dataset))
    metrics = trainer.evaluate([int(i) for i in indices])
    return {"split": split, "num_graphs": int(len(indices)), "metrics": metrics}


def cmd_eval(args: argparse.Namespace) -> Dict[str, Any]:
    return evaluate_checkpoint(args.checkpoint, args.dataset, args.split)


# ============================================================================
# PARSER
# ============================================================================

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="File JSON RunConfig")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--out", help="Thư mục (hoặc file) đầu ra")
    parser.add_argument("--dataset", help="csl | tree | triangles | đường dẫn .jsonl")


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--encoder", choices=ENCODERS)
    parser.add_argument("--mixer", choices=MIXERS)
    parser.add_argument("--gmha", choices=GMHA_KINDS)
    parser.add_argument("--patches", type=int, help="Số patch P")
    parser.add_argument("--khop", type=int, help="Số bước mở rộng patch")
    parser.add_argument("--drop-prob", dest="drop_prob", type=float)
    parser.add_argument("--partitioner", choices=PARTITIONERS)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="graph-mixer", description="Graph MLP-Mixer / Graph ViT engine")
    parser.add_argument("--log-level", default="INFO",
                        choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    gen = sub.add_parser("gen-data", help="Sinh dataset tổng hợp ra JSON-lines")
    gen.add_argument("kind", choices=DATASET_SOURCES)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out")
    gen.add_argument("--depth", type=int, default=2, help="Độ sâu cây (tree)")
    gen.add_argument("--num-samples", dest="num_samples", type=int, default=0)

    part = sub.add_parser("partition", help="Dump tập patch của từng đồ thị")
    _add_common(part)
    _add_model_flags(part)
    part.add_argument("--augment", action="store_true", help="Bật xóa cạnh với drop_prob")

    pos = sub.add_parser("posenc", help="Dump PE mức đỉnh và mức patch")
    _add_common(pos)
    _add_model_flags(pos)

    train = sub.add_parser("train", help="Huấn luyện và lưu checkpoint + lịch sử")
    _add_common(train)
    _add_model_flags(train)
    train.add_argument("--epochs", type=int)

    ev = sub.add_parser("eval", help="Đánh giá một checkpoint")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--dataset")
    ev.add_argument("--split", default="test", choices=("train", "valid", "test"))
    return parser


COMMANDS = {
    "gen-data": cmd_gen_data,
    "partition": cmd_partition,
    "posenc": cmd_posenc,
    "train": cmd_train,
    "eval": cmd_eval,
}


def _fail(kind: str, message: str, code: int, extra: Optional[Dict[str, Any]] = None) -> int:
    payload = {"error": kind, "message": message, **(extra or {})}
    print(json.dumps(payload, ensure_ascii=False), file=sys.stderr)
    return code


def run(argv: Sequence[str]) -> int:
    """
    Chạy một subcommand.

    Returns:
        int: Mã thoát (0 khi thành công).
    """
    try:
        args = build_parser().parse_args(list(argv))
        if args.command is None:
            raise InvalidArgumentError("Thiếu subcommand: gen-data | partition | posenc | train | eval")
        logging.basicConfig(level=getattr(logging, args.log_level),
                            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
                            stream=sys.stderr)
        result = COMMANDS[args.command](args)
    except GraphMixerError as e:
        logger.debug("Lỗi %s", e.kind, exc_info=True)
        payload = e.to_dict()
        return _fail(payload.pop("error", e.kind), payload.pop("message", str(e)),
                     e.exit_code, payload)
    except OSError as e:
        return _fail("io", str(e), 3)
    print(json.dumps(to_jsonable(result), ensure_ascii=False, sort_keys=True))
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    return run(sys.argv[1:] if argv is None else argv)
