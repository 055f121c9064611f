"""
Module đọc/ghi bộ dữ liệu đồ thị dạng JSON-lines và dựng các split.

Mỗi dòng là một JSON object:
    {"num_nodes", "edges": [[u, v], ...], "node_feat", "edge_feat"?, "y", "split"?}
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.models.dataset import Dataset, Fold, Task
from src.models.errors import DataError, InvalidArgumentError, MalformedGraphError
from src.models.graph import Graph

logger = logging.getLogger(__name__)


SPLIT_NAMES = ("train", "valid", "test")
REQUIRED_FIELDS = ("num_nodes", "edges", "node_feat", "y")


def _is_int_array(values: Any) -> bool:
    array = np.asarray(values)
    return array.size > 0 and np.issubdtype(array.dtype, np.integer)


class GraphDataLoader:
    """
    Đọc và ghi Dataset ở định dạng JSON-lines (UTF-8, một object mỗi dòng).

    Hỗ trợ:
        - Đặc trưng số nguyên được hiểu là categorical (từ điển = max + 1 toàn file)
        - Suy ra task từ y: toàn số nguyên -> phân lớp, ngược lại -> hồi quy
        - Split cho sẵn qua trường "split"
        - Giới hạn số đồ thị (cap) sau khi xáo trộn có seed
    """

    @staticmethod
    def _parse_line(text: str, line_no: int) -> Dict[str, Any]:
        try:
            record = json.loads(text)
        except json.JSONDecodeError as e:
            raise DataError(f"JSON không hợp lệ: {e.msg}", line=line_no)
        if not isinstance(record, dict):
            raise DataError("Mỗi dòng phải là một JSON object", line=line_no)
        missing = [key for key in REQUIRED_FIELDS if key not in record]
        if missing:
            raise DataError(f"Thiếu trường {missing}", line=line_no)
        split = record.get("split")
        if split is not None and split not in SPLIT_NAMES:
            raise DataError(f"Split không hợp lệ: {split}", line=line_no)
        return record

    @staticmethod
    def _read_records(file_path: str) -> List[tuple]:
        path = Path(file_path)
        if not path.exists():
            raise FileNotFoundError(f"File không tồn tại: {file_path}")
        records = []
        with path.open("r", encoding="utf-8") as handle:
            for line_no, text in enumerate(handle, start=1):
                if text.strip():
                    records.append((line_no, GraphDataLoader._parse_line(text, line_no)))
        if not records:
            raise DataError(f"File không có đồ thị nào: {file_path}")
        return records

    @staticmethod
    def _vocab(records: List[tuple], key: str) -> Optional[tuple]:
        """Từ điển từng cột = max + 1 nếu mọi dòng đều là số nguyên."""
        arrays = [np.asarray(r[key]) for _, r in records if r.get(key) is not None]
        if not arrays or not all(_is_int_array(a) or a.size == 0 for a in arrays):
            return None
        nonempty = [a.reshape(len(a), -1) for a in arrays if a.size]
        if not nonempty:
            return None
        return tuple(int(v) + 1 for v in np.concatenate(nonempty, axis=0).max(axis=0))

    @classmethod
    def load_jsonl(cls, file_path: str, task: Optional[Task] = None, cap: int = 0,
                   seed: int = 0, name: Optional[str] = None) -> Dataset:
        """
        Đọc một bộ dữ liệu JSON-lines.

        Args:
            file_path (str): Đường dẫn file.
            task (Task, optional): Ép loại task; None thì suy ra từ y.
            cap (int): Giữ tối đa cap đồ thị (lấy cap phần tử đầu sau khi xáo trộn với seed).
            seed (int): Seed cho cap.

        Returns:
            Dataset: Đã kiểm tra bất biến.

        Raises:
            FileNotFoundError: File không tồn tại.
            DataError: Lỗi parse hoặc đồ thị sai, kèm số dòng.

        Example:
            >>> ds = GraphDataLoader.load_jsonl('data/zinc_subset.jsonl', cap=100)
        """
        records = cls._read_records(file_path)
        if cap and cap < len(records):
            keep = np.random.default_rng(seed).permutation(len(records))[:cap]
            records = [records[i] for i in keep]

        node_vocab = cls._vocab(records, "node_feat")
        edge_vocab = cls._vocab(records, "edge_feat")
        ys = [r["y"] for _, r in records]
        if task is None:
            if all(isinstance(y, int) and not isinstance(y, bool) for y in ys):
                task = Task.classify(max(2, max(ys) + 1))
            else:
                task = Task.regression()

        graphs, splits = [], {key: [] for key in SPLIT_NAMES}
        for i, (line_no, record) in enumerate(records):
            try:
                node_feat = np.asarray(record["node_feat"],
                                       dtype=np.int64 if node_vocab else np.float64)
                edge_feat = record.get("edge_feat")
                if edge_feat is not None:
                    edge_feat = np.asarray(edge_feat,
                                           dtype=np.int64 if edge_vocab else np.float64)
                y = record["y"]
                target = int(y) if task.is_classification else float(y)
                if task.is_classification and not 0 <= target < task.num_classes:
                    raise DataError(f"Nhãn {target} ngoài [0, {task.num_classes})", line=line_no)
                graphs.append(Graph(
                    num_nodes=int(record["num_nodes"]),
                    edges=np.asarray(record["edges"], dtype=np.int64).reshape(-1, 2),
                    node_feat=node_feat,
                    edge_feat=edge_feat,
                    target=target,
                    name=str(record.get("name", f"line{line_no}")),
                ))
            except (MalformedGraphError, ValueError, TypeError) as e:
                if isinstance(e, DataError):
                    raise
                raise DataError(str(e), line=line_no)
            if record.get("split"):
                splits[record["split"]].append(i)

        splits = {k: v for k, v in splits.items() if v}
        dataset = Dataset(
            name=name or Path(file_path).stem,
            graphs=graphs,
            task=task,
            splits=splits,
            node_vocab=node_vocab,
            edge_vocab=edge_vocab,
        )
        logger.info(f"✅ Đã đọc {len(dataset)} đồ thị từ {file_path} ({task.kind})")
        return dataset

    @staticmethod
    def to_records(dataset: Dataset) -> List[Dict[str, Any]]:
        """Chuyển dataset thành danh sách dict theo đúng tên trường JSON-lines."""
        split_of = {}
        for key, indices in dataset.splits.items():
            for i in indices:
                split_of[int(i)] = key
        records = []
        for i, g in enumerate(dataset.graphs):
            record: Dict[str, Any] = {
                "num_nodes": g.num_nodes,
                "edges": g.edges.tolist(),
                "node_feat": g.node_feat.tolist(),
            }
            if g.edge_feat is not None:
                record["edge_feat"] = g.edge_feat.tolist()
            if dataset.task.is_classification:
                record["y"] = int(g.target)
            else:
                record["y"] = float(g.target)
            if i in split_of:
                record["split"] = split_of[i]
            records.append(record)
        return records

    @classmethod
    def save_jsonl(cls, dataset: Dataset, file_path: str) -> int:
        """
        Ghi dataset ra file JSON-lines.

        Returns:
            int: Số dòng đã ghi.
        """
        path = Path(file_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        records = cls.to_records(dataset)
        with path.open("w", encoding="utf-8") as handle:
            for record in records:
                handle.write(json.dumps(record, ensure_ascii=False) + "\n")
        logger.info(f"💾 Đã ghi {len(records)} đồ thị vào {file_path}")
        return len(records)


def load_jsonl(file_path: str, task: Optional[Task] = None, cap: int = 0,
               seed: int = 0) -> Dataset:
    return GraphDataLoader.load_jsonl(file_path, task, cap, seed)


def save_jsonl(dataset: Dataset, file_path: str) -> int:
    return GraphDataLoader.save_jsonl(dataset, file_path)


# ============================================================================
# SPLIT
# ============================================================================

def kfold_split(dataset: Dataset, k: int = 5, stratified: bool = True, seed: int = 0,
                with_valid: bool = False) -> List[Fold]:
    """
    Chia k-fold: fold i lấy khối i làm test, phần còn lại làm train.

    Chế độ phân tầng xáo trộn từng lớp rồi rải vòng tròn qua các fold (tiếp nối
    vị trí giữa các lớp), nên số mẫu mỗi lớp trong mỗi fold lệch nhau tối đa 1.

    Args:
        with_valid (bool): Lấy khối (i + 1) mod k làm valid thay vì để valid rỗng.

    Raises:
        InvalidArgumentError: k < 2, hoặc phân tầng trên bài toán hồi quy.
        DataError: Một lớp có ít hơn k mẫu (phân tầng) hoặc dataset có ít hơn k đồ thị.
    """
    if k < 2:
        raise InvalidArgumentError(f"k phải >= 2, nhận {k}")
    n = len(dataset)
    if n < k:
        raise DataError(f"Không thể chia {n} đồ thị thành {k} fold")
    rng = np.random.default_rng(seed)
    assignment = np.empty(n, dtype=np.int64)
    if stratified:
        if not dataset.task.is_classification:
            raise InvalidArgumentError("Chia phân tầng chỉ áp dụng cho bài toán phân lớp")
        targets = dataset.targets()
        offset = 0
        for label in np.unique(targets):
            members = rng.permutation(np.flatnonzero(targets == label))
            if len(members) < k:
                raise DataError(f"Lớp {int(label)} chỉ có {len(members)} mẫu, ít hơn k = {k}")
            assignment[members] = (offset + np.arange(len(members))) % k
            offset += len(members)
    else:
        assignment[rng.permutation(n)] = np.arange(n) % k

    folds = []
    for i in range(k):
        test = np.flatnonzero(assignment == i)
        valid = np.flatnonzero(assignment == (i + 1) % k) if with_valid else np.zeros(0, np.int64)
        train = np.flatnonzero((assignment != i) & ~np.isin(np.arange(n), valid))
        folds.append(Fold(train=train, valid=valid, test=test))
    return folds


def random_split(dataset: Dataset, fractions: Sequence[float] = (0.8, 0.1, 0.1),
                 seed: int = 0) -> Dict[str, np.ndarray]:
    """Xáo trộn có seed rồi cắt theo tỉ lệ train/valid/test (test nhận phần dư)."""
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise InvalidArgumentError(f"fractions không hợp lệ: {list(fractions)}")
    n = len(dataset)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(np.floor(fractions[0] * n))
    n_valid = int(np.floor(fractions[1] * n))
    return {
        "train": np.sort(order[:n_train]),
        "valid": np.sort(order[n_train:n_train + n_valid]),
        "test": np.sort(order[n_train + n_valid:]),
    }


def full_split(dataset: Dataset) -> Dict[str, np.ndarray]:
    """
    Chế độ "full": train trên toàn bộ; trainer đánh giá test trên chính tập train
    khi cả valid lẫn test đều rỗng.
    """
    return {"train": np.arange(len(dataset), dtype=np.int64)}
