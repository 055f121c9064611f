"""
Data class cho bộ dữ liệu đồ thị: danh sách Graph, loại bài toán và các split.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.models.errors import DataError, InvalidArgumentError
from src.models.graph import Graph


REGRESSION = "regression"
CLASSIFICATION = "classification"


@dataclass(frozen=True)
class Task:
    """
    Loại bài toán mức đồ thị.

    Attributes:
        kind (str): "regression" hoặc "classification".
        num_classes (int): n_c (chỉ có nghĩa khi classification).
    """

    kind: str = REGRESSION
    num_classes: int = 1

    def __post_init__(self) -> None:
        if self.kind not in (REGRESSION, CLASSIFICATION):
            raise InvalidArgumentError(f"Loại task không hợp lệ: {self.kind}")
        if self.kind == CLASSIFICATION and self.num_classes < 2:
            raise InvalidArgumentError("Bài toán phân lớp cần ít nhất 2 lớp")

    @property
    def is_classification(self) -> bool:
        return self.kind == CLASSIFICATION

    @property
    def output_dim(self) -> int:
        return self.num_classes if self.is_classification else 1

    @classmethod
    def regression(cls) -> "Task":
        return cls(REGRESSION, 1)

    @classmethod
    def classify(cls, num_classes: int) -> "Task":
        return cls(CLASSIFICATION, int(num_classes))

    def to_dict(self) -> Dict[str, object]:
        return {"kind": self.kind, "num_classes": self.num_classes}


@dataclass(frozen=True)
class Fold:
    """Một fold: ba danh sách chỉ số rời nhau (valid có thể rỗng)."""

    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Tập đồ thị có nhãn.

    Attributes:
        name (str): Tên bộ dữ liệu (csl, tree_r3, triangles, ...).
        graphs (Tuple[Graph, ...]): Danh sách đồ thị theo thứ tự.
        task (Task): Hồi quy hoặc phân lớp n_c lớp.
        splits (Dict[str, np.ndarray]): "train"/"valid"/"test" -> chỉ số.
        folds (List[Fold]): Gán k-fold (có thể rỗng).
        node_vocab / edge_vocab: Kích thước từ điển categorical (nếu có).
    """

    name: str
    graphs: Tuple[Graph, ...]
    task: Task
    splits: Dict[str, np.ndarray] = field(default_factory=dict)
    folds: Tuple[Fold, ...] = ()
    node_vocab: Optional[Tuple[int, ...]] = None
    edge_vocab: Optional[Tuple[int, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "graphs", tuple(self.graphs))
        object.__setattr__(self, "folds", tuple(self.folds))
        object.__setattr__(
            self, "splits",
            {k: np.asarray(v, dtype=np.int64) for k, v in self.splits.items()},
        )
        self.validate()

    def __len__(self) -> int:
        return len(self.graphs)

    def __getitem__(self, i: int) -> Graph:
        return self.graphs[i]

    def validate(self) -> None:
        """
        Kiểm tra bất biến: chỉ số split trong phạm vi và rời nhau, nhãn lớp < n_c.

        Raises:
            DataError: Nếu vi phạm.
        """
        n = len(self.graphs)
        self._check_disjoint(self.splits, n, "split")
        for i, fold in enumerate(self.folds):
            self._check_disjoint(
                {"train": fold.train, "valid": fold.valid, "test": fold.test}, n, f"fold {i}"
            )
        if self.task.is_classification:
            for i, g in enumerate(self.graphs):
                if g.target is None:
                    continue
                y = int(g.target)
                if y < 0 or y >= self.task.num_classes:
                    raise DataError(
                        f"Đồ thị {i} có nhãn {y} ngoài [0, {self.task.num_classes})"
                    )

    @staticmethod
    def _check_disjoint(parts: Dict[str, np.ndarray], n: int, what: str) -> None:
        seen = np.zeros(n, dtype=bool)
        for key, idx in parts.items():
            idx = np.asarray(idx, dtype=np.int64)
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise DataError(f"{what} '{key}' có chỉ số ngoài [0, {n})")
            if np.any(seen[idx]) or len(np.unique(idx)) != len(idx):
                raise DataError(f"{what} '{key}' chồng lấn với phần khác")
            seen[idx] = True

    def targets(self, indices: Optional[Sequence[int]] = None) -> np.ndarray:
        """Mảng target (int64 cho phân lớp, float64 cho hồi quy)."""
        idx = range(len(self.graphs)) if indices is None else indices
        dtype = np.int64 if self.task.is_classification else np.float64
        return np.array([self.graphs[i].target for i in idx], dtype=dtype)

    def with_splits(self, splits: Dict[str, Sequence[int]]) -> "Dataset":
        return Dataset(self.name, self.graphs, self.task, dict(splits), self.folds,
                       self.node_vocab, self.edge_vocab)

    def with_folds(self, folds: List[Fold]) -> "Dataset":
        return Dataset(self.name, self.graphs, self.task, self.splits, tuple(folds),
                       self.node_vocab, self.edge_vocab)

    @property
    def node_feat_dim(self) -> int:
        return int(self.graphs[0].node_feat.shape[1]) if self.graphs else 0

    @property
    def edge_feat_dim(self) -> int:
        if not self.graphs or self.graphs[0].edge_feat is None:
            return 0
        return int(self.graphs[0].edge_feat.shape[1])

    @property
    def categorical_nodes(self) -> bool:
        return bool(self.graphs) and self.graphs[0].categorical_nodes

    @property
    def categorical_edges(self) -> bool:
        return bool(self.graphs) and self.graphs[0].categorical_edges
