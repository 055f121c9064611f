"""
Data class đại diện cho một đồ thị vô hướng có thuộc tính.
Đây là kiểu dữ liệu gốc mà mọi module khác (partition, posenc, nn) đều đọc.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from src.models.errors import MalformedGraphError


Target = Union[int, float, None]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Graph:
    """
    Đồ thị vô hướng bất biến.

    Attributes:
        num_nodes (int): Số đỉnh N.
        edges (np.ndarray): Mảng E×2 các cặp (u, v), mỗi cạnh vô hướng lưu đúng một lần.
        node_feat (np.ndarray): Ma trận N×d_n. Kiểu số nguyên nghĩa là đặc trưng
            categorical (mỗi cột là một trường, giá trị là index trong từ điển).
        edge_feat (np.ndarray, optional): Ma trận E×d_e căn theo thứ tự cạnh.
        target (int | float, optional): Nhãn lớp hoặc giá trị hồi quy.
        node_vocab (tuple, optional): Kích thước từ điển từng cột khi node_feat categorical.
        edge_vocab (tuple, optional): Tương tự cho edge_feat.

    Note:
        - Không có self-loop, không có cạnh trùng, đỉnh nằm trong [0, N).
        - Đồ thị không cạnh là hợp lệ ở mọi nơi.
    """

    num_nodes: int
    edges: np.ndarray
    node_feat: np.ndarray
    edge_feat: Optional[np.ndarray] = None
    target: Target = None
    node_vocab: Optional[Tuple[int, ...]] = None
    edge_vocab: Optional[Tuple[int, ...]] = None
    name: str = field(default="")

    def __post_init__(self) -> None:
        n = int(self.num_nodes)
        if n < 0:
            raise MalformedGraphError(f"num_nodes âm: {n}")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        node_feat = np.asarray(self.node_feat)
        if node_feat.ndim == 1:
            node_feat = node_feat.reshape(-1, 1)
        if node_feat.shape[0] != n:
            raise MalformedGraphError(
                f"node_feat có {node_feat.shape[0]} dòng nhưng num_nodes = {n}"
            )
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            bad = int(np.flatnonzero((edges < 0).any(1) | (edges >= n).any(1))[0])
            raise MalformedGraphError(
                f"Cạnh {bad} = {edges[bad].tolist()} có đỉnh ngoài phạm vi [0, {n})"
            )
        if np.any(edges[:, 0] == edges[:, 1]):
            bad = int(np.flatnonzero(edges[:, 0] == edges[:, 1])[0])
            raise MalformedGraphError(f"Cạnh {bad} là self-loop tại đỉnh {edges[bad, 0]}")
        canon = np.sort(edges, axis=1)
        if len(np.unique(canon, axis=0)) != len(canon):
            raise MalformedGraphError("Đồ thị có cạnh trùng lặp")

        edge_feat = self.edge_feat
        if edge_feat is not None:
            edge_feat = np.asarray(edge_feat)
            if edge_feat.ndim == 1:
                edge_feat = edge_feat.reshape(-1, 1)
            if edge_feat.shape[0] != len(edges):
                raise MalformedGraphError(
                    f"edge_feat có {edge_feat.shape[0]} dòng nhưng có {len(edges)} cạnh"
                )
            edge_feat = _frozen(edge_feat)

        object.__setattr__(self, "num_nodes", n)
        object.__setattr__(self, "edges", _frozen(edges))
        object.__setattr__(self, "node_feat", _frozen(node_feat))
        object.__setattr__(self, "edge_feat", edge_feat)
        if self.node_vocab is not None:
            object.__setattr__(self, "node_vocab", tuple(int(v) for v in self.node_vocab))
        if self.edge_vocab is not None:
            object.__setattr__(self, "edge_vocab", tuple(int(v) for v in self.edge_vocab))

    @property
    def num_edges(self) -> int:
        return int(len(self.edges))

    @property
    def categorical_nodes(self) -> bool:
        return np.issubdtype(self.node_feat.dtype, np.integer)

    @property
    def categorical_edges(self) -> bool:
        return self.edge_feat is not None and np.issubdtype(self.edge_feat.dtype, np.integer)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Ma trận kề đối xứng A (CSR, float64, giá trị 1)."""
        n = self.num_nodes
        if self.num_edges == 0:
            return sp.csr_matrix((n, n), dtype=np.float64)
        u, v = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        data = np.ones(len(rows), dtype=np.float64)
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))

    def relabel(self, perm: np.ndarray) -> "Graph":
        """
        Đổi nhãn đỉnh: đỉnh cũ i trở thành perm[i].

        Args:
            perm (np.ndarray): Hoán vị của 0..N-1.

        Returns:
            Graph: Đồ thị đẳng cấu, thứ tự cạnh giữ nguyên.
        """
        perm = np.asarray(perm, dtype=np.int64)
        inverse = np.empty_like(perm)
        inverse[perm] = np.arange(len(perm))
        return Graph(
            num_nodes=self.num_nodes,
            edges=perm[self.edges] if self.num_edges else self.edges,
            node_feat=self.node_feat[inverse],
            edge_feat=self.edge_feat,
            target=self.target,
            node_vocab=self.node_vocab,
            edge_vocab=self.edge_vocab,
            name=self.name,
        )

    def with_edges(self, keep: np.ndarray) -> "Graph":
        """Trả về đồ thị chỉ giữ các cạnh có keep[e] = True (dùng cho augmentation)."""
        keep = np.asarray(keep, dtype=bool)
        return Graph(
            num_nodes=self.num_nodes,
            edges=self.edges[keep],
            node_feat=self.node_feat,
            edge_feat=None if self.edge_feat is None else self.edge_feat[keep],
            target=self.target,
            node_vocab=self.node_vocab,
            edge_vocab=self.edge_vocab,
            name=self.name,
        )

    def __str__(self) -> str:
        return f"Graph({self.name or '?'}: N={self.num_nodes}, E={self.num_edges}, y={self.target})"


@dataclass(frozen=True, eq=False)
class AdjacencyIndex:
    """
    Danh sách kề nén theo dòng (CSR) của một Graph.

    Attributes:
        indptr (np.ndarray): Độ dài N+1; neighbors của u nằm ở indptr[u]:indptr[u+1].
        neighbors (np.ndarray): Đỉnh kề, mỗi dòng sắp xếp tăng dần.
        edge_ids (np.ndarray): Song song với neighbors, id cạnh gốc trong Graph.edges.
        degrees (np.ndarray): Bậc của từng đỉnh.
    """

    indptr: np.ndarray
    neighbors: np.ndarray
    edge_ids: np.ndarray
    degrees: np.ndarray

    @property
    def num_nodes(self) -> int:
        return int(len(self.indptr) - 1)

    def neighbors_of(self, u: int) -> np.ndarray:
        return self.neighbors[self.indptr[u]:self.indptr[u + 1]]

    def edges_of(self, u: int) -> np.ndarray:
        return self.edge_ids[self.indptr[u]:self.indptr[u + 1]]

    def to_csr(self) -> sp.csr_matrix:
        """Ma trận kề nhị phân dạng CSR (dùng lại indptr/neighbors sẵn có)."""
        n = self.num_nodes
        data = np.ones(len(self.neighbors), dtype=np.float64)
        return sp.csr_matrix((data, self.neighbors, self.indptr), shape=(n, n))


class InducedSubgraph(NamedTuple):
    """Đồ thị con cảm sinh + ánh xạ local -> global cho đỉnh và cạnh."""

    graph: Graph
    node_map: np.ndarray
    edge_map: np.ndarray
