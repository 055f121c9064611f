"""
Các truy vấn nguyên thủy trên đồ thị: dựng chỉ mục kề, bao đóng k-hop,
đồ thị con cảm sinh. Mọi hàm đều thuần túy (không sửa input).
"""

from typing import Iterable, Union

import numpy as np
import scipy.sparse as sp

from src.models.errors import MalformedGraphError
from src.models.graph import AdjacencyIndex, Graph, InducedSubgraph


NodeSet = Union[np.ndarray, Iterable[int]]


def as_node_set(nodes: NodeSet) -> np.ndarray:
    """Chuẩn hóa một tập đỉnh thành mảng int64 đã sắp xếp, không trùng."""
    if not isinstance(nodes, np.ndarray):
        nodes = np.fromiter(nodes, dtype=np.int64)
    return np.unique(nodes.astype(np.int64))


def build_index(g: Graph) -> AdjacencyIndex:
    """
    Dựng chỉ mục kề CSR từ danh sách cạnh.

    Mỗi cạnh vô hướng sinh hai entry có hướng; neighbor list được sắp tăng dần
    nên kết quả không phụ thuộc thứ tự cạnh đầu vào.

    Raises:
        MalformedGraphError: Nếu có đỉnh ngoài phạm vi.
    """
    n = g.num_nodes
    edges = g.edges
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        raise MalformedGraphError(f"Cạnh có đỉnh ngoài phạm vi [0, {n})")
    eids = np.arange(g.num_edges, dtype=np.int64)
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    # Lưu id+1 để id 0 không bị coi là phần tử rỗng của ma trận thưa
    data = np.concatenate([eids, eids]) + 1
    csr = sp.csr_matrix((data, (rows, cols)), shape=(n, n), dtype=np.int64)
    csr.sort_indices()
    degrees = np.diff(csr.indptr).astype(np.int64)
    return AdjacencyIndex(
        indptr=csr.indptr.astype(np.int64),
        neighbors=csr.indices.astype(np.int64),
        edge_ids=csr.data.astype(np.int64) - 1,
        degrees=degrees,
    )


def k_hop_closure(index: AdjacencyIndex, seed: NodeSet, k: int) -> np.ndarray:
    """
    Tập seed hợp với mọi đỉnh có khoảng cách <= k tới một đỉnh seed (BFS theo tầng).

    Args:
        index (AdjacencyIndex): Chỉ mục kề.
        seed: Tập đỉnh xuất phát (rỗng -> trả về rỗng).
        k (int): Số bước, k >= 0.

    Returns:
        np.ndarray: Tập đỉnh đã sắp xếp.
    """
    seed = as_node_set(seed)
    if k <= 0 or seed.size == 0:
        return seed
    adj = index.to_csr()
    visited = np.zeros(index.num_nodes, dtype=bool)
    visited[seed] = True
    frontier = seed
    for _ in range(k):
        reached = np.unique(adj[frontier].indices)
        frontier = reached[~visited[reached]]
        if frontier.size == 0:
            break
        visited[frontier] = True
    return np.flatnonzero(visited)


def induced_subgraph(g: Graph, nodes: NodeSet) -> InducedSubgraph:
    """
    Đồ thị con cảm sinh bởi tập đỉnh `nodes`.

    Giữ đúng các cạnh có cả hai đầu mút trong tập; đặc trưng đỉnh/cạnh và target
    được mang theo. node_map[i] là id gốc của đỉnh local i, edge_map[e] là id gốc
    của cạnh local e.
    """
    nodes = as_node_set(nodes)
    local = np.full(g.num_nodes, -1, dtype=np.int64)
    local[nodes] = np.arange(len(nodes), dtype=np.int64)
    if g.num_edges:
        inside = (local[g.edges[:, 0]] >= 0) & (local[g.edges[:, 1]] >= 0)
    else:
        inside = np.zeros(0, dtype=bool)
    edge_map = np.flatnonzero(inside).astype(np.int64)
    sub = Graph(
        num_nodes=len(nodes),
        edges=local[g.edges[edge_map]],
        node_feat=g.node_feat[nodes],
        edge_feat=None if g.edge_feat is None else g.edge_feat[edge_map],
        target=g.target,
        node_vocab=g.node_vocab,
        edge_vocab=g.edge_vocab,
        name=g.name,
    )
    return InducedSubgraph(graph=sub, node_map=nodes, edge_map=edge_map)
