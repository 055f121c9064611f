"""
Sinh các bộ dữ liệu tổng hợp:
- CSL: đồ thị vòng có cạnh nhảy (circulant 4-chính quy, 41 đỉnh, 10 lớp đẳng cấu)
- TreeNeighbourMatch: cây nhị phân độ sâu r, đọc nhãn của lá có khóa trùng gốc
- Đếm tam giác: đồ thị Erdős–Rényi, target = số tam giác / N
"""

import itertools
import logging
import math
from typing import List

import numpy as np

from src.models.dataset import Dataset, Task
from src.models.errors import InvalidArgumentError
from src.models.graph import Graph
from src.utils.data_loader import random_split

logger = logging.getLogger(__name__)


CSL_NODES = 41
CSL_SKIPS = (2, 3, 4, 5, 6, 9, 11, 12, 13, 16)
CSL_COPIES = 15
TREE_ENUMERATION_LIMIT = 100_000


# ============================================================================
# CSL
# ============================================================================

def circulant_edges(num_nodes: int, skips) -> np.ndarray:
    """Cạnh của đồ thị circulant với các bước nhảy đã cho (không trùng, không self-loop)."""
    pairs = set()
    for s in skips:
        for i in range(num_nodes):
            j = (i + s) % num_nodes
            if i != j:
                pairs.add((min(i, j), max(i, j)))
    return np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)


def gen_csl(seed: int = 0) -> Dataset:
    """
    150 đồ thị CSL: mỗi bước nhảy s cho một lớp, 15 bản sao đánh lại nhãn đỉnh ngẫu nhiên.

    Đặc trưng đỉnh là hằng số 1; nhãn lớp là chỉ số của s trong CSL_SKIPS.
    """
    rng = np.random.default_rng(seed)
    graphs: List[Graph] = []
    for label, skip in enumerate(CSL_SKIPS):
        base = Graph(
            num_nodes=CSL_NODES,
            edges=circulant_edges(CSL_NODES, (1, skip)),
            node_feat=np.ones((CSL_NODES, 1)),
            target=label,
            name=f"csl_s{skip}",
        )
        for copy in range(CSL_COPIES):
            g = base.relabel(rng.permutation(CSL_NODES))
            graphs.append(Graph(g.num_nodes, g.edges, g.node_feat, target=label,
                                name=f"csl_s{skip}_{copy}"))
    logger.info("✅ Đã sinh CSL: %d đồ thị, %d lớp", len(graphs), len(CSL_SKIPS))
    return Dataset(name="csl", graphs=graphs, task=Task.classify(len(CSL_SKIPS)))


# ============================================================================
# TREE NEIGHBOUR MATCH
# ============================================================================

def _tree_graph(depth: int, keys: np.ndarray, labels: np.ndarray, target_key: int) -> Graph:
    """
    Cây nhị phân đầy đủ đánh số kiểu heap (gốc 0, con của i là 2i+1, 2i+2).

    Đặc trưng: one-hot khóa (L cột), one-hot nhãn (L cột), cờ đỉnh đích (1 cột).
    Gốc là đỉnh đích và mang khóa target_key.
    """
    leaves = 2 ** depth
    n = 2 * leaves - 1
    first_leaf = leaves - 1
    children = np.arange(1, n)
    edges = np.stack([(children - 1) // 2, children], axis=1)
    feat = np.zeros((n, 2 * leaves + 1))
    leaf_ids = np.arange(first_leaf, n)
    feat[leaf_ids, keys - 1] = 1.0
    feat[leaf_ids, leaves + labels] = 1.0
    feat[0, target_key - 1] = 1.0
    feat[0, 2 * leaves] = 1.0
    answer = int(labels[np.flatnonzero(keys == target_key)[0]])
    return Graph(num_nodes=n, edges=edges, node_feat=feat, target=answer)


def gen_tree_match(depth: int, num_samples: int = 0, seed: int = 0) -> Dataset:
    """
    Bộ TreeNeighbourMatch độ sâu r: 2^(r+1) - 1 đỉnh, bài toán 2^r lớp.

    Args:
        depth (int): r >= 1.
        num_samples (int): 0 = liệt kê đủ mọi cấu hình (hoán vị nhãn lá × khóa đích,
            chỉ khi số cấu hình nhỏ); > 0 = lấy mẫu ngẫu nhiên CÓ hoàn lại.
        seed (int): Seed cho lấy mẫu và split 80/10/10.

    Raises:
        InvalidArgumentError: depth < 1, num_samples < 0, hoặc liệt kê quá lớn.
    """
    if depth < 1:
        raise InvalidArgumentError(f"Độ sâu phải >= 1, nhận {depth}")
    if num_samples < 0:
        raise InvalidArgumentError(f"num_samples phải >= 0, nhận {num_samples}")
    leaves = 2 ** depth
    total = math.factorial(leaves) * leaves
    rng = np.random.default_rng(seed)
    graphs: List[Graph] = []
    if num_samples == 0:
        if total > TREE_ENUMERATION_LIMIT:
            raise InvalidArgumentError(
                f"Độ sâu {depth} có {total} cấu hình, cần chỉ định num_samples"
            )
        keys = np.arange(1, leaves + 1)
        for labels in itertools.permutations(range(leaves)):
            for target_key in range(1, leaves + 1):
                graphs.append(_tree_graph(depth, keys, np.array(labels), target_key))
        graphs = [graphs[i] for i in rng.permutation(len(graphs))]
    else:
        if num_samples > total:
            logger.warning("⚠️ num_samples=%d vượt số cấu hình phân biệt %d, mẫu sẽ lặp",
                           num_samples, total)
        for _ in range(num_samples):
            keys = rng.permutation(leaves) + 1
            labels = rng.permutation(leaves)
            target_key = int(rng.integers(1, leaves + 1))
            graphs.append(_tree_graph(depth, keys, labels, target_key))
    dataset = Dataset(name=f"tree_r{depth}", graphs=graphs, task=Task.classify(leaves))
    logger.info("✅ Đã sinh TreeNeighbourMatch r=%d: %d mẫu", depth, len(graphs))
    return dataset.with_splits(random_split(dataset, (0.8, 0.1, 0.1), seed))


# ============================================================================
# ĐẾM TAM GIÁC
# ============================================================================

def triangle_count(g: Graph) -> int:
    a = g.adjacency
    return int(round((a @ a).multiply(a).sum() / 6.0))


def gen_triangle_regression(num_graphs: int = 2000, seed: int = 0, min_nodes: int = 10,
                            max_nodes: int = 30, edge_prob: float = 0.2) -> Dataset:
    """
    Hồi quy số tam giác chuẩn hóa: y = trace(A³) / 6 / N trên đồ thị Erdős–Rényi.

    Split 80/10/10 theo seed.
    """
    if num_graphs < 1:
        raise InvalidArgumentError(f"num_graphs phải >= 1, nhận {num_graphs}")
    if not 1 <= min_nodes <= max_nodes:
        raise InvalidArgumentError(f"Khoảng số đỉnh không hợp lệ: [{min_nodes}, {max_nodes}]")
    rng = np.random.default_rng(seed)
    graphs: List[Graph] = []
    for i in range(num_graphs):
        n = int(rng.integers(min_nodes, max_nodes + 1))
        upper = np.triu(rng.random((n, n)) < edge_prob, k=1)
        edges = np.argwhere(upper).astype(np.int64)
        g = Graph(num_nodes=n, edges=edges, node_feat=np.ones((n, 1)), name=f"er_{i}")
        graphs.append(Graph(n, g.edges, g.node_feat, target=triangle_count(g) / n,
                            name=g.name))
    dataset = Dataset(name="triangles", graphs=graphs, task=Task.regression())
    logger.info("✅ Đã sinh %d đồ thị đếm tam giác", len(graphs))
    return dataset.with_splits(random_split(dataset, (0.8, 0.1, 0.1), seed))
