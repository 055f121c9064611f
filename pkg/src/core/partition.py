"""
Phân hoạch đồ thị nhiều mức (multilevel k-way) và dựng tập patch.

Quy trình kiểu METIS:
    1. Thu gọn (coarsening) bằng heavy-edge matching cho tới khi còn
       <= max(2P, 64) siêu đỉnh hoặc không còn giảm đáng kể.
    2. Phân hoạch ban đầu bằng region growing tham lam trên đồ thị thô nhất.
    3. Chiếu ngược qua từng mức, mỗi mức tinh chỉnh biên (refine_boundary).

Sau đó các cụm rời được mở rộng k-hop và cảm sinh từ đồ thị GỐC để không
mất cạnh nào. Mọi hàm là hàm thuần của input + seed.
"""

import heapq
import logging
import math
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import shortest_path

from src.core.graph_ops import NodeSet, as_node_set, build_index, induced_subgraph, k_hop_closure
from src.models.errors import InvalidArgumentError
from src.models.graph import Graph
from src.models.patch_set import PatchSet

logger = logging.getLogger(__name__)


class PartitionDefaults:
    """Hằng số mặc định của bộ phân hoạch."""

    EPSILON = 0.1
    REFINE_PASSES = 10
    NUM_PATCHES = 32
    K_HOP = 1
    DROP_PROB = 0.3
    MIN_COARSE_NODES = 64
    MIN_REDUCTION = 0.05
    GROW_TRIALS = 8
    MATCH_WEIGHT_FACTOR = 1.5


class _Level(NamedTuple):
    weights: sp.csr_matrix
    vertex_weights: np.ndarray
    coarse_map: Optional[np.ndarray]


# ============================================================================
# Các hàm tiện ích trên ma trận trọng số
# ============================================================================

def _one_hot(assignment: np.ndarray, num_parts: int) -> sp.csr_matrix:
    n = len(assignment)
    return sp.csr_matrix(
        (np.ones(n, dtype=np.float64), (np.arange(n), assignment)), shape=(n, num_parts)
    )


def _weight_cut(weights: sp.csr_matrix, assignment: np.ndarray) -> float:
    coo = weights.tocoo()
    crossing = assignment[coo.row] != assignment[coo.col]
    return float(coo.data[crossing].sum() / 2.0)


def _max_part_weight(total: float, num_parts: int, epsilon: float) -> int:
    return max(1, int(math.ceil((1.0 + epsilon) * total / num_parts - 1e-9)))


def edge_cut(g: Graph, assignment: np.ndarray) -> int:
    """Số cạnh có hai đầu mút ở hai phần khác nhau."""
    if g.num_edges == 0:
        return 0
    assignment = np.asarray(assignment)
    return int(np.count_nonzero(assignment[g.edges[:, 0]] != assignment[g.edges[:, 1]]))


def cut_value(g: Graph, s_i: NodeSet, s_j: NodeSet) -> int:
    """
    Cut(S_i, S_j) = Σ_{k∈S_i} Σ_{l∈S_j} A_kl trên ma trận kề gốc.

    Một cạnh nằm trong cả S_i và S_j được đếm hai lần (A đối xứng).
    """
    s_i, s_j = as_node_set(s_i), as_node_set(s_j)
    if s_i.size == 0 or s_j.size == 0:
        return 0
    return int(round(g.adjacency[s_i][:, s_j].sum()))


# ============================================================================
# Coarsening
# ============================================================================

def _heavy_edge_matching(weights: sp.csr_matrix, vertex_weights: np.ndarray,
                         max_vertex_weight: float, rng: np.random.Generator) -> np.ndarray:
    """
    Ghép mỗi đỉnh chưa ghép với láng giềng chưa ghép có cạnh nặng nhất.

    Thứ tự duyệt ngẫu nhiên theo rng; hòa trọng số thì lấy láng giềng id nhỏ nhất.

    Returns:
        np.ndarray: coarse_map, id siêu đỉnh của từng đỉnh.
    """
    n = weights.shape[0]
    match = np.full(n, -1, dtype=np.int64)
    indptr, indices, data = weights.indptr, weights.indices, weights.data
    for u in rng.permutation(n):
        if match[u] >= 0:
            continue
        nbrs = indices[indptr[u]:indptr[u + 1]]
        w = data[indptr[u]:indptr[u + 1]]
        ok = (match[nbrs] < 0) & (vertex_weights[nbrs] + vertex_weights[u] <= max_vertex_weight)
        if np.any(ok):
            masked = np.where(ok, w, -np.inf)
            v = nbrs[int(np.argmax(masked))]
            match[u], match[v] = v, u
        else:
            match[u] = u
    representative = np.minimum(np.arange(n), match)
    _, coarse_map = np.unique(representative, return_inverse=True)
    return coarse_map.astype(np.int64)


def _contract(weights: sp.csr_matrix, vertex_weights: np.ndarray,
              coarse_map: np.ndarray) -> Tuple[sp.csr_matrix, np.ndarray]:
    """W_c = Cᵀ W C với đường chéo bị xóa; trọng số đỉnh cộng dồn."""
    nc = int(coarse_map.max()) + 1 if len(coarse_map) else 0
    contraction = _one_hot(coarse_map, nc)
    coarse = (contraction.T @ weights @ contraction).tocsr()
    coarse.setdiag(0)
    coarse.eliminate_zeros()
    coarse.sort_indices()
    return coarse, np.asarray(contraction.T @ vertex_weights).ravel()


def _coarsen(weights: sp.csr_matrix, num_parts: int,
             rng: np.random.Generator) -> List[_Level]:
    vertex_weights = np.ones(weights.shape[0], dtype=np.float64)
    levels = [_Level(weights, vertex_weights, None)]
    target = max(2 * num_parts, PartitionDefaults.MIN_COARSE_NODES)
    max_vertex_weight = math.ceil(
        PartitionDefaults.MATCH_WEIGHT_FACTOR * weights.shape[0] / target
    )
    while levels[-1].weights.shape[0] > target:
        current = levels[-1]
        n = current.weights.shape[0]
        coarse_map = _heavy_edge_matching(current.weights, current.vertex_weights,
                                          max_vertex_weight, rng)
        nc = int(coarse_map.max()) + 1
        if nc > (1.0 - PartitionDefaults.MIN_REDUCTION) * n:
            break
        coarse, coarse_vw = _contract(current.weights, current.vertex_weights, coarse_map)
        levels[-1] = _Level(current.weights, current.vertex_weights, coarse_map)
        levels.append(_Level(coarse, coarse_vw, None))
        logger.debug("Thu gọn %d -> %d đỉnh", n, nc)
    return levels


# ============================================================================
# Phân hoạch ban đầu
# ============================================================================

def _pick_seed(assigned_conn: np.ndarray, free: np.ndarray) -> int:
    # Đỉnh tự do dính nhiều nhất vào vùng đã gán; nếu không có thì id tự do nhỏ nhất
    return int(np.argmax(np.where(free, assigned_conn, -1.0)))


def _grow_once(weights: sp.csr_matrix, vertex_weights: np.ndarray,
               num_parts: int, first_seed: int) -> np.ndarray:
    n = weights.shape[0]
    indptr, indices, data = weights.indptr, weights.indices, weights.data
    part = np.full(n, -1, dtype=np.int64)
    assigned_conn = np.zeros(n, dtype=np.float64)
    remaining = float(vertex_weights.sum())
    for p in range(num_parts):
        free = part < 0
        if not free.any():
            break
        if p == num_parts - 1:
            part[free] = p
            break
        target = remaining / (num_parts - p)
        region_conn = np.zeros(n, dtype=np.float64)
        v = first_seed if p == 0 else _pick_seed(assigned_conn, free)
        weight = 0.0
        while True:
            part[v] = p
            weight += vertex_weights[v]
            remaining -= vertex_weights[v]
            row = slice(indptr[v], indptr[v + 1])
            region_conn[indices[row]] += data[row]
            assigned_conn[indices[row]] += data[row]
            free = part < 0
            if weight >= target or not free.any():
                break
            candidates = np.where(free, region_conn, -1.0)
            v = int(np.argmax(candidates))
            if candidates[v] <= 0:
                v = _pick_seed(assigned_conn, free)
            # Dừng nếu thêm đỉnh làm vùng lệch khỏi target nhiều hơn
            if weight + vertex_weights[v] - target > target - weight:
                break
    return part


def _grow_regions(weights: sp.csr_matrix, vertex_weights: np.ndarray,
                  num_parts: int, max_part: float, passes: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Chạy region growing với nhiều hạt giống đầu tiên, giữ kết quả cut nhỏ nhất."""
    n = weights.shape[0]
    best, best_key = None, None
    for first in rng.permutation(n)[:min(n, PartitionDefaults.GROW_TRIALS)]:
        part = _grow_once(weights, vertex_weights, num_parts, int(first))
        part = _refine(weights, vertex_weights, part, num_parts, max_part, passes)
        heaviest = np.bincount(part, weights=vertex_weights, minlength=num_parts).max()
        key = (_weight_cut(weights, part), float(heaviest))
        if best_key is None or key < best_key:
            best, best_key = part, key
    return best


# ============================================================================
# Tinh chỉnh biên
# ============================================================================

class _MoveState:
    """Trạng thái dùng chung khi di chuyển đỉnh giữa các phần."""

    def __init__(self, weights: sp.csr_matrix, vertex_weights: np.ndarray,
                 part: np.ndarray, num_parts: int):
        self.weights = weights
        self.vertex_weights = vertex_weights
        self.part = part
        self.num_parts = num_parts
        self.conn = np.asarray((weights @ _one_hot(part, num_parts)).todense())
        self.part_weight = np.bincount(part, weights=vertex_weights, minlength=num_parts)
        self.part_size = np.bincount(part, minlength=num_parts)

    def gains(self) -> np.ndarray:
        n = len(self.part)
        internal = self.conn[np.arange(n), self.part]
        gain = self.conn - internal[:, None]
        gain[np.arange(n), self.part] = -np.inf
        return gain

    def move(self, node: int, target: int) -> None:
        source = self.part[node]
        w = self.vertex_weights[node]
        self.part[node] = target
        self.part_weight[source] -= w
        self.part_weight[target] += w
        self.part_size[source] -= 1
        self.part_size[target] += 1
        row = slice(self.weights.indptr[node], self.weights.indptr[node + 1])
        nbrs, data = self.weights.indices[row], self.weights.data[row]
        self.conn[nbrs, source] -= data
        self.conn[nbrs, target] += data


def _best_move(gain: np.ndarray) -> Tuple[int, int, float]:
    # argmax phẳng theo thứ tự dòng: hòa -> đỉnh nhỏ nhất, rồi phần nhỏ nhất
    flat = int(np.argmax(gain))
    node, target = divmod(flat, gain.shape[1])
    return node, target, float(gain[node, target])


def _best_target(state: _MoveState, node: int, max_part: float) -> Tuple[float, int]:
    """(gain, phần đích) tốt nhất hợp lệ của một đỉnh; (-inf, -1) nếu không có."""
    source = state.part[node]
    if state.part_size[source] <= 1:
        return -np.inf, -1
    row = state.conn[node] - state.conn[node, source]
    feasible = state.part_weight + state.vertex_weights[node] <= max_part
    feasible[source] = False
    row = np.where(feasible, row, -np.inf)
    target = int(np.argmax(row))
    return float(row[target]), target


def _refine(weights: sp.csr_matrix, vertex_weights: np.ndarray, part: np.ndarray,
            num_parts: int, max_part: float, passes: int) -> np.ndarray:
    """
    Mỗi lượt: lấy từ heap nước đi có gain lớn nhất (hòa -> đỉnh nhỏ nhất, rồi
    phần nhỏ nhất), kiểm tra lại với trạng thái hiện tại rồi di chuyển. Sau mỗi
    lần di chuyển chỉ đỉnh vừa đi và láng giềng của nó được tính lại gain.
    """
    part = part.copy()
    n = len(part)
    if n == 0 or num_parts < 2:
        return part
    state = _MoveState(weights, vertex_weights, part, num_parts)
    indptr, indices = weights.indptr, weights.indices
    for _ in range(passes):
        locked = np.zeros(n, dtype=bool)
        gain = state.gains()
        feasible = (
            (state.part_weight[None, :] + vertex_weights[:, None] <= max_part)
            & (state.part_size[part] > 1)[:, None]
        )
        gain = np.where(feasible, gain, -np.inf)
        targets = np.argmax(gain, axis=1)
        best = gain[np.arange(n), targets]
        heap = [(-float(best[v]), int(v), int(targets[v])) for v in np.flatnonzero(best > 0)]
        heapq.heapify(heap)
        moved = 0
        while heap:
            neg_gain, node, target = heapq.heappop(heap)
            if locked[node]:
                continue
            current, current_target = _best_target(state, node, max_part)
            if (current, current_target) != (-neg_gain, target):
                if current > 0:
                    heapq.heappush(heap, (-current, node, current_target))
                continue
            state.move(node, target)
            locked[node] = True
            moved += 1
            for nbr in indices[indptr[node]:indptr[node + 1]]:
                if locked[nbr]:
                    continue
                value, nbr_target = _best_target(state, int(nbr), max_part)
                if value > 0:
                    heapq.heappush(heap, (-value, int(nbr), nbr_target))
        if moved == 0:
            break
    return part


def _rebalance(weights: sp.csr_matrix, vertex_weights: np.ndarray, part: np.ndarray,
               num_parts: int, max_part: float) -> np.ndarray:
    """Ép ràng buộc cân bằng và lấp các phần rỗng, chọn nước đi ít thiệt nhất."""
    part = part.copy()
    n = len(part)
    state = _MoveState(weights, vertex_weights, part, num_parts)
    for _ in range(n * num_parts + 1):
        over = state.part_weight > max_part
        empty = state.part_size == 0 if n >= num_parts else np.zeros(num_parts, dtype=bool)
        if not over.any() and not empty.any():
            break
        gain = state.gains()
        if over.any():
            source_ok = over[part]
            target_ok = state.part_weight[None, :] + vertex_weights[:, None] <= max_part
        else:
            source_ok = state.part_size[part] > 1
            target_ok = np.broadcast_to(empty[None, :], gain.shape)
        gain = np.where(source_ok[:, None] & target_ok, gain, -np.inf)
        node, target, best = _best_move(gain)
        if best == -np.inf:
            logger.warning("⚠️ Không thể cân bằng phân hoạch thêm nữa")
            break
        state.move(node, target)
    return part


def refine_boundary(g: Graph, assignment: np.ndarray, epsilon: float = PartitionDefaults.EPSILON,
                    passes: int = PartitionDefaults.REFINE_PASSES,
                    num_parts: Optional[int] = None) -> np.ndarray:
    """
    Tinh chỉnh biên tham lam: lặp lại việc di chuyển đỉnh có gain dương lớn nhất.

    Gain được cập nhật sau mỗi lần di chuyển; mỗi đỉnh chỉ di chuyển một lần mỗi
    lượt; tối đa `passes` lượt hoặc tới khi không còn nước đi cải thiện. Một nước
    đi chỉ hợp lệ khi phần đích không vượt ceil((1+ε)·N/P) và phần nguồn không rỗng.

    Args:
        g (Graph): Đồ thị.
        assignment (np.ndarray): Id phần của từng đỉnh.
        epsilon (float): Dung sai cân bằng.
        passes (int): Số lượt tối đa.
        num_parts (int, optional): P; mặc định max(assignment) + 1.

    Returns:
        np.ndarray: Phân hoạch mới, cut không lớn hơn cut ban đầu.
    """
    assignment = np.asarray(assignment, dtype=np.int64)
    if assignment.size == 0:
        return assignment.copy()
    num_parts = int(num_parts or assignment.max() + 1)
    max_part = _max_part_weight(g.num_nodes, num_parts, epsilon)
    return _refine(g.adjacency, np.ones(g.num_nodes), assignment, num_parts, max_part, passes)


# ============================================================================
# Phân hoạch k-way
# ============================================================================

def partition_kway(g: Graph, num_parts: int, epsilon: float = PartitionDefaults.EPSILON,
                   seed: int = 0, passes: int = PartitionDefaults.REFINE_PASSES) -> np.ndarray:
    """
    Phân hoạch k-way nhiều mức.

    Args:
        g (Graph): Đồ thị cần chia.
        num_parts (int): P >= 1.
        epsilon (float): Dung sai cân bằng, mỗi phần <= ceil((1+ε)·N/P) khi N >= P.
        seed (int): Seed; cùng seed cho cùng kết quả.
        passes (int): Số lượt tinh chỉnh mỗi mức.

    Returns:
        np.ndarray: Id phần (0..P-1) của từng đỉnh.

    Raises:
        InvalidArgumentError: P <= 0 hoặc ε < 0.
    """
    if num_parts <= 0:
        raise InvalidArgumentError(f"Số phần P phải >= 1, nhận {num_parts}")
    if epsilon < 0:
        raise InvalidArgumentError(f"epsilon phải >= 0, nhận {epsilon}")
    n = g.num_nodes
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if num_parts == 1:
        return np.zeros(n, dtype=np.int64)
    if num_parts >= n:
        # Mỗi đỉnh một phần, các phần dư để rỗng
        return np.arange(n, dtype=np.int64)

    rng = np.random.default_rng(seed)
    max_part = _max_part_weight(n, num_parts, epsilon)
    adjacency = g.adjacency.copy()
    adjacency.sort_indices()
    levels = _coarsen(adjacency, num_parts, rng)
    coarsest = levels[-1]
    part = _grow_regions(coarsest.weights, coarsest.vertex_weights, num_parts,
                         max_part, passes, rng)
    for level in reversed(levels[:-1]):
        part = part[level.coarse_map]
        part = _refine(level.weights, level.vertex_weights, part, num_parts, max_part, passes)
    finest = levels[0]
    part = _rebalance(finest.weights, finest.vertex_weights, part, num_parts, max_part)
    part = _refine(finest.weights, finest.vertex_weights, part, num_parts, max_part, passes)
    logger.debug("Phân hoạch %d đỉnh thành %d phần, cut = %d", n, num_parts, edge_cut(g, part))
    return part


def random_partition(num_nodes: int, num_parts: int, seed: int = 0) -> np.ndarray:
    """Phân hoạch ngẫu nhiên cân bằng (kích thước các phần lệch nhau tối đa 1)."""
    if num_parts <= 0:
        raise InvalidArgumentError(f"Số phần P phải >= 1, nhận {num_parts}")
    rng = np.random.default_rng(seed)
    part = np.empty(num_nodes, dtype=np.int64)
    part[rng.permutation(num_nodes)] = np.arange(num_nodes) % num_parts
    return part


def node_partition(num_nodes: int, num_parts: int) -> np.ndarray:
    """Mỗi đỉnh là một patch riêng (cần N <= P)."""
    if num_nodes > num_parts:
        raise InvalidArgumentError(
            f"Chế độ 'node' cần P >= N, nhưng N = {num_nodes} > P = {num_parts}"
        )
    return np.arange(num_nodes, dtype=np.int64)


# ============================================================================
# Patch
# ============================================================================

def coarse_adjacency(g: Graph, base_partition: np.ndarray,
                     num_parts: Optional[int] = None) -> np.ndarray:
    """
    A^P_ij = Cut(cụm i, cụm j) trên các cụm RỜI trước mở rộng; đường chéo 0.

    Returns:
        np.ndarray: Ma trận P×P số nguyên, đối xứng.
    """
    base_partition = np.asarray(base_partition, dtype=np.int64)
    if num_parts is None:
        num_parts = int(base_partition.max()) + 1 if base_partition.size else 1
    if g.num_nodes == 0:
        return np.zeros((num_parts, num_parts), dtype=np.int64)
    onehot = _one_hot(base_partition, num_parts)
    coarse = np.asarray((onehot.T @ g.adjacency @ onehot).todense())
    np.fill_diagonal(coarse, 0)
    return np.rint(coarse).astype(np.int64)


def expand_patches(g: Graph, base_partition: np.ndarray, k: int = PartitionDefaults.K_HOP,
                   num_parts: Optional[int] = None) -> PatchSet:
    """
    Mở rộng mỗi cụm rời thành bao đóng k-hop và cảm sinh patch từ đồ thị gốc.

    Với k >= 1 mọi cạnh của g nằm trong ít nhất một patch.

    Raises:
        InvalidArgumentError: k < 0.
    """
    if k < 0:
        raise InvalidArgumentError(f"k phải >= 0, nhận {k}")
    base_partition = np.asarray(base_partition, dtype=np.int64)
    if num_parts is None:
        num_parts = int(base_partition.max()) + 1 if base_partition.size else 1
    index = build_index(g)
    membership, patch_graphs = [], []
    for p in range(num_parts):
        cluster = np.flatnonzero(base_partition == p)
        nodes = k_hop_closure(index, cluster, k)
        nodes.setflags(write=False)
        membership.append(nodes)
        patch_graphs.append(induced_subgraph(g, nodes))
    frozen_base = base_partition.copy()
    frozen_base.setflags(write=False)
    coarse = coarse_adjacency(g, base_partition, num_parts)
    coarse.setflags(write=False)
    return PatchSet(
        num_patches=num_parts,
        num_nodes=g.num_nodes,
        membership=tuple(membership),
        base_partition=frozen_base,
        coarse_adj=coarse,
        patch_graphs=tuple(patch_graphs),
        k_hop=k,
    )


def base_partition_for(g: Graph, num_parts: int, method: str = "metis",
                       epsilon: float = PartitionDefaults.EPSILON, seed: int = 0,
                       passes: int = PartitionDefaults.REFINE_PASSES) -> np.ndarray:
    """Chọn bộ phân hoạch theo tên: metis | random | node."""
    if method == "metis":
        return partition_kway(g, num_parts, epsilon, seed, passes)
    if method == "random":
        return random_partition(g.num_nodes, num_parts, seed)
    if method == "node":
        return node_partition(g.num_nodes, num_parts)
    raise InvalidArgumentError(f"Bộ phân hoạch không hợp lệ: {method}")


def drop_edges(g: Graph, drop_prob: float, seed: int) -> Graph:
    """G': mỗi cạnh bị xóa độc lập với xác suất drop_prob."""
    if not 0.0 <= drop_prob < 1.0:
        raise InvalidArgumentError(f"drop_prob phải thuộc [0, 1), nhận {drop_prob}")
    if drop_prob == 0.0 or g.num_edges == 0:
        return g
    rng = np.random.default_rng([seed, 1])
    return g.with_edges(rng.random(g.num_edges) >= drop_prob)


def augment_partition(g: Graph, num_parts: int, epsilon: float = PartitionDefaults.EPSILON,
                      drop_prob: float = PartitionDefaults.DROP_PROB, seed: int = 0,
                      k: int = PartitionDefaults.K_HOP, method: str = "metis",
                      passes: int = PartitionDefaults.REFINE_PASSES) -> PatchSet:
    """
    Phân hoạch lại có augmentation: xóa cạnh ngẫu nhiên để được G', phân hoạch G',
    rồi mở rộng và cảm sinh patch (cùng A^P) từ đồ thị GỐC g.

    drop_prob = 0 cho kết quả trùng với pipeline không augmentation cùng seed.
    """
    g_prime = drop_edges(g, drop_prob, seed)
    base = base_partition_for(g_prime, num_parts, method, epsilon, seed, passes)
    return expand_patches(g, base, k, num_parts)


def extract_patches(g: Graph, num_parts: int = PartitionDefaults.NUM_PATCHES,
                    k: int = PartitionDefaults.K_HOP, method: str = "metis",
                    epsilon: float = PartitionDefaults.EPSILON, drop_prob: float = 0.0,
                    seed: int = 0, passes: int = PartitionDefaults.REFINE_PASSES) -> PatchSet:
    """Pipeline một lần gọi: (augment) -> phân hoạch -> mở rộng k-hop."""
    return augment_partition(g, num_parts, epsilon, drop_prob, seed, k, method, passes)


def whole_graph_patch(g: Graph) -> PatchSet:
    """Cả đồ thị là một patch duy nhất (dùng cho baseline MP-GNN)."""
    return expand_patches(g, np.zeros(g.num_nodes, dtype=np.int64), 0, 1)


def patch_statistics(patch_set: PatchSet) -> dict:
    """
    Thống kê tập patch: số patch khác rỗng, kích thước và đường kính trung bình.

    Đường kính của patch không liên thông là đường kính lớn nhất trong các thành phần.
    """
    sizes = patch_set.sizes
    nonempty = [pg for pg in patch_set.patch_graphs if pg.graph.num_nodes > 0]
    diameters = []
    for pg in nonempty:
        dist = shortest_path(pg.graph.adjacency, unweighted=True, directed=False)
        finite = dist[np.isfinite(dist)]
        diameters.append(float(finite.max()) if finite.size else 0.0)
    occupied = sizes[sizes > 0]
    return {
        "num_patches": patch_set.num_patches,
        "nonempty_patches": len(nonempty),
        "mean_nodes": float(occupied.mean()) if occupied.size else 0.0,
        "min_nodes": int(occupied.min()) if occupied.size else 0,
        "max_nodes": int(occupied.max()) if occupied.size else 0,
        "mean_diameter": float(np.mean(diameters)) if diameters else 0.0,
        "covered_edges": int(len(patch_set.covered_edges())),
    }


def mean_cut(graphs: Sequence[Graph], num_parts: int, method: str, seed: int = 0,
             epsilon: float = PartitionDefaults.EPSILON) -> float:
    """Cut trung bình của một bộ phân hoạch trên nhiều đồ thị (so sánh metis vs random)."""
    cuts = [
        edge_cut(g, base_partition_for(g, num_parts, method, epsilon, seed + i))
        for i, g in enumerate(graphs)
    ]
    return float(np.mean(cuts)) if cuts else 0.0
