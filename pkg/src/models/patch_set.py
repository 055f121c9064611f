"""
Data class đại diện cho tập patch của một đồ thị sau bước phân hoạch + mở rộng.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

import numpy as np

from src.models.graph import InducedSubgraph


@dataclass(frozen=True, eq=False)
class PatchSet:
    """
    Phân hoạch đỉnh của một đồ thị thành P patch (có thể chồng lấn, có thể rỗng).

    Attributes:
        num_patches (int): Số patch P.
        num_nodes (int): Số đỉnh N của đồ thị gốc.
        membership (List[np.ndarray]): V_1..V_P, mỗi tập đã sắp xếp (sau khi mở rộng k-hop).
        base_partition (np.ndarray): Id patch của từng đỉnh trong phân hoạch rời trước mở rộng.
        coarse_adj (np.ndarray): Ma trận P×P số nguyên A^P, đối xứng, đường chéo 0.
        patch_graphs (List[InducedSubgraph]): Đồ thị con cảm sinh từ đồ thị GỐC.
        k_hop (int): Số bước mở rộng đã dùng.
    """

    num_patches: int
    num_nodes: int
    membership: Tuple[np.ndarray, ...]
    base_partition: np.ndarray
    coarse_adj: np.ndarray
    patch_graphs: Tuple[InducedSubgraph, ...]
    k_hop: int = 1

    @property
    def mask(self) -> np.ndarray:
        """m_p = 1 nếu patch p có ít nhất một đỉnh."""
        return np.array([len(v) > 0 for v in self.membership], dtype=np.float64)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(v) for v in self.membership], dtype=np.int64)

    def base_clusters(self) -> List[np.ndarray]:
        """Các cụm rời trước khi mở rộng."""
        return [np.flatnonzero(self.base_partition == p) for p in range(self.num_patches)]

    def covered_edges(self) -> np.ndarray:
        """Id (trong đồ thị gốc) các cạnh xuất hiện trong ít nhất một patch."""
        maps = [pg.edge_map for pg in self.patch_graphs]
        if not maps:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate(maps)).astype(np.int64)

    def to_dict(self) -> Dict[str, Any]:
        """Dạng JSON dùng cho lệnh `partition` của CLI."""
        return {
            "num_patches": self.num_patches,
            "num_nodes": self.num_nodes,
            "k_hop": self.k_hop,
            "membership": [v.tolist() for v in self.membership],
            "base_partition": self.base_partition.tolist(),
            "coarse_adj": self.coarse_adj.tolist(),
        }
