"""
Tiền xử lý đồ thị (patch + PE) và gom nhiều đồ thị thành một batch.

Trong batch, mỗi đỉnh được nhân bản một lần cho mỗi patch chứa nó ("bản sao").
Các bản sao được nối liền nhau qua mọi đồ thị; segment id của patch là b·P + p.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence

import numpy as np

from src.core.partition import extract_patches, whole_graph_patch
from src.core.posenc import compute_node_pe, patch_pe
from src.models.config import ModelConfig
from src.models.errors import DimensionError
from src.models.graph import Graph
from src.models.patch_set import PatchSet


@dataclass(frozen=True, eq=False)
class PreparedGraph:
    """Một đồ thị đã có tập patch, PE mức đỉnh và PE mức patch."""

    graph: Graph
    patches: PatchSet
    node_pe: np.ndarray
    patch_pe: np.ndarray


def prepare_graph(g: Graph, config: ModelConfig, seed: int, training: bool = False,
                  node_pe: Optional[np.ndarray] = None,
                  pe_seed: Optional[int] = None) -> PreparedGraph:
    """
    Phân hoạch (có augmentation khi training) và tính PE cho một đồ thị.

    Args:
        g (Graph): Đồ thị.
        config (ModelConfig): Cấu hình model.
        seed (int): Seed cho phân hoạch, xóa cạnh và lật dấu LapPE.
        training (bool): Bật xóa cạnh và lật dấu LapPE.
        node_pe (np.ndarray, optional): PE đã tính sẵn (RWSE không phụ thuộc patch).
        pe_seed (int, optional): Seed riêng cho lật dấu LapPE (mặc định = seed).
    """
    if config.architecture == "mpgnn":
        patches = whole_graph_patch(g)
    else:
        patches = extract_patches(
            g, config.num_patches, config.k_hop, config.partitioner, config.epsilon,
            config.drop_prob if training else 0.0, seed, config.refine_passes,
        )
    if node_pe is None:
        rng = np.random.default_rng([seed if pe_seed is None else pe_seed, 2])
        node_pe = compute_node_pe(g, config.node_pe, config.node_pe_dim, rng, training).values
    if config.architecture == "mixer" and config.patch_pe_dim > 0:
        ppe = patch_pe(patches.coarse_adj, config.patch_pe_dim, config.patch_pe_binary)
    else:
        ppe = np.zeros((patches.num_patches, 0))
    return PreparedGraph(graph=g, patches=patches, node_pe=node_pe, patch_pe=ppe)


@dataclass(frozen=True, eq=False)
class BatchedPatches:
    """
    Batch B đồ thị, mỗi đồ thị P patch.

    Attributes:
        batch_size (int): B.
        num_patches (int): P.
        node_feat (np.ndarray): [N_tot, d_n] đặc trưng đỉnh (nguyên nếu categorical).
        edge_feat (np.ndarray): [E_tot, d_e]; cột 1 khi đồ thị không có đặc trưng cạnh.
        node_pe (np.ndarray): [N_tot, K].
        node_graph (np.ndarray): [N_tot] đồ thị chứa đỉnh.
        copy_node (np.ndarray): [C] id đỉnh (mức batch) của từng bản sao.
        copy_patch (np.ndarray): [C] segment patch b·P + p.
        copy_slot (np.ndarray): [C] vị trí local trong patch.
        edge_copy_edge (np.ndarray): [Ec] id cạnh (mức batch) của từng bản sao cạnh.
        edge_copy_patch (np.ndarray): [Ec] segment patch.
        edge_copy_src / edge_copy_dst (np.ndarray): [Ec] dòng bản sao của hai đầu mút.
        patch_pe (np.ndarray): [B, P, K̂].
        coarse_adj (np.ndarray): [B, P, P].
        mask (np.ndarray): [B, P], m_p = 1 khi patch khác rỗng.
        targets (np.ndarray): [B].
    """

    batch_size: int
    num_patches: int
    node_feat: np.ndarray
    edge_feat: np.ndarray
    node_pe: np.ndarray
    node_graph: np.ndarray
    copy_node: np.ndarray
    copy_patch: np.ndarray
    copy_slot: np.ndarray
    edge_copy_edge: np.ndarray
    edge_copy_patch: np.ndarray
    edge_copy_src: np.ndarray
    edge_copy_dst: np.ndarray
    patch_pe: np.ndarray
    coarse_adj: np.ndarray
    mask: np.ndarray
    targets: np.ndarray

    @property
    def num_nodes(self) -> int:
        return int(self.node_feat.shape[0])

    @property
    def num_edges(self) -> int:
        return int(self.edge_feat.shape[0])

    @property
    def num_copies(self) -> int:
        return int(len(self.copy_node))

    @property
    def num_edge_copies(self) -> int:
        return int(len(self.edge_copy_edge))

    @property
    def num_segments(self) -> int:
        return self.batch_size * self.num_patches

    @cached_property
    def copy_graph(self) -> np.ndarray:
        return self.copy_patch // self.num_patches

    @cached_property
    def directed(self) -> tuple:
        """(src, dst, edge_copy) cho cả hai chiều của mỗi bản sao cạnh."""
        src = np.concatenate([self.edge_copy_src, self.edge_copy_dst])
        dst = np.concatenate([self.edge_copy_dst, self.edge_copy_src])
        ids = np.arange(len(self.edge_copy_src), dtype=np.int64)
        return src, dst, np.concatenate([ids, ids])

    @cached_property
    def copy_degree(self) -> np.ndarray:
        """Bậc của từng bản sao bên trong patch của nó."""
        _, dst, _ = self.directed
        return np.bincount(dst, minlength=self.num_copies).astype(np.float64)

    def duplication_map(self) -> List[List[tuple]]:
        """
        Với mỗi đỉnh mức batch: danh sách (patch, slot local, dòng bản sao).

        Mỗi lần xuất hiện (patch, đỉnh) có mặt đúng một lần.
        """
        result: List[List[tuple]] = [[] for _ in range(self.num_nodes)]
        for row, (node, patch, slot) in enumerate(
                zip(self.copy_node, self.copy_patch, self.copy_slot)):
            result[int(node)].append((int(patch), int(slot), row))
        return result


def collate(items: Sequence[PreparedGraph], classification: bool = False) -> BatchedPatches:
    """
    Gom các PreparedGraph thành một BatchedPatches.

    Raises:
        DimensionError: Các đồ thị có số patch khác nhau.
    """
    if not items:
        raise DimensionError("Batch rỗng", (0,), (1,))
    num_patches = items[0].patches.num_patches
    node_feat, edge_feat, node_pe, node_graph = [], [], [], []
    copy_node, copy_patch, copy_slot = [], [], []
    e_edge, e_patch, e_src, e_dst = [], [], [], []
    patch_pes, coarse, masks, targets = [], [], [], []
    node_offset = edge_offset = copy_offset = 0
    for b, item in enumerate(items):
        g, ps = item.graph, item.patches
        if ps.num_patches != num_patches:
            raise DimensionError("Số patch không đồng nhất trong batch",
                                 (num_patches,), (ps.num_patches,))
        node_feat.append(g.node_feat)
        if g.edge_feat is not None:
            edge_feat.append(g.edge_feat)
        else:
            edge_feat.append(np.ones((g.num_edges, 1)))
        node_pe.append(item.node_pe)
        node_graph.append(np.full(g.num_nodes, b, dtype=np.int64))
        for p, pg in enumerate(ps.patch_graphs):
            count = len(pg.node_map)
            segment = b * num_patches + p
            copy_node.append(pg.node_map + node_offset)
            copy_patch.append(np.full(count, segment, dtype=np.int64))
            copy_slot.append(np.arange(count, dtype=np.int64))
            local_edges = pg.graph.edges
            e_edge.append(pg.edge_map + edge_offset)
            e_patch.append(np.full(len(local_edges), segment, dtype=np.int64))
            e_src.append(local_edges[:, 0] + copy_offset)
            e_dst.append(local_edges[:, 1] + copy_offset)
            copy_offset += count
        patch_pes.append(item.patch_pe)
        coarse.append(ps.coarse_adj)
        masks.append(ps.mask)
        targets.append((-1 if classification else np.nan) if g.target is None else g.target)
        node_offset += g.num_nodes
        edge_offset += g.num_edges

    def cat(parts, dtype=np.int64):
        return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype=dtype)

    edge_dim = edge_feat[0].shape[1] if edge_feat else 1
    return BatchedPatches(
        batch_size=len(items),
        num_patches=num_patches,
        node_feat=np.concatenate(node_feat, axis=0),
        edge_feat=(np.concatenate(edge_feat, axis=0) if edge_feat
                   else np.zeros((0, edge_dim))),
        node_pe=np.concatenate(node_pe, axis=0),
        node_graph=cat(node_graph),
        copy_node=cat(copy_node),
        copy_patch=cat(copy_patch),
        copy_slot=cat(copy_slot),
        edge_copy_edge=cat(e_edge),
        edge_copy_patch=cat(e_patch),
        edge_copy_src=cat(e_src),
        edge_copy_dst=cat(e_dst),
        patch_pe=np.stack(patch_pes).astype(np.float64),
        coarse_adj=np.stack(coarse).astype(np.float64),
        mask=np.stack(masks).astype(np.float64),
        targets=np.array(targets, dtype=np.int64 if classification else np.float64),
    )
