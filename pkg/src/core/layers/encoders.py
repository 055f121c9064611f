"""
Patch encoder: MP-GNN chạy độc lập trên từng patch, cộng ngữ cảnh patch và lấy
trung bình các bản sao của đỉnh/cạnh dùng chung giữa các patch sau mỗi lớp.

Mọi phép truyền tin dùng các cạnh nội bộ patch (edge_copy_src/dst), nên thông
tin không bao giờ vượt biên patch trong một lớp.
"""

import logging
from typing import List, Tuple

import numpy as np

from src.core.batching import BatchedPatches
from src.core.layers.base import MLP, ForwardContext, LayerNorm, Linear, ModelParams
from src.core.tensor import (
    Tensor, add, div, expand_last, gather, gelu, mul, reshape, segment_mean,
    segment_softmax, segment_sum, sigmoid, sum_,
)
from src.models.config import ModelConfig
from src.models.errors import InvalidArgumentError

logger = logging.getLogger(__name__)


GATE_EPS = 1e-6


def _column(values: np.ndarray, width: int) -> np.ndarray:
    """Lặp vector [n] thành hằng số [n, width]."""
    return np.repeat(np.asarray(values, dtype=np.float64)[:, None], width, axis=1)


def overlap_average(h: Tensor, e: Tensor, batch: BatchedPatches) -> Tuple[Tensor, Tensor]:
    """
    Thay mọi bản sao của một đỉnh (cạnh) bằng trung bình trên các patch chứa nó.

    Đỉnh chỉ nằm trong một patch giữ nguyên giá trị; sau phép này mọi bản sao
    của cùng một đỉnh bằng nhau từng bit.
    """
    node_mean = segment_mean(h, batch.copy_node, batch.num_nodes)
    edge_mean = segment_mean(e, batch.edge_copy_edge, batch.num_edges)
    return gather(node_mean, batch.copy_node), gather(edge_mean, batch.edge_copy_edge)


class _EncoderLayer:
    """
    Khung chung: h' = f_node(...) + g_patch-node(h̄_p), e' = f_edge(...) + g_patch-edge(ē_p).

    Lớp con cài đặt `convolve`, trả về (h', e') chưa có ngữ cảnh patch.
    """

    def __init__(self, params: ModelParams, name: str, hidden: int, patch_context: bool):
        self.hidden = hidden
        self.patch_context = patch_context
        if patch_context:
            self.patch_node = MLP(params, f"{name}.patch_node", [hidden, hidden, hidden])
            self.patch_edge = MLP(params, f"{name}.patch_edge", [hidden, hidden, hidden])

    def convolve(self, h: Tensor, e: Tensor, batch: BatchedPatches,
                 ctx: ForwardContext) -> Tuple[Tensor, Tensor]:
        raise NotImplementedError

    def __call__(self, h: Tensor, e: Tensor, batch: BatchedPatches,
                 ctx: ForwardContext) -> Tuple[Tensor, Tensor]:
        h_new, e_new = self.convolve(h, e, batch, ctx)
        if self.patch_context:
            segments = batch.num_segments
            h_bar = segment_mean(h, batch.copy_patch, segments)
            e_bar = segment_mean(e, batch.edge_copy_patch, segments)
            h_new = add(h_new, gather(self.patch_node(h_bar), batch.copy_patch))
            e_new = add(e_new, gather(self.patch_edge(e_bar), batch.edge_copy_patch))
        return h_new, e_new


class GCNLayer(_EncoderLayer):
    """GCN chuẩn hóa đối xứng có self-loop; cạnh chỉ nhận ngữ cảnh patch."""

    def __init__(self, params: ModelParams, name: str, hidden: int, patch_context: bool):
        super().__init__(params, name, hidden, patch_context)
        self.linear = Linear(params, f"{name}.linear", hidden, hidden)

    def convolve(self, h, e, batch, ctx):
        src, dst, _ = batch.directed
        degree = batch.copy_degree + 1.0
        hw = self.linear(h)
        norm = 1.0 / np.sqrt(degree[src] * degree[dst])
        messages = mul(gather(hw, src), _column(norm, self.hidden))
        agg = add(segment_sum(messages, dst, batch.num_copies),
                  mul(hw, _column(1.0 / degree, self.hidden)))
        return add(h, ctx.dropout(gelu(agg))), e


class GINELayer(_EncoderLayer):
    """GINE: MLP(h_i + Σ_j GELU(h_j + e_ij))."""

    def __init__(self, params: ModelParams, name: str, hidden: int, patch_context: bool):
        super().__init__(params, name, hidden, patch_context)
        self.mlp = MLP(params, f"{name}.mlp", [hidden, hidden, hidden])

    def convolve(self, h, e, batch, ctx):
        src, dst, edge_ids = batch.directed
        messages = gelu(add(gather(h, src), gather(e, edge_ids)))
        agg = segment_sum(messages, dst, batch.num_copies)
        return add(h, ctx.dropout(gelu(self.mlp(add(h, agg))))), e


class GatedGCNLayer(_EncoderLayer):
    """
    GatedGCN: cổng σ(A h_i + B h_j + C e_ij) chuẩn hóa theo tổng cổng của đỉnh nhận.

    Cạnh được cập nhật bằng trung bình hai chiều của ê_ij.
    """

    def __init__(self, params: ModelParams, name: str, hidden: int, patch_context: bool):
        super().__init__(params, name, hidden, patch_context)
        self.a = Linear(params, f"{name}.A", hidden, hidden)
        self.b = Linear(params, f"{name}.B", hidden, hidden)
        self.c = Linear(params, f"{name}.C", hidden, hidden)
        self.u = Linear(params, f"{name}.U", hidden, hidden)
        self.v = Linear(params, f"{name}.V", hidden, hidden)

    def convolve(self, h, e, batch, ctx):
        src, dst, edge_ids = batch.directed
        e_hat = add(add(gather(self.a(h), dst), gather(self.b(h), src)),
                    gather(self.c(e), edge_ids))
        gate = sigmoid(e_hat)
        num = segment_sum(mul(gate, gather(self.v(h), src)), dst, batch.num_copies)
        den = add(segment_sum(gate, dst, batch.num_copies), GATE_EPS)
        agg = add(self.u(h), div(num, den))
        e_sym = mul(segment_sum(e_hat, edge_ids, batch.num_edge_copies), 0.5)
        return add(h, ctx.dropout(gelu(agg))), add(e, ctx.dropout(gelu(e_sym)))


class GraphTransformerLayer(_EncoderLayer):
    """
    Graph transformer trên láng giềng trong patch: điểm chú ý của mỗi head là
    Σ q_i k_j E e_ij / √d_k, softmax theo các cạnh vào cùng một đỉnh.
    """

    def __init__(self, params: ModelParams, name: str, hidden: int, heads: int,
                 patch_context: bool):
        super().__init__(params, name, hidden, patch_context)
        if hidden % heads != 0:
            raise InvalidArgumentError(f"hidden={hidden} không chia hết cho heads={heads}")
        self.heads = heads
        self.head_dim = hidden // heads
        self.q = Linear(params, f"{name}.Q", hidden, hidden)
        self.k = Linear(params, f"{name}.K", hidden, hidden)
        self.v = Linear(params, f"{name}.V", hidden, hidden)
        self.edge = Linear(params, f"{name}.E", hidden, hidden)
        self.out = Linear(params, f"{name}.O", hidden, hidden)
        self.edge_out = Linear(params, f"{name}.O_edge", hidden, hidden)
        self.norm = LayerNorm(params, f"{name}.norm", hidden)
        self.ffn = MLP(params, f"{name}.ffn", [hidden, 2 * hidden, hidden])

    def convolve(self, h, e, batch, ctx):
        src, dst, edge_ids = batch.directed
        rows = len(src)
        scale = 1.0 / np.sqrt(self.head_dim)
        w = mul(mul(mul(gather(self.q(h), dst), gather(self.k(h), src)),
                    gather(self.edge(e), edge_ids)), scale)
        w_heads = reshape(w, (rows, self.heads, self.head_dim))
        scores = sum_(w_heads, axis=-1, keepdims=True)
        attn = segment_softmax(scores, dst, batch.num_copies)
        values = reshape(gather(self.v(h), src), (rows, self.heads, self.head_dim))
        messages = mul(expand_last(attn, self.head_dim), values)
        agg = reshape(segment_sum(messages, dst, batch.num_copies),
                      (batch.num_copies, self.hidden))
        h_mid = add(h, ctx.dropout(self.out(agg)))
        h_new = add(h_mid, ctx.dropout(self.ffn(self.norm(h_mid))))
        e_sym = mul(segment_sum(w, edge_ids, batch.num_edge_copies), 0.5)
        return h_new, add(e, ctx.dropout(self.edge_out(e_sym)))


def build_encoder_layer(params: ModelParams, name: str, config: ModelConfig,
                        patch_context: bool) -> _EncoderLayer:
    kind = config.encoder
    if kind == "gcn":
        return GCNLayer(params, name, config.hidden, patch_context)
    if kind == "gine":
        return GINELayer(params, name, config.hidden, patch_context)
    if kind == "gatedgcn":
        return GatedGCNLayer(params, name, config.hidden, patch_context)
    if kind == "gt":
        return GraphTransformerLayer(params, name, config.hidden, config.heads, patch_context)
    raise InvalidArgumentError(f"Loại encoder không hợp lệ: {kind}")


class PatchEncoder:
    """L lớp encoder, mỗi lớp theo sau bởi overlap_average."""

    def __init__(self, params: ModelParams, config: ModelConfig, patch_context: bool = True):
        self.layers: List[_EncoderLayer] = [
            build_encoder_layer(params, f"encoder.{i}", config, patch_context)
            for i in range(config.encoder_layers)
        ]

    def __call__(self, h: Tensor, e: Tensor, batch: BatchedPatches,
                 ctx: ForwardContext) -> Tuple[Tensor, Tensor]:
        for layer in self.layers:
            h, e = layer(h, e, batch, ctx)
            h, e = overlap_average(h, e, batch)
        return h, e
