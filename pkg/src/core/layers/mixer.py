"""
Các lớp trộn patch: MLP-Mixer (token + channel mixing) và Graph ViT với gMHA.

Đầu vào/ra đều là X [B, P, d]; patch rỗng tham gia token mixing như dòng 0,
mask chỉ được áp dụng lại ở readout.
"""

import logging

import numpy as np

from src.core.layers.base import MLP, LayerNorm, Linear, ModelParams
from src.core.tensor import (
    Tensor, add, expand_last, gelu, matmul, mul, permute, reshape, softmax, transpose,
)
from src.models.config import GMHA_KINDS, ModelConfig
from src.models.errors import DimensionError, InvalidArgumentError

logger = logging.getLogger(__name__)


class MixerLayer:
    """
    U = X + W₂ σ(W₁ LN(X)) trộn theo trục patch,
    Y = U + W₄ σ(W₃ LN(U)) trộn theo trục kênh.

    token_norm = "mixed": LayerNorm của khối token chuẩn hóa theo trục patch;
    "channel": chuẩn hóa theo trục kênh như MLP-Mixer ảnh.
    """

    def __init__(self, params: ModelParams, name: str, config: ModelConfig):
        p, d = config.num_patches, config.hidden
        self.num_patches = p
        self.token_norm_kind = config.token_norm
        norm_dim = p if config.token_norm == "mixed" else d
        self.token_norm = LayerNorm(params, f"{name}.token_norm", norm_dim)
        self.token_fc1 = Linear(params, f"{name}.token_fc1", p, config.token_width)
        self.token_fc2 = Linear(params, f"{name}.token_fc2", config.token_width, p)
        self.channel_norm = LayerNorm(params, f"{name}.channel_norm", d)
        self.channel_mlp = MLP(params, f"{name}.channel_mlp", [d, config.channel_width, d])

    def __call__(self, x: Tensor, coarse_adj: np.ndarray, ctx) -> Tensor:
        if x.ndim != 3 or x.shape[1] != self.num_patches:
            raise DimensionError("Mixer: số patch không khớp", x.shape, (self.num_patches,))
        if self.token_norm_kind == "mixed":
            z = self.token_norm(permute(x, (0, 2, 1)))
        else:
            z = permute(self.token_norm(x), (0, 2, 1))
        z = self.token_fc2(ctx.dropout(gelu(self.token_fc1(z))))
        u = add(x, ctx.dropout(permute(z, (0, 2, 1))))
        return add(u, ctx.dropout(self.channel_mlp(self.channel_norm(u))))


def random_walk_matrix(coarse_adj: np.ndarray) -> np.ndarray:
    """D⁻¹ A^P theo từng đồ thị; dòng bậc 0 cho 0."""
    degree = coarse_adj.sum(axis=-1, keepdims=True)
    return np.divide(coarse_adj, degree, out=np.zeros_like(coarse_adj), where=degree > 0)


class GraphAttention:
    """
    Multi-head attention trên các patch, điều biến bởi A^P.

    kind:
        full      softmax(QKᵀ/√d)V
        graph     softmax(A^P ⊙ QKᵀ/√d)V
        kernel    softmax(RW(A^P) ⊙ QKᵀ/√d)V với RW = D⁻¹A^P
        additive  softmax(QKᵀ/√d)V + a·rowsum(A^P) + b (sau phép chiếu ra)
        hadamard  (A^P ⊙ softmax(QKᵀ/√d))V
    """

    def __init__(self, params: ModelParams, name: str, hidden: int, heads: int, kind: str):
        if kind not in GMHA_KINDS:
            raise InvalidArgumentError(f"Loại gMHA không hợp lệ: {kind}")
        if hidden % heads != 0:
            raise InvalidArgumentError(f"hidden={hidden} không chia hết cho heads={heads}")
        self.kind = kind
        self.hidden = hidden
        self.heads = heads
        self.head_dim = hidden // heads
        self.q = Linear(params, f"{name}.Q", hidden, hidden)
        self.k = Linear(params, f"{name}.K", hidden, hidden)
        self.v = Linear(params, f"{name}.V", hidden, hidden)
        self.out = Linear(params, f"{name}.O", hidden, hidden)
        if kind == "additive":
            self.ll_scale = params.param(f"{name}.ll_scale", (1,), "zeros")
            self.ll_shift = params.param(f"{name}.ll_shift", (1,), "zeros")

    def _split(self, x: Tensor) -> Tensor:
        b, p, _ = x.shape
        return permute(reshape(x, (b, p, self.heads, self.head_dim)), (0, 2, 1, 3))

    def attention_weights(self, x: Tensor, coarse_adj: np.ndarray) -> Tensor:
        """Ma trận chú ý [B, H, P, P] (sau softmax và điều biến của kind)."""
        q, k = self._split(self.q(x)), self._split(self.k(x))
        scores = mul(matmul(q, transpose(k)), 1.0 / np.sqrt(self.head_dim))
        adj = np.repeat(np.asarray(coarse_adj, dtype=np.float64)[:, None], self.heads, axis=1)
        if self.kind == "graph":
            return softmax(mul(scores, adj), axis=-1)
        if self.kind == "kernel":
            return softmax(mul(scores, random_walk_matrix(adj)), axis=-1)
        if self.kind == "hadamard":
            return mul(softmax(scores, axis=-1), adj)
        return softmax(scores, axis=-1)

    def __call__(self, x: Tensor, coarse_adj: np.ndarray) -> Tensor:
        b, p, d = x.shape
        attn = self.attention_weights(x, coarse_adj)
        heads = matmul(attn, self._split(self.v(x)))
        out = self.out(reshape(permute(heads, (0, 2, 1, 3)), (b, p, d)))
        if self.kind == "additive":
            rowsum = np.asarray(coarse_adj, dtype=np.float64).sum(axis=-1)[:, :, None]
            bias = add(mul(self.ll_scale, rowsum), self.ll_shift)
            out = add(out, expand_last(bias, d))
        return out


class ViTLayer:
    """U = X + gMHA(LN(X), A^P), Y = U + MLP(LN(U))."""

    def __init__(self, params: ModelParams, name: str, config: ModelConfig):
        d = config.hidden
        self.norm1 = LayerNorm(params, f"{name}.norm1", d)
        self.attention = GraphAttention(params, f"{name}.attn", d, config.heads, config.gmha)
        self.norm2 = LayerNorm(params, f"{name}.norm2", d)
        self.mlp = MLP(params, f"{name}.mlp", [d, config.channel_width, d])

    def __call__(self, x: Tensor, coarse_adj: np.ndarray, ctx) -> Tensor:
        u = add(x, ctx.dropout(self.attention(self.norm1(x), coarse_adj)))
        return add(u, ctx.dropout(self.mlp(self.norm2(u))))


def build_mixer_layer(params: ModelParams, name: str, config: ModelConfig):
    if config.mixer == "mlpmixer":
        return MixerLayer(params, name, config)
    if config.mixer == "vit":
        return ViTLayer(params, name, config)
    raise InvalidArgumentError(f"Loại mixer không hợp lệ: {config.mixer}")
