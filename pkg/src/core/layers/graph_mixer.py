"""
Model đầy đủ: embedding đầu vào -> patch encoder -> patch readout -> patch PE
-> các lớp mixer/gViT -> readout có mask -> head.

architecture = "mpgnn" bỏ qua toàn bộ phần patch: encoder chạy trên cả đồ thị
(một patch duy nhất, không ngữ cảnh patch), readout là trung bình các đỉnh.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from src.core.batching import BatchedPatches, PreparedGraph
from src.core.layers.base import (
    MLP, CategoricalEmbedding, FeatureNorm, ForwardContext, Linear, ModelParams,
)
from src.core.layers.encoders import PatchEncoder
from src.core.layers.mixer import build_mixer_layer
from src.core.tensor import (
    Tensor, add, gather, masked_mean, mul, reshape, segment_mean,
)
from src.models.config import ModelConfig
from src.models.errors import DegenerateGraphError, DimensionError

logger = logging.getLogger(__name__)


def _mask3(mask: np.ndarray, width: int) -> np.ndarray:
    return np.repeat(np.asarray(mask, dtype=np.float64)[:, :, None], width, axis=2)


class GraphMixerModel:
    """
    Graph MLP-Mixer / Graph ViT / baseline MP-GNN dựng trên một ModelParams.

    Tên tham số không phụ thuộc số lớp mixer, nên model có mixer_layers = 0
    chia sẻ giá trị khởi tạo với model đầy đủ cùng seed.

    Args:
        config (ModelConfig): Siêu tham số (đã điền kích thước đầu vào từ dataset).
        params (ModelParams, optional): Sổ tham số; None thì tạo mới với seed.
        seed (int): Seed khởi tạo khi params = None.
    """

    def __init__(self, config: ModelConfig, params: Optional[ModelParams] = None,
                 seed: int = 0):
        config.validate()
        self.config = config
        self.params = params if params is not None else ModelParams(seed)
        self.params.begin_build()
        params = self.params
        d = config.hidden
        self.is_mixer = config.architecture == "mixer"

        # Embedding đầu vào: h⁰ = T⁰p + U⁰α + u⁰, e⁰ = V⁰β + v⁰
        if config.node_vocab:
            self.node_embed = CategoricalEmbedding(params, "input.node_embed", config.node_vocab, d)
        else:
            self.node_embed = Linear(params, "input.node_proj", config.node_in_dim, d)
        pe_dim = config.node_pe_dim if config.node_pe != "none" else 0
        self.pe_proj = Linear(params, "input.pe_proj", pe_dim, d, bias=False) if pe_dim else None
        self.pe_norm = FeatureNorm(params, "input.pe_norm", pe_dim) if pe_dim else None
        if config.edge_vocab:
            self.edge_embed = CategoricalEmbedding(params, "input.edge_embed", config.edge_vocab, d)
        else:
            self.edge_embed = Linear(params, "input.edge_proj", max(1, config.edge_in_dim), d)

        self.encoder = PatchEncoder(params, config, patch_context=self.is_mixer)

        if self.is_mixer:
            self.patch_mlp = MLP(params, "readout.patch_mlp", [d, d, d])
            self.patch_in = Linear(params, "patch_pe.input", d, d)
            self.patch_pe_proj = (
                Linear(params, "patch_pe.proj", config.patch_pe_dim, d, bias=False)
                if config.patch_pe_dim else None
            )
            self.patch_pe_norm = (
                FeatureNorm(params, "patch_pe.norm", config.patch_pe_dim)
                if config.patch_pe_dim else None
            )
            self.mixers = [
                build_mixer_layer(params, f"mixer.{i}", config)
                for i in range(config.mixer_layers)
            ]
        self.head = MLP(params, "head", [d, d, config.output_dim])

    # ========================================================================
    # CÁC BƯỚC
    # ========================================================================

    def embed_inputs(self, batch: BatchedPatches):
        """Trả về (h⁰ [N_tot, d], e⁰ [E_tot, d]) ở mức đỉnh/cạnh gốc."""
        if self.config.node_vocab:
            h = self.node_embed(batch.node_feat)
        else:
            h = self.node_embed(Tensor(batch.node_feat.astype(np.float64)))
        if self.pe_proj is not None:
            if batch.node_pe.shape[1] != self.pe_proj.in_dim:
                raise DimensionError("Chiều PE không khớp T⁰", batch.node_pe.shape,
                                     self.pe_proj.weight.shape)
            h = add(h, self.pe_proj(self.pe_norm(batch.node_pe)))
        if self.config.edge_vocab:
            e = self.edge_embed(batch.edge_feat)
        else:
            e = self.edge_embed(Tensor(batch.edge_feat.astype(np.float64)))
        return h, e

    def patch_readout(self, h: Tensor, batch: BatchedPatches) -> Tensor:
        """x_p = MLP(mean_{i∈V_p} h_i) · m_p, shape [B, P, d]."""
        d = self.config.hidden
        pooled = segment_mean(h, batch.copy_patch, batch.num_segments)
        x = reshape(self.patch_mlp(pooled), (batch.batch_size, batch.num_patches, d))
        return mul(x, _mask3(batch.mask, d))

    def inject_patch_pe(self, x: Tensor, batch: BatchedPatches) -> Tensor:
        """x⁰ = T̂⁰p̂ + Û⁰x + û⁰, áp lại mask sau đó."""
        d = self.config.hidden
        out = self.patch_in(x)
        if self.patch_pe_proj is not None:
            out = add(out, self.patch_pe_proj(self.patch_pe_norm(batch.patch_pe)))
        return mul(out, _mask3(batch.mask, d))

    def fit_input_norms(self, items: Sequence[PreparedGraph]) -> None:
        """
        Ước lượng thống kê chuẩn hóa PE đỉnh và PE patch từ các đồ thị train.

        Giá trị RWSE giữa các lớp có thể chỉ lệch nhau cỡ 1e-3; chuẩn hóa theo cột
        đưa chúng về cùng thang trước phép chiếu T⁰ / T̂⁰.
        """
        items = list(items)
        if not items:
            return
        if self.pe_norm is not None:
            self.pe_norm.fit(np.concatenate([it.node_pe for it in items], axis=0),
                             center=self.config.node_pe != "lap")
        if self.is_mixer and self.patch_pe_norm is not None:
            rows = [it.patch_pe[it.patches.mask > 0] for it in items]
            self.patch_pe_norm.fit(np.concatenate(rows, axis=0))
        logger.debug("📐 Đã ước lượng chuẩn hóa PE trên %d đồ thị", len(items))

    def readout_head(self, x: Tensor, mask: np.ndarray) -> Tensor:
        """
        h_G = Σ m_p x_p / Σ m_p, y = MLP(h_G).

        Raises:
            DegenerateGraphError: Một đồ thị có mọi patch rỗng.
        """
        mask = np.asarray(mask, dtype=np.float64)
        empty = np.flatnonzero(mask.sum(axis=1) == 0)
        if len(empty):
            raise DegenerateGraphError(
                f"Đồ thị thứ {int(empty[0])} trong batch không có patch khác rỗng"
            )
        return self.head(masked_mean(x, mask))

    # ========================================================================
    # FORWARD
    # ========================================================================

    def __call__(self, batch: BatchedPatches, training: bool = False,
                 rng: Optional[np.random.Generator] = None,
                 mixer_limit: Optional[int] = None) -> Tensor:
        """
        Dự đoán cho cả batch: [B, 1] (hồi quy) hoặc [B, n_c] (logits).

        Args:
            mixer_limit (int, optional): Chỉ chạy mixer_limit lớp mixer đầu tiên.
        """
        ctx = ForwardContext(training=training, rng=rng, rate=self.config.dropout)
        h0, e0 = self.embed_inputs(batch)
        h = gather(h0, batch.copy_node)
        e = gather(e0, batch.edge_copy_edge)
        h, e = self.encoder(h, e, batch, ctx)

        if not self.is_mixer:
            if np.any(batch.mask.sum(axis=1) == 0):
                raise DegenerateGraphError("Batch chứa đồ thị không có đỉnh")
            return self.head(segment_mean(h, batch.copy_graph, batch.batch_size))

        x = self.inject_patch_pe(self.patch_readout(h, batch), batch)
        layers = self.mixers if mixer_limit is None else self.mixers[:mixer_limit]
        for layer in layers:
            x = layer(x, batch.coarse_adj, ctx)
        return self.readout_head(x, batch.mask)

    def predict(self, batch: BatchedPatches) -> np.ndarray:
        return self(batch, training=False).data.copy()


def model_forward(config: ModelConfig, params: ModelParams, batch: BatchedPatches,
                  training: bool = False,
                  rng: Optional[np.random.Generator] = None) -> Tensor:
    """Dựng model trên params có sẵn và chạy forward một lần."""
    return GraphMixerModel(config, params)(batch, training=training, rng=rng)
