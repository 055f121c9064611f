"""
Test cho sổ tham số, các layer cơ bản, patch encoder và các lớp mixer.
"""

import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(project_root))

from src.core.batching import collate, prepare_graph
from src.core.layers import (
    MLP, CategoricalEmbedding, FeatureNorm, ForwardContext, GraphAttention, LayerNorm, Linear,
    MixerLayer, ModelParams, PatchEncoder, ViTLayer, overlap_average,
)
from src.core.layers.mixer import random_walk_matrix
from src.core.tensor import Tensor, gather, grad_check, sum_
from src.models.config import ModelConfig
from src.models.errors import CheckpointError, DataError, DimensionError, InvalidArgumentError
from src.utils.benchmark_performance import random_graphs


def small_config(**overrides):
    base = ModelConfig(hidden=8, encoder_layers=2, mixer_layers=2, num_patches=3,
                       node_pe_dim=3, patch_pe_dim=2, heads=2, drop_prob=0.0)
    return replace(base, **overrides)


def small_batch(config, count=2, seed=0):
    graphs = random_graphs(count, num_nodes=9, edge_prob=0.35, seed=seed)
    items = [prepare_graph(g, config, seed=i) for i, g in enumerate(graphs)]
    return collate(items)


def tokens(shape, seed=0):
    return Tensor(np.random.default_rng(seed).normal(size=shape), requires_grad=True, name="x")


# ============================================================
# ModelParams
# ============================================================

def test_param_init_depends_only_on_seed_and_name():
    a, b = ModelParams(seed=3), ModelParams(seed=3)
    b.param("other", (2, 2))
    assert np.array_equal(a.param("w", (4, 5)).data, b.param("w", (4, 5)).data)
    assert not np.array_equal(ModelParams(seed=4).param("w", (4, 5)).data, a["w"].data)


def test_param_claimed_twice_in_one_build():
    params = ModelParams()
    params.param("w", (2,))
    with pytest.raises(InvalidArgumentError):
        params.param("w", (2,))
    params.begin_build()
    assert params.param("w", (2,)) is params["w"]
    params.begin_build()
    with pytest.raises(DimensionError):
        params.param("w", (3,))


def test_state_dict_roundtrip_and_mismatch():
    params = ModelParams()
    Linear(params, "fc", 3, 2)
    state = params.state_dict()
    state["fc.weight"] = state["fc.weight"] + 1.0
    params.load_state_dict(state)
    assert np.array_equal(params["fc.weight"].data, state["fc.weight"])
    with pytest.raises(CheckpointError):
        params.load_state_dict({"fc.weight": state["fc.weight"]})
    with pytest.raises(CheckpointError):
        params.load_state_dict({**state, "fc.bias": np.zeros(5)})


# ============================================================
# Layer cơ bản
# ============================================================

def test_linear_and_mlp_shapes():
    params = ModelParams()
    linear = Linear(params, "fc", 4, 3)
    assert linear(Tensor(np.ones((5, 4)))).shape == (5, 3)
    with pytest.raises(DimensionError):
        linear(Tensor(np.ones((5, 3))))
    mlp = MLP(params, "mlp", [4, 6, 2])
    assert mlp(Tensor(np.ones((2, 7, 4)))).shape == (2, 7, 2)
    assert params.names() == ["fc.weight", "fc.bias", "mlp.0.weight", "mlp.0.bias",
                              "mlp.1.weight", "mlp.1.bias"]


def test_layer_norm_initial_identity_scale():
    params = ModelParams()
    out = LayerNorm(params, "ln", 4)(Tensor(np.array([[1.0, 2.0, 3.0, 4.0]]))).data
    assert np.isclose(out.mean(), 0.0)
    assert np.isclose(out.std(), 1.0, atol=1e-4)


def test_buffers_saved_but_not_trained():
    params = ModelParams()
    Linear(params, "fc", 3, 2)
    norm = FeatureNorm(params, "norm", 3)
    assert params.names() == ["fc.weight", "fc.bias", "norm.mean", "norm.std"]
    assert [t.name for t in params.tensors()] == ["fc.weight", "fc.bias"]
    assert params.num_parameters == 8
    state = params.state_dict()
    state["norm.std"] = np.array([2.0, 2.0, 2.0])
    params.load_state_dict(state)
    assert np.allclose(norm(np.ones((1, 3))).data, 0.5)


def test_feature_norm_fit():
    params = ModelParams()
    norm = FeatureNorm(params, "norm", 2)
    x = np.array([[1.0, 5.0], [3.0, 5.0]])
    assert np.array_equal(norm(x).data, x)
    norm.fit(x)
    assert np.allclose(norm.mean.data, [2.0, 5.0])
    assert np.allclose(norm.std.data, [1.0, 1.0])
    assert np.allclose(norm(x).data, [[-1.0, 0.0], [1.0, 0.0]])
    norm.fit(np.array([[3.0, -4.0], [-3.0, 4.0]]), center=False)
    assert np.allclose(norm.mean.data, 0.0)
    assert np.allclose(norm.std.data, [3.0, 4.0])
    norm.fit(np.zeros((0, 2)))
    assert np.allclose(norm.std.data, [3.0, 4.0])
    with pytest.raises(DimensionError):
        norm(np.ones((1, 3)))


def test_categorical_embedding_sums_columns():
    params = ModelParams()
    emb = CategoricalEmbedding(params, "emb", [3, 2], 4)
    out = emb(np.array([[2, 1], [0, 0]])).data
    assert np.allclose(out[0], params["emb.0"].data[2] + params["emb.1"].data[1])
    with pytest.raises(DataError):
        emb(np.array([[3, 0]]))


# ============================================================
# Patch encoder
# ============================================================

@pytest.mark.parametrize("encoder", ["gcn", "gine", "gatedgcn", "gt"])
def test_patch_encoder_shapes_and_overlap_equality(encoder):
    """Sau mỗi lớp, mọi bản sao của cùng một đỉnh bằng nhau từng bit."""
    config = small_config(encoder=encoder, node_in_dim=1)
    batch = small_batch(config)
    params = ModelParams()
    encoder_ = PatchEncoder(params, config)
    h = Tensor(np.random.default_rng(1).normal(size=(batch.num_copies, 8)))
    e = Tensor(np.random.default_rng(2).normal(size=(batch.num_edge_copies, 8)))
    h_out, e_out = encoder_(h, e, batch, ForwardContext())
    assert h_out.shape == (batch.num_copies, 8)
    assert e_out.shape == (batch.num_edge_copies, 8)
    for copies in batch.duplication_map():
        rows = [row for _, _, row in copies]
        for row in rows[1:]:
            assert np.array_equal(h_out.data[row], h_out.data[rows[0]])


def test_overlap_average_single_copy_unchanged():
    config = small_config()
    batch = small_batch(config, count=1)
    h = Tensor(np.random.default_rng(3).normal(size=(batch.num_copies, 4)))
    e = Tensor(np.random.default_rng(4).normal(size=(batch.num_edge_copies, 4)))
    h_avg, _ = overlap_average(h, e, batch)
    counts = np.bincount(batch.copy_node, minlength=batch.num_nodes)
    single = counts[batch.copy_node] == 1
    assert np.array_equal(h_avg.data[single], h.data[single])


@pytest.mark.parametrize("encoder", ["gcn", "gine", "gatedgcn", "gt"])
def test_patch_encoder_gradients(encoder):
    config = small_config(encoder=encoder, encoder_layers=1)
    batch = small_batch(config, count=1)
    params = ModelParams(seed=5)
    layer = PatchEncoder(params, config)
    h0 = Tensor(np.random.default_rng(6).normal(size=(batch.num_nodes, 8)))
    e0 = Tensor(np.random.default_rng(7).normal(size=(batch.num_edges, 8)))
    w = np.random.default_rng(8).normal(size=(batch.num_copies, 8))

    def loss():
        h, e = layer(gather(h0, batch.copy_node), gather(e0, batch.edge_copy_edge),
                     batch, ForwardContext())
        return sum_(h * Tensor(w)) + 0.1 * sum_(e)

    report = grad_check(loss, params.tensors(), tol=1e-4)
    assert report.passed, report.failures()


# ============================================================
# Mixer
# ============================================================

def test_zero_weight_mixer_layer_is_identity():
    config = small_config()
    params = ModelParams()
    layer = MixerLayer(params, "mixer.0", config)
    for name in ("mixer.0.token_fc2.weight", "mixer.0.token_fc2.bias",
                 "mixer.0.channel_mlp.1.weight", "mixer.0.channel_mlp.1.bias"):
        params[name].data[...] = 0.0
    x = tokens((2, 3, 8))
    out = layer(x, np.ones((2, 3, 3)), ForwardContext())
    assert np.array_equal(out.data, x.data)


@pytest.mark.parametrize("token_norm", ["mixed", "channel"])
def test_mixer_layer_gradients(token_norm):
    config = small_config(token_norm=token_norm)
    params = ModelParams(seed=2)
    layer = MixerLayer(params, "mixer.0", config)
    x = tokens((2, 3, 8), 1)
    w = Tensor(np.random.default_rng(9).normal(size=(2, 3, 8)))
    report = grad_check(lambda: sum_(layer(x, np.ones((2, 3, 3)), ForwardContext()) * w),
                        params.tensors() + [x], tol=1e-4)
    assert report.passed, report.failures()


def test_mixer_rejects_wrong_patch_count():
    layer = MixerLayer(ModelParams(), "mixer.0", small_config())
    with pytest.raises(DimensionError):
        layer(tokens((2, 4, 8)), np.ones((2, 4, 4)), ForwardContext())


def test_hadamard_and_graph_with_all_ones_equal_full_attention():
    x = tokens((2, 3, 8), 3)
    ones = np.ones((2, 3, 3))
    outputs = {}
    for kind in ("full", "hadamard", "graph", "additive"):
        outputs[kind] = GraphAttention(ModelParams(seed=1), "attn", 8, 2, kind)(x, ones).data
    for kind in ("hadamard", "graph", "additive"):
        assert np.max(np.abs(outputs[kind] - outputs["full"])) <= 1e-6


def test_additive_bias_added_after_output_projection():
    x = tokens((2, 3, 8), 6)
    adj = np.array([[[0, 1, 2], [1, 0, 0], [2, 0, 0]], [[0, 1, 0], [1, 0, 1], [0, 1, 0]]],
                   dtype=np.float64)
    full = GraphAttention(ModelParams(seed=2), "attn", 8, 2, "full")(x, adj).data
    params = ModelParams(seed=2)
    additive = GraphAttention(params, "attn", 8, 2, "additive")
    params["attn.ll_scale"].data[...] = 0.5
    params["attn.ll_shift"].data[...] = -0.25
    out = additive(x, adj).data
    expected = full + 0.5 * adj.sum(axis=-1)[:, :, None] - 0.25
    assert np.allclose(out, expected, atol=1e-12)


def test_attention_weights_modulated_by_coarse_graph():
    x = tokens((1, 3, 8), 4)
    adj = np.array([[[0.0, 2.0, 0.0], [2.0, 0.0, 1.0], [0.0, 1.0, 0.0]]])
    full = GraphAttention(ModelParams(), "attn", 8, 2, "full").attention_weights(x, adj).data
    assert np.allclose(full.sum(axis=-1), 1.0)
    hadamard = GraphAttention(ModelParams(), "attn", 8, 2, "hadamard")
    weights = hadamard.attention_weights(x, adj).data
    assert np.all(weights[0, :, 0, 2] == 0.0)
    assert np.allclose(weights, full * adj[:, None])


def test_random_walk_matrix_rows():
    rw = random_walk_matrix(np.array([[[0.0, 2.0, 0.0], [2.0, 0.0, 1.0], [0.0, 0.0, 0.0]]]))
    assert np.allclose(rw[0, 1], [2 / 3, 0.0, 1 / 3])
    assert np.all(rw[0, 2] == 0.0)


@pytest.mark.parametrize("kind", ["full", "graph", "kernel", "additive", "hadamard"])
def test_vit_layer_gradients(kind):
    config = small_config(mixer="vit", gmha=kind)
    params = ModelParams(seed=3)
    layer = ViTLayer(params, "mixer.0", config)
    x = tokens((2, 3, 8), 5)
    adj = np.array([[[0, 1, 2], [1, 0, 0], [2, 0, 0]], [[0, 1, 0], [1, 0, 1], [0, 1, 0]]],
                   dtype=np.float64)
    w = Tensor(np.random.default_rng(10).normal(size=(2, 3, 8)))
    report = grad_check(lambda: sum_(layer(x, adj, ForwardContext()) * w),
                        params.tensors() + [x], tol=1e-4)
    assert report.passed, report.failures()


def test_graph_attention_invalid_heads():
    with pytest.raises(InvalidArgumentError):
        GraphAttention(ModelParams(), "attn", 8, 3, "full")
    with pytest.raises(InvalidArgumentError):
        GraphAttention(ModelParams(), "attn", 8, 2, "sparse")
