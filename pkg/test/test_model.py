"""
Test cho model đầy đủ: gradient toàn model, bất biến hoán vị, model cắt cụt,
baseline MP-GNN và các trường hợp suy biến.
"""

import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(project_root))

from src.core.batching import PreparedGraph, collate, prepare_graph
from src.core.layers import GraphMixerModel, ModelParams, model_forward
from src.core.partition import expand_patches, partition_kway
from src.core.posenc import compute_node_pe, patch_pe
from src.core.tensor import Tensor, grad_check, sum_
from src.models.config import ModelConfig
from src.models.errors import DegenerateGraphError, DimensionError
from src.models.graph import Graph
from src.utils.benchmark_performance import random_graphs


def small_config(**overrides):
    base = ModelConfig(hidden=8, encoder_layers=2, mixer_layers=2, num_patches=3,
                       node_pe_dim=3, patch_pe_dim=2, heads=2, drop_prob=0.0)
    return replace(base, **overrides)


def batch_for(config, graphs, seed=0):
    return collate([prepare_graph(g, config, seed=seed + i) for i, g in enumerate(graphs)])


# ============================================================
# Gradient toàn model
# ============================================================

GRID = [(enc, "mlpmixer", "hadamard") for enc in ("gcn", "gine", "gatedgcn", "gt")] + [
    (enc, "vit", kind)
    for enc in ("gcn", "gine", "gatedgcn", "gt")
    for kind in ("full", "graph", "kernel", "additive", "hadamard")
]


@pytest.mark.parametrize("encoder,mixer,gmha", GRID)
def test_full_model_gradients(encoder, mixer, gmha):
    config = small_config(encoder=encoder, mixer=mixer, gmha=gmha)
    graphs = random_graphs(2, num_nodes=8, edge_prob=0.4, seed=11)
    batch = batch_for(config, graphs)
    params = ModelParams(seed=1)
    model = GraphMixerModel(config, params)
    w = Tensor(np.array([[1.0], [-0.5]]))
    report = grad_check(lambda: sum_(model(batch) * w), params.tensors(), h=1e-5,
                        tol=1e-4, max_coords=30)
    assert report.passed, report.failures()


# ============================================================
# Bất biến
# ============================================================

def _prepared_with_partition(g, config, base):
    patches = expand_patches(g, base, config.k_hop, config.num_patches)
    node_pe = compute_node_pe(g, config.node_pe, config.node_pe_dim).values
    ppe = patch_pe(patches.coarse_adj, config.patch_pe_dim)
    return PreparedGraph(graph=g, patches=patches, node_pe=node_pe, patch_pe=ppe)


@pytest.mark.parametrize("mixer", ["mlpmixer", "vit"])
def test_permutation_invariance(mixer):
    """Đổi nhãn đỉnh cùng với phân hoạch tương ứng không làm đổi dự đoán."""
    config = small_config(mixer=mixer, gmha="graph")
    model = GraphMixerModel(config, seed=2)
    rng = np.random.default_rng(0)
    for i, g in enumerate(random_graphs(10, num_nodes=10, edge_prob=0.3, seed=12)):
        g = Graph(g.num_nodes, g.edges, rng.normal(size=(g.num_nodes, 1)))
        perm = rng.permutation(g.num_nodes)
        base = partition_kway(g, config.num_patches, seed=i)
        moved_base = np.empty_like(base)
        moved_base[perm] = base
        a = model.predict(collate([_prepared_with_partition(g, config, base)]))
        b = model.predict(collate([_prepared_with_partition(g.relabel(perm), config,
                                                            moved_base)]))
        assert np.max(np.abs(a - b)) <= 1e-9


def test_permutation_invariance_on_fifty_small_graphs():
    config = small_config(node_pe="rwse", node_pe_dim=4)
    model = GraphMixerModel(config, seed=8)
    rng = np.random.default_rng(21)
    cases = []
    for i in range(50):
        n = int(rng.integers(4, 13))
        g = random_graphs(1, num_nodes=n, edge_prob=0.4, seed=100 + i)[0]
        g = Graph(g.num_nodes, g.edges, rng.normal(size=(n, 1)))
        cases.append((g, partition_kway(g, config.num_patches, seed=i)))
    model.fit_input_norms([_prepared_with_partition(g, config, base) for g, base in cases])
    for g, base in cases:
        perm = rng.permutation(g.num_nodes)
        moved_base = np.empty_like(base)
        moved_base[perm] = base
        a = model.predict(collate([_prepared_with_partition(g, config, base)]))
        b = model.predict(collate([_prepared_with_partition(g.relabel(perm), config,
                                                            moved_base)]))
        assert np.max(np.abs(a - b)) <= 1e-9


def test_replay_is_bitwise_identical():
    """Cùng seed, cùng tham số, cùng batch: dự đoán trùng từng bit."""
    config = small_config(dropout=0.2)
    graphs = random_graphs(3, num_nodes=10, edge_prob=0.3, seed=22)
    first = GraphMixerModel(config, seed=9)
    second = GraphMixerModel(config, seed=9)
    batch_a, batch_b = batch_for(config, graphs, seed=4), batch_for(config, graphs, seed=4)
    assert np.array_equal(first.predict(batch_a), second.predict(batch_b))
    assert np.array_equal(first.predict(batch_a), first.predict(batch_a))
    train_a = first(batch_a, training=True, rng=np.random.default_rng(5)).data
    train_b = second(batch_b, training=True, rng=np.random.default_rng(5)).data
    assert np.array_equal(train_a, train_b)


def test_zero_mixer_model_equals_truncated_model():
    config = small_config(mixer_layers=2)
    batch = batch_for(config, random_graphs(3, num_nodes=9, edge_prob=0.3, seed=13))
    full = GraphMixerModel(config, seed=4)
    truncated = GraphMixerModel(replace(config, mixer_layers=0), seed=4)
    assert np.array_equal(full(batch, mixer_limit=0).data, truncated(batch).data)


def test_batch_order_does_not_change_predictions():
    config = small_config()
    graphs = random_graphs(3, num_nodes=9, edge_prob=0.3, seed=14)
    items = [prepare_graph(g, config, seed=i) for i, g in enumerate(graphs)]
    model = GraphMixerModel(config, seed=5)
    together = model.predict(collate(items))
    alone = np.concatenate([model.predict(collate([item])) for item in items])
    assert np.allclose(together, alone, atol=1e-12)


def test_model_forward_reuses_params():
    config = small_config()
    batch = batch_for(config, random_graphs(1, num_nodes=9, seed=15))
    model = GraphMixerModel(config, seed=6)
    assert np.array_equal(model_forward(config, model.params, batch).data, model(batch).data)


# ============================================================
# Kiến trúc và đầu vào
# ============================================================

def test_classification_head_width():
    config = small_config(task="classification", num_classes=5)
    batch = batch_for(config, random_graphs(2, num_nodes=9, seed=16))
    assert GraphMixerModel(config).predict(batch).shape == (2, 5)


def test_mpgnn_baseline_has_no_mixer_params():
    config = small_config(architecture="mpgnn", mixer_layers=0, node_pe="none")
    model = GraphMixerModel(config)
    assert not any(name.startswith(("mixer.", "readout.", "patch_pe."))
                   for name in model.params.names())
    batch = batch_for(config, random_graphs(2, num_nodes=9, seed=17))
    assert batch.num_patches == 1
    assert model.predict(batch).shape == (2, 1)


def test_dropout_changes_training_forward_only():
    config = small_config(dropout=0.5)
    batch = batch_for(config, random_graphs(2, num_nodes=9, seed=18))
    model = GraphMixerModel(config, seed=7)
    assert np.array_equal(model.predict(batch), model.predict(batch))
    trained = model(batch, training=True, rng=np.random.default_rng(0)).data
    assert not np.array_equal(trained, model.predict(batch))


def test_categorical_node_and_edge_features():
    config = small_config(node_vocab=[4, 3], edge_vocab=[2], node_in_dim=2, edge_in_dim=1)
    rng = np.random.default_rng(19)
    graphs = []
    for g in random_graphs(2, num_nodes=9, seed=19):
        feat = np.stack([rng.integers(0, 4, g.num_nodes), rng.integers(0, 3, g.num_nodes)], 1)
        graphs.append(Graph(g.num_nodes, g.edges, feat, rng.integers(0, 2, (g.num_edges, 1)),
                            target=0.5, node_vocab=(4, 3), edge_vocab=(2,)))
    assert GraphMixerModel(config).predict(batch_for(config, graphs)).shape == (2, 1)


def test_laplacian_pe_model():
    config = small_config(node_pe="lap")
    batch = collate([prepare_graph(g, config, seed=i, training=True)
                     for i, g in enumerate(random_graphs(2, num_nodes=9, seed=20))])
    assert GraphMixerModel(config).predict(batch).shape == (2, 1)


def test_wrong_pe_width_raises():
    config = small_config()
    batch = batch_for(config, random_graphs(1, num_nodes=9, seed=21))
    with pytest.raises(DimensionError):
        GraphMixerModel(replace(config, node_pe_dim=4)).predict(batch)


def test_readout_with_all_patches_empty_is_degenerate():
    model = GraphMixerModel(small_config())
    mask = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    with pytest.raises(DegenerateGraphError):
        model.readout_head(Tensor(np.ones((2, 3, 8))), mask)
    assert model.readout_head(Tensor(np.ones((1, 3, 8))), mask[:1]).shape == (1, 1)


def test_collate_rejects_mixed_patch_counts():
    graphs = random_graphs(2, num_nodes=9, seed=22)
    a = prepare_graph(graphs[0], small_config(), seed=0)
    b = prepare_graph(graphs[1], small_config(num_patches=4), seed=0)
    with pytest.raises(DimensionError):
        collate([a, b])


def test_duplication_map_lists_each_membership_once():
    config = small_config()
    item = prepare_graph(random_graphs(1, num_nodes=12, edge_prob=0.3, seed=23)[0], config, 0)
    batch = collate([item])
    dup = batch.duplication_map()
    for node in range(batch.num_nodes):
        patches = sorted(p for p, _, _ in dup[node])
        expected = [p for p, members in enumerate(item.patches.membership) if node in members]
        assert patches == expected
    assert batch.num_copies == int(item.patches.sizes.sum())
