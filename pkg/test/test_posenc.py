"""
Test cho RWSE, Laplacian PE (Jacobi) và PE mức patch.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(project_root))

from src.core.posenc import (
    compute_node_pe, jacobi_eigh, lap_pe, normalized_laplacian, patch_pe, rwse,
)
from src.models.errors import InvalidArgumentError
from src.models.graph import Graph
from src.utils.benchmark_performance import random_graphs
from src.utils.synthetic import gen_csl


def cycle(n):
    return Graph(num_nodes=n, edges=[(i, (i + 1) % n) for i in range(n)], node_feat=np.ones(n))


def rwse_oracle(g, steps):
    """Lũy thừa ma trận trực tiếp của D^-1 A."""
    a = g.adjacency.toarray()
    deg = a.sum(1)
    walk = np.zeros_like(a)
    walk[deg > 0] = a[deg > 0] / deg[deg > 0, None]
    return np.stack([np.diag(np.linalg.matrix_power(walk, k)) for k in range(1, steps + 1)], 1)


# ============================================================
# RWSE
# ============================================================

def test_rwse_matches_matrix_power_oracle():
    for g in random_graphs(10, num_nodes=25, edge_prob=0.2, seed=3):
        assert np.max(np.abs(rwse(g.adjacency, 8) - rwse_oracle(g, 8))) <= 1e-10


def test_rwse_on_cycle():
    """Trên chu trình chẵn, xác suất quay về sau số bước lẻ bằng 0."""
    pe = rwse(cycle(6).adjacency, 4)
    assert np.allclose(pe[:, 0], 0.0)
    assert np.allclose(pe[:, 1], 0.5)
    assert np.allclose(pe[:, 2], 0.0)
    assert np.allclose(pe[:, 3], 3 / 8)


def test_rwse_isolated_node_row_is_zero():
    g = Graph(num_nodes=3, edges=[(0, 1)], node_feat=np.ones(3))
    pe = rwse(g.adjacency, 3)
    assert np.all(pe[2] == 0.0)
    assert pe[0].tolist() == [0.0, 1.0, 0.0]


def test_rwse_on_regular_graph():
    """Đồ thị CSL 4-chính quy: xác suất quay về sau 2 bước là 1/4 ở mọi đỉnh."""
    pe = rwse(gen_csl(0)[0].adjacency, 2)
    assert np.allclose(pe[:, 0], 0.0)
    assert np.allclose(pe[:, 1], 0.25)


def test_rwse_rejects_zero_steps():
    with pytest.raises(InvalidArgumentError):
        rwse(cycle(4).adjacency, 0)


# ============================================================
# Laplacian
# ============================================================

def test_jacobi_matches_eigh():
    for g in random_graphs(5, num_nodes=20, edge_prob=0.25, seed=8):
        lap = normalized_laplacian(g)
        values, vectors = jacobi_eigh(lap)
        assert np.allclose(values, np.linalg.eigvalsh(lap), atol=1e-8)
        assert np.max(np.abs(lap @ vectors - vectors * values[None, :])) <= 1e-7
        assert np.allclose(vectors.T @ vectors, np.eye(g.num_nodes), atol=1e-8)


def test_jacobi_values_sorted_ascending():
    values, _ = jacobi_eigh(normalized_laplacian(cycle(7)))
    assert np.all(np.diff(values) >= -1e-12)
    assert abs(values[0]) < 1e-9


def test_lap_pe_pads_small_graphs():
    g = Graph(num_nodes=3, edges=[(0, 1), (1, 2)], node_feat=np.ones(3))
    pe = lap_pe(g, 4).values
    assert pe.shape == (3, 4)
    assert np.all(pe[:, 2:] == 0.0)


def test_lap_pe_sign_flip_only_when_training():
    g = cycle(8)
    base = lap_pe(g, 3).values
    flipped = lap_pe(g, 3, np.random.default_rng(0), training=True).values
    for k in range(3):
        col = flipped[:, k]
        assert np.allclose(col, base[:, k]) or np.allclose(col, -base[:, k])
    with pytest.raises(InvalidArgumentError):
        lap_pe(g, 3, training=True)


# ============================================================
# PE mức patch và dispatcher
# ============================================================

def test_patch_pe_weighted_vs_binary():
    coarse = np.array([[0, 3, 0], [3, 0, 1], [0, 1, 0]])
    weighted = patch_pe(coarse, 2)
    binary = patch_pe(coarse, 2, binary=True)
    assert weighted.shape == (3, 2)
    assert np.isclose(weighted[0, 1], 0.75)
    assert np.isclose(binary[0, 1], 0.5)


def test_compute_node_pe_dispatch():
    g = cycle(5)
    assert compute_node_pe(g, "rwse", 3).values.shape == (5, 3)
    assert compute_node_pe(g, "lap", 2).kind == "lap"
    assert compute_node_pe(g, "none", 4).dim == 0
    with pytest.raises(InvalidArgumentError):
        compute_node_pe(g, "spd", 4)
