"""
Test cho Graph, chỉ mục kề, bao đóng k-hop và đồ thị con cảm sinh.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(project_root))

from src.core.graph_ops import as_node_set, build_index, induced_subgraph, k_hop_closure
from src.models.errors import MalformedGraphError
from src.models.graph import Graph


def path_graph(n):
    return Graph(num_nodes=n, edges=[(i, i + 1) for i in range(n - 1)],
                 node_feat=np.arange(n, dtype=np.float64))


# ============================================================
# Graph
# ============================================================

def test_graph_rejects_out_of_range_node():
    """Cạnh trỏ tới đỉnh ngoài [0, N) phải bị từ chối và báo đúng chỉ số cạnh."""
    with pytest.raises(MalformedGraphError, match="Cạnh 1"):
        Graph(num_nodes=3, edges=[(0, 1), (1, 3)], node_feat=np.ones(3))


def test_graph_rejects_self_loop_and_duplicates():
    with pytest.raises(MalformedGraphError):
        Graph(num_nodes=3, edges=[(1, 1)], node_feat=np.ones(3))
    with pytest.raises(MalformedGraphError):
        Graph(num_nodes=3, edges=[(0, 1), (1, 0)], node_feat=np.ones(3))


def test_graph_rejects_misaligned_features():
    with pytest.raises(MalformedGraphError):
        Graph(num_nodes=3, edges=[(0, 1)], node_feat=np.ones(4))
    with pytest.raises(MalformedGraphError):
        Graph(num_nodes=3, edges=[(0, 1)], node_feat=np.ones(3), edge_feat=np.ones((2, 1)))


def test_graph_is_immutable():
    g = path_graph(4)
    with pytest.raises(ValueError):
        g.edges[0, 0] = 3


def test_adjacency_is_symmetric():
    g = path_graph(5)
    a = g.adjacency.toarray()
    assert np.array_equal(a, a.T)
    assert a.sum() == 2 * g.num_edges


def test_relabel_preserves_structure():
    g = path_graph(5)
    perm = np.array([4, 2, 0, 1, 3])
    h = g.relabel(perm)
    a, b = g.adjacency.toarray(), h.adjacency.toarray()
    assert np.array_equal(b[np.ix_(perm, perm)], a)
    assert np.array_equal(h.node_feat[perm], g.node_feat)


def test_empty_graph_is_valid():
    g = Graph(num_nodes=0, edges=np.zeros((0, 2)), node_feat=np.zeros((0, 1)))
    index = build_index(g)
    assert g.num_edges == 0
    assert index.num_nodes == 0


# ============================================================
# Chỉ mục kề
# ============================================================

def test_build_index_neighbors_sorted_with_edge_ids():
    g = Graph(num_nodes=4, edges=[(2, 0), (0, 1), (3, 0)], node_feat=np.ones(4))
    index = build_index(g)
    assert index.neighbors_of(0).tolist() == [1, 2, 3]
    assert index.edges_of(0).tolist() == [1, 0, 2]
    assert index.degrees.tolist() == [3, 1, 1, 1]


def test_build_index_independent_of_edge_order():
    edges = [(0, 1), (1, 2), (2, 3), (0, 3)]
    a = build_index(Graph(num_nodes=4, edges=edges, node_feat=np.ones(4)))
    b = build_index(Graph(num_nodes=4, edges=edges[::-1], node_feat=np.ones(4)))
    assert np.array_equal(a.neighbors, b.neighbors)
    assert np.array_equal(a.indptr, b.indptr)


# ============================================================
# Bao đóng k-hop
# ============================================================

@pytest.mark.parametrize("k,expected", [(0, [2]), (1, [1, 2, 3]), (2, [0, 1, 2, 3, 4]),
                                        (10, [0, 1, 2, 3, 4, 5])])
def test_k_hop_closure_on_path(k, expected):
    index = build_index(path_graph(6))
    assert k_hop_closure(index, [2], k).tolist() == expected


def test_k_hop_closure_empty_seed():
    index = build_index(path_graph(4))
    assert k_hop_closure(index, [], 3).size == 0


def test_k_hop_closure_is_monotone():
    index = build_index(path_graph(8))
    prev = set()
    for k in range(5):
        cur = set(k_hop_closure(index, [0, 7], k).tolist())
        assert prev <= cur
        prev = cur


# ============================================================
# Đồ thị con cảm sinh
# ============================================================

def test_induced_subgraph_keeps_inner_edges_only():
    g = Graph(num_nodes=5, edges=[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)],
              node_feat=np.arange(5.0), edge_feat=np.arange(5.0), target=1.5)
    sub = induced_subgraph(g, [4, 0, 1])
    assert sub.node_map.tolist() == [0, 1, 4]
    assert sub.edge_map.tolist() == [0, 4]
    assert sub.graph.node_feat[:, 0].tolist() == [0.0, 1.0, 4.0]
    assert sub.graph.edge_feat[:, 0].tolist() == [0.0, 4.0]
    assert sub.graph.target == 1.5
    for local, global_id in zip(sub.graph.edges, sub.edge_map):
        assert sorted(sub.node_map[local].tolist()) == sorted(g.edges[global_id].tolist())


def test_as_node_set_sorts_and_dedups():
    assert as_node_set([3, 1, 3, 0]).tolist() == [0, 1, 3]
