"""
Benchmark ở quy mô máy bàn: chất lượng phân hoạch, chi phí augmentation,
CSL, TreeNeighbourMatch và hồi quy đếm tam giác.

Chạy: python -m src.utils.benchmark_performance [--quick]
"""

import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

project_root = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(project_root))

from src.core.partition import expand_patches, mean_cut, partition_kway  # noqa: E402
from src.core.solvers.trainer import run_cross_validation, train_loop  # noqa: E402
from src.models.config import ModelConfig, TrainConfig  # noqa: E402
from src.models.graph import Graph  # noqa: E402
from src.utils.data_loader import kfold_split  # noqa: E402
from src.utils.synthetic import gen_csl, gen_tree_match, gen_triangle_regression  # noqa: E402


def random_graphs(count=100, num_nodes=60, edge_prob=0.1, seed=0):
    """Đồ thị Erdős–Rényi có seed."""
    rng = np.random.default_rng(seed)
    graphs = []
    for i in range(count):
        upper = np.triu(rng.random((num_nodes, num_nodes)) < edge_prob, k=1)
        graphs.append(Graph(num_nodes=num_nodes, edges=np.argwhere(upper),
                            node_feat=np.ones((num_nodes, 1)), name=f"er_{i}"))
    return graphs


def _banner(title):
    print(f"\n{'=' * 60}")
    print(title)
    print(f"{'=' * 60}")


def benchmark_partition(count=100, num_parts=8, epsilon=0.1, seed=0):
    """Cut trung bình metis vs random, kiểm tra cân bằng và phủ cạnh (k = 1)."""
    _banner(f"BENCHMARK: Phân hoạch ({count} đồ thị, P={num_parts})")
    graphs = random_graphs(count, seed=seed)
    start = time.time()
    metis = mean_cut(graphs, num_parts, "metis", seed, epsilon)
    elapsed = time.time() - start
    rand = mean_cut(graphs, num_parts, "random", seed, epsilon)
    limit = int(np.ceil((1 + epsilon) * graphs[0].num_nodes / num_parts))
    balanced, covered = True, True
    for i, g in enumerate(graphs):
        part = partition_kway(g, num_parts, epsilon, seed + i)
        balanced &= int(np.bincount(part, minlength=num_parts).max()) <= limit
        covered &= len(expand_patches(g, part, 1, num_parts).covered_edges()) == g.num_edges
    print(f"⏱️ Execution time: {elapsed:.2f}s")
    print(f"📊 Mean cut metis: {metis:.2f} | random: {rand:.2f}")
    print(f"📊 Cân bằng: {balanced} | Phủ cạnh: {covered}")
    return {"metis": metis, "random": rand, "balanced": balanced, "covered": covered}


def _triangle_configs():
    """(GINE-MLP-Mixer, baseline encoder-only không PE) cho bài đếm tam giác."""
    mixer = ModelConfig(hidden=32, encoder_layers=2, mixer_layers=2, num_patches=8,
                        node_pe="rwse", node_pe_dim=8, patch_pe_dim=4, drop_prob=0.0)
    baseline = replace(mixer, architecture="mpgnn", node_pe="none", mixer_layers=0)
    return mixer, baseline


def _median_epoch_seconds(record):
    return float(np.median([e.seconds for e in record.epochs])) if record.epochs else 0.0


def benchmark_augmentation(num_graphs=500, epochs=60, seeds=(0, 1, 2, 3), num_workers=None):
    """
    Augmentation (drop_prob=0.3, phân hoạch lại mỗi epoch) so với patch cố định.

    Returns:
        dict: MAE test trung bình theo seed của hai chế độ và overhead thời gian
            mỗi epoch (trung vị theo epoch, trung bình theo seed).
    """
    _banner(f"BENCHMARK: Augmentation ({num_graphs} đồ thị, {len(seeds)} seed)")
    if num_workers is None:
        num_workers = min(4, os.cpu_count() or 1)
    mixer, _ = _triangle_configs()
    train = TrainConfig(epochs=epochs, batch_size=32, lr=0.002, num_workers=num_workers)
    maes = {0.0: [], 0.3: []}
    overheads = []
    for seed in seeds:
        dataset = gen_triangle_regression(num_graphs, seed)
        seconds = {}
        for drop in (0.0, 0.3):
            result = train_loop(replace(mixer, drop_prob=drop), train, dataset, seed)
            maes[drop].append(result.metrics["test"].get("mae", float("nan")))
            seconds[drop] = _median_epoch_seconds(result.record)
        overheads.append(seconds[0.3] / seconds[0.0] - 1.0 if seconds[0.0] > 0 else 0.0)
        print(f"📈 seed {seed}: MAE cố định {maes[0.0][-1]:.4f} | augmentation {maes[0.3][-1]:.4f}"
              f" | overhead {overheads[-1] * 100:.1f}%")
    results = {
        "mae_static": float(np.mean(maes[0.0])),
        "mae_augmented": float(np.mean(maes[0.3])),
        "overhead": float(np.mean(overheads)),
    }
    print(f"📊 MAE trung bình: cố định {results['mae_static']:.4f} | "
          f"augmentation {results['mae_augmented']:.4f} | overhead {results['overhead'] * 100:.1f}%")
    return results


def benchmark_csl(epochs=30, seed=0):
    """CSL 5-fold phân tầng: GINE-MLP-Mixer (RWSE-8, P=8) vs MP-GNN không PE."""
    _banner("BENCHMARK: CSL 5-fold")
    dataset = gen_csl(seed)
    dataset = dataset.with_folds(kfold_split(dataset, 5, True, seed))
    train = TrainConfig(epochs=epochs, batch_size=16, lr=0.005)
    mixer = ModelConfig(hidden=32, encoder_layers=2, mixer_layers=2, num_patches=8,
                        node_pe="rwse", node_pe_dim=8, patch_pe_dim=8, drop_prob=0.0)
    baseline = replace(mixer, architecture="mpgnn", node_pe="none", mixer_layers=0)
    results = {}
    for name, config in (("mixer", mixer), ("mpgnn", baseline)):
        start = time.time()
        cv = run_cross_validation(config, train, dataset, seed)
        results[name] = cv.mean
        print(f"⏱️ {name}: {time.time() - start:.2f}s | accuracy {cv.mean:.3f} ± {cv.std:.3f}")
    return results


def tree_configs(depth):
    """
    (Graph MLP-Mixer, GCN) cho TreeNeighbourMatch độ sâu r.

    P = 2^(r+1) >= số đỉnh nên mỗi đỉnh là một patch ở vị trí cố định (đánh số
    kiểu heap); token mixing đọc trực tiếp vị trí lá. GCN có r+1 lớp để tầm nhìn
    của gốc chạm tới lá.
    """
    num_patches = 2 ** (depth + 1)
    mixer = ModelConfig(hidden=64, encoder="gine", encoder_layers=1, mixer_layers=2,
                        num_patches=num_patches, k_hop=0, node_pe="none", patch_pe_dim=0,
                        token_dim=num_patches, drop_prob=0.0)
    baseline = replace(mixer, architecture="mpgnn", encoder="gcn",
                       encoder_layers=depth + 1, mixer_layers=0)
    return mixer, baseline


TREE_SCHEDULES = {
    # depth: (num_samples, epochs, batch_size)
    2: (0, 200, 16),
    3: (4000, 30, 64),
    4: (8000, 20, 64),
}


def benchmark_tree(depth=2, num_samples=None, epochs=None, seed=0):
    """TreeNeighbourMatch: Graph MLP-Mixer vs baseline GCN, độ chính xác test."""
    _banner(f"BENCHMARK: TreeNeighbourMatch r={depth}")
    default_samples, default_epochs, batch_size = TREE_SCHEDULES.get(depth, (4000, 30, 64))
    num_samples = default_samples if num_samples is None else num_samples
    epochs = default_epochs if epochs is None else epochs
    dataset = gen_tree_match(depth, num_samples, seed)
    train = TrainConfig(epochs=epochs, batch_size=batch_size, lr=0.005)
    results = {}
    for name, config in zip(("mixer", "gcn"), tree_configs(depth)):
        result = train_loop(config, train, dataset, seed)
        results[name] = result.metrics["test"].get("accuracy", float("nan"))
        print(f"📈 {name}: test accuracy {results[name]:.3f}")
    return results


def benchmark_triangles(num_graphs=2000, epochs=200, seed=0):
    """Đếm tam giác: GINE-MLP-Mixer vs patch encoder không mixer, không PE."""
    _banner(f"BENCHMARK: Đếm tam giác ({num_graphs} đồ thị, {epochs} epoch)")
    dataset = gen_triangle_regression(num_graphs, seed)
    train = TrainConfig(epochs=epochs, batch_size=64, lr=0.002)
    results = {}
    for name, config in zip(("mixer", "encoder_only"), _triangle_configs()):
        result = train_loop(config, train, dataset, seed)
        results[name] = result.metrics["test"].get("mae", float("nan"))
        print(f"📈 {name}: test MAE {results[name]:.4f}")
    return results


if __name__ == "__main__":
    quick = "--quick" in sys.argv
    print("\n🔬 GRAPH MIXER BENCHMARK" + (" (quick)" if quick else ""))
    print("=" * 60)

    part = benchmark_partition(count=20 if quick else 100)
    aug = benchmark_augmentation(num_graphs=100 if quick else 500, epochs=3 if quick else 60,
                                 seeds=(0,) if quick else (0, 1, 2, 3))
    csl = benchmark_csl(epochs=5 if quick else 30)
    trees = {r: benchmark_tree(r, epochs=5 if quick else None) for r in ((2,) if quick else (2, 3, 4))}
    tri = benchmark_triangles(num_graphs=200 if quick else 2000, epochs=10 if quick else 200)

    _banner("📊 SUMMARY")
    print(f"\n✅ Phân hoạch: metis {part['metis']:.2f} < random {part['random']:.2f}: "
          f"{part['metis'] < part['random']}")
    print(f"✅ Augmentation: MAE {aug['mae_augmented']:.4f} vs {aug['mae_static']:.4f}, "
          f"overhead {aug['overhead'] * 100:.1f}%")
    print(f"✅ CSL accuracy: mixer {csl['mixer']:.3f} | mpgnn {csl['mpgnn']:.3f}")
    for r, tree in trees.items():
        print(f"✅ Tree r={r} accuracy: mixer {tree['mixer']:.3f} | gcn {tree['gcn']:.3f}")
    print(f"✅ Tam giác MAE: mixer {tri['mixer']:.4f} | encoder-only {tri['encoder_only']:.4f}")
    print("\n" + "=" * 60)
    print("✅ BENCHMARK COMPLETE")
    print("=" * 60)
