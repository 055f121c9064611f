"""
Positional encoding mức đỉnh và mức patch.

- RWSE: xác suất quay về sau k bước đi ngẫu nhiên, ((D^-1 A)^k)_ii.
- LapPE: vector riêng của Laplacian chuẩn hóa đối xứng (giải bằng Jacobi vòng).
- Patch PE: RWSE trên đồ thị patch có trọng số A^P.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from src.models.errors import InvalidArgumentError
from src.models.graph import Graph

logger = logging.getLogger(__name__)


JACOBI_TOL = 1e-10
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True, eq=False)
class NodePE:
    """
    Ma trận PE mức đỉnh.

    Attributes:
        values (np.ndarray): N×K.
        kind (str): rwse | lap | none.
    """

    values: np.ndarray
    kind: str

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])


def _dense(adjacency) -> np.ndarray:
    if sp.issparse(adjacency):
        return np.asarray(adjacency.todense(), dtype=np.float64)
    return np.asarray(adjacency, dtype=np.float64)


def rwse(adjacency, steps: int) -> np.ndarray:
    """
    Random-walk structural encoding.

    Args:
        adjacency: Ma trận vuông đối xứng không âm (dense hoặc scipy.sparse).
        steps (int): K >= 1.

    Returns:
        np.ndarray: N×K, cột k-1 là đường chéo của (D^-1 A)^k. Đỉnh bậc 0 cho dòng 0.
    """
    if steps < 1:
        raise InvalidArgumentError(f"Số bước RWSE phải >= 1, nhận {steps}")
    a = _dense(adjacency)
    n = a.shape[0]
    degree = a.sum(axis=1)
    inv = np.divide(1.0, degree, out=np.zeros_like(degree), where=degree > 0)
    walk = inv[:, None] * a
    out = np.zeros((n, steps), dtype=np.float64)
    power = np.eye(n)
    for k in range(steps):
        power = power @ walk
        out[:, k] = np.diag(power)
    return out


def normalized_laplacian(g: Graph) -> np.ndarray:
    """L = I - D^-1/2 A D^-1/2; đỉnh bậc 0 không đóng góp phần A."""
    a = _dense(g.adjacency)
    degree = a.sum(axis=1)
    inv_sqrt = np.divide(1.0, np.sqrt(degree), out=np.zeros_like(degree), where=degree > 0)
    return np.eye(g.num_nodes) - inv_sqrt[:, None] * a * inv_sqrt[None, :]


def jacobi_eigh(matrix: np.ndarray, tol: float = JACOBI_TOL,
                max_sweeps: int = JACOBI_MAX_SWEEPS) -> Tuple[np.ndarray, np.ndarray]:
    """
    Phân rã trị riêng ma trận đối xứng bằng phương pháp Jacobi vòng (cyclic).

    Mỗi sweep quét mọi cặp (p, q) với p < q và triệt tiêu phần tử ngoài đường chéo
    bằng một phép quay Givens; dừng khi chuẩn Frobenius ngoài đường chéo <= tol.

    Returns:
        (eigenvalues, eigenvectors): trị riêng tăng dần (sort ổn định) và các cột vector riêng.
    """
    a = np.array(matrix, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    if n > 1:
        scale = max(1.0, float(np.abs(a).max()))
        for sweep in range(max_sweeps):
            off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
            if off <= tol * scale:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if abs(apq) < 1e-300:
                        continue
                    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta == 0.0:
                        t = 1.0
                    c = 1.0 / np.sqrt(t * t + 1.0)
                    s = t * c
                    ap, aq = a[:, p].copy(), a[:, q].copy()
                    a[:, p] = c * ap - s * aq
                    a[:, q] = s * ap + c * aq
                    ap, aq = a[p, :].copy(), a[q, :].copy()
                    a[p, :] = c * ap - s * aq
                    a[q, :] = s * ap + c * aq
                    vp, vq = v[:, p].copy(), v[:, q].copy()
                    v[:, p] = c * vp - s * vq
                    v[:, q] = s * vp + c * vq
        else:
            logger.warning("⚠️ Jacobi chưa hội tụ sau %d sweep", max_sweeps)
    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return values[order], v[:, order]


def lap_pe(g: Graph, dim: int, rng: Optional[np.random.Generator] = None,
           training: bool = False) -> NodePE:
    """
    Laplacian eigenvector PE.

    Lấy vector riêng của dim trị riêng không tầm thường nhỏ nhất (bỏ cột đầu tiên);
    thiếu cột thì đệm 0. Khi training, mỗi cột được nhân ±1 với xác suất 1/2.
    """
    if dim < 1:
        raise InvalidArgumentError(f"Chiều LapPE phải >= 1, nhận {dim}")
    n = g.num_nodes
    out = np.zeros((n, dim), dtype=np.float64)
    if n > 1:
        _, vectors = jacobi_eigh(normalized_laplacian(g))
        kept = vectors[:, 1:1 + dim]
        out[:, :kept.shape[1]] = kept
    if training:
        if rng is None:
            raise InvalidArgumentError("Cần rng để lật dấu LapPE khi training")
        signs = rng.choice(np.array([-1.0, 1.0]), size=dim)
        out = out * signs[None, :]
    return NodePE(values=out, kind="lap")


def patch_pe(coarse_adj: np.ndarray, steps: int, binary: bool = False) -> np.ndarray:
    """
    RWSE trên đồ thị patch. Mặc định A^P là trọng số (bậc D tính theo trọng số);
    binary=True thì dùng 1[A^P > 0].
    """
    weights = np.asarray(coarse_adj, dtype=np.float64)
    if binary:
        weights = (weights > 0).astype(np.float64)
    return rwse(weights, steps)


def compute_node_pe(g: Graph, kind: str, dim: int,
                    rng: Optional[np.random.Generator] = None,
                    training: bool = False) -> NodePE:
    """Dispatcher: rwse | lap | none (none trả về N×0)."""
    if kind == "rwse":
        return NodePE(values=rwse(g.adjacency, dim), kind="rwse")
    if kind == "lap":
        return lap_pe(g, dim, rng, training)
    if kind == "none":
        return NodePE(values=np.zeros((g.num_nodes, 0)), kind="none")
    raise InvalidArgumentError(f"Loại PE không hợp lệ: {kind}")
