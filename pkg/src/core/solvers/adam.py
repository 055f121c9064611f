"""
Bộ tối ưu Adam có hiệu chỉnh bias và cắt gradient theo chuẩn toàn cục.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from src.core.tensor import Tensor
from src.models.errors import DimensionError, NonFiniteGradientError

logger = logging.getLogger(__name__)


@dataclass
class OptimState:
    """
    Trạng thái Adam.

    Attributes:
        m, v (List[np.ndarray]): Moment bậc 1 và 2, cùng shape với tham số.
        t (int): Số bước đã thực hiện.
    """

    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)
    t: int = 0

    @classmethod
    def for_params(cls, params: Sequence[Tensor], lr: float = 0.01, beta1: float = 0.9,
                   beta2: float = 0.999, eps: float = 1e-8) -> "OptimState":
        return cls(lr=lr, beta1=beta1, beta2=beta2, eps=eps,
                   m=[np.zeros_like(p.data) for p in params],
                   v=[np.zeros_like(p.data) for p in params])


def global_norm(grads: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def clip_by_global_norm(grads: List[np.ndarray], max_norm: float) -> List[np.ndarray]:
    """Co toàn bộ gradient khi chuẩn toàn cục vượt max_norm (max_norm = 0 thì tắt)."""
    if max_norm <= 0:
        return grads
    norm = global_norm(grads)
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    return [g * scale for g in grads]


def adam_step(params: Sequence[Tensor], grads: Sequence[np.ndarray], state: OptimState) -> None:
    """
    Một bước Adam, cập nhật tại chỗ params và state.

    Raises:
        NonFiniteGradientError: Có gradient NaN/Inf (liệt kê tên tham số); không tham số nào bị đổi.
        DimensionError: Số lượng hoặc shape gradient không khớp.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise DimensionError("adam_step: số tham số/gradient/moment không khớp",
                             (len(params),), (len(grads), len(state.m)))
    bad = [p.name or f"#{i}" for i, (p, g) in enumerate(zip(params, grads))
           if not np.all(np.isfinite(g))]
    if bad:
        logger.error("❌ Gradient không hữu hạn tại %d tham số", len(bad))
        raise NonFiniteGradientError(bad)
    for p, g in zip(params, grads):
        if p.shape != np.shape(g):
            raise DimensionError(f"Gradient của '{p.name}' sai shape", p.shape, np.shape(g))

    state.t += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.t
    correction2 = 1.0 - b2 ** state.t
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g
        m_hat = state.m[i] / correction1
        v_hat = state.v[i] / correction2
        p.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
