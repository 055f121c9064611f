"""
Hàm loss (có vi phân) và các metric đánh giá (numpy thuần).

- Hồi quy: MAE.
- Phân lớp: softmax cross-entropy; accuracy, ROCAUC và AP nhị phân.
"""

import logging
from typing import Dict

import numpy as np
from scipy.stats import rankdata

from src.core.tensor import Tensor, absolute, log_softmax, mean, mul, reshape, sub, sum_
from src.models.dataset import Task
from src.models.errors import DataError, DimensionError, UndefinedMetricError

logger = logging.getLogger(__name__)


# ============================================================================
# LOSS
# ============================================================================

def mae_loss(pred: Tensor, target: np.ndarray) -> Tensor:
    """Trung bình |pred - target|; đạo hàm tại 0 quy ước bằng 0."""
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    flat = reshape(pred, (pred.size,))
    if flat.shape != target.shape:
        raise DimensionError("MAE: số dự đoán khác số target", pred.shape, target.shape)
    return mean(absolute(sub(flat, target)))


def cross_entropy(logits: Tensor, target: np.ndarray) -> Tensor:
    """
    Softmax cross-entropy trung bình trên batch.

    Raises:
        DataError: Nhãn ngoài [0, n_c).
    """
    target = np.asarray(target, dtype=np.int64).reshape(-1)
    batch, num_classes = logits.shape
    if len(target) != batch:
        raise DimensionError("Cross-entropy: số logits khác số target", logits.shape, target.shape)
    if target.size and (target.min() < 0 or target.max() >= num_classes):
        bad = int(target[(target < 0) | (target >= num_classes)][0])
        raise DataError(f"Nhãn {bad} ngoài [0, {num_classes})")
    one_hot = np.zeros((batch, num_classes))
    one_hot[np.arange(batch), target] = 1.0
    picked = sum_(mul(log_softmax(logits, axis=-1), one_hot))
    return mul(picked, -1.0 / max(batch, 1))


def loss_fn(pred: Tensor, target: np.ndarray, task: Task) -> Tensor:
    if task.is_classification:
        return cross_entropy(pred, target)
    return mae_loss(pred, target)


# ============================================================================
# METRICS
# ============================================================================

def accuracy(logits: np.ndarray, target: np.ndarray) -> float:
    logits = np.asarray(logits)
    target = np.asarray(target).reshape(-1)
    if target.size == 0:
        raise UndefinedMetricError("Accuracy trên tập rỗng")
    return float(np.mean(np.argmax(logits, axis=-1) == target))


def mae(pred: np.ndarray, target: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    if target.size == 0:
        raise UndefinedMetricError("MAE trên tập rỗng")
    return float(np.mean(np.abs(pred - target)))


def _binary_inputs(scores, labels):
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1).astype(bool)
    positives = int(labels.sum())
    if positives == 0 or positives == len(labels):
        raise UndefinedMetricError("ROCAUC/AP không xác định khi target chỉ có một lớp")
    return scores, labels, positives


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """
    ROCAUC nhị phân qua thống kê hạng (Mann-Whitney); điểm bằng nhau tính 1/2.

    Raises:
        UndefinedMetricError: labels chỉ có một lớp.
    """
    scores, labels, positives = _binary_inputs(scores, labels)
    negatives = len(labels) - positives
    ranks = rankdata(scores)
    rank_sum = ranks[labels].sum()
    return float((rank_sum - positives * (positives + 1) / 2.0) / (positives * negatives))


def average_precision(scores: np.ndarray, labels: np.ndarray) -> float:
    """
    AP = Σ (R_k - R_{k-1}) P_k trên các ngưỡng phân biệt (giảm dần).

    Raises:
        UndefinedMetricError: labels chỉ có một lớp.
    """
    scores, labels, positives = _binary_inputs(scores, labels)
    order = np.argsort(-scores, kind="stable")
    sorted_scores, sorted_labels = scores[order], labels[order]
    true_pos = np.cumsum(sorted_labels)
    # chỉ lấy vị trí cuối của mỗi nhóm điểm bằng nhau
    last = np.r_[np.flatnonzero(np.diff(sorted_scores)), len(sorted_scores) - 1]
    tp = true_pos[last].astype(np.float64)
    precision = tp / (last + 1)
    recall = tp / positives
    previous = np.r_[0.0, recall[:-1]]
    return float(np.sum((recall - previous) * precision))


def compute_metrics(pred: np.ndarray, target: np.ndarray, task: Task) -> Dict[str, float]:
    """
    Các metric theo task. Phân lớp nhị phân có thêm rocauc/ap (bỏ qua khi
    target chỉ có một lớp).
    """
    if not task.is_classification:
        return {"mae": mae(pred, target)}
    result = {"accuracy": accuracy(pred, target)}
    if task.num_classes == 2:
        logits = np.asarray(pred, dtype=np.float64)
        score = logits[:, 1] - logits[:, 0]
        try:
            result["rocauc"] = roc_auc(score, target)
            result["ap"] = average_precision(score, target)
        except UndefinedMetricError:
            logger.debug("Bỏ qua ROCAUC/AP: target chỉ có một lớp")
    return result


def primary_metric(task: Task) -> str:
    return "accuracy" if task.is_classification else "mae"


def higher_is_better(task: Task) -> bool:
    return task.is_classification
