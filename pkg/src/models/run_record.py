"""
Data class lưu lịch sử một lần huấn luyện và epoch được chọn theo validation.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional


@dataclass
class EpochRecord:
    """Kết quả của một epoch."""

    epoch: int
    train_loss: float
    valid_metric: float
    test_metric: float
    seconds: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "valid_metric": self.valid_metric,
            "test_metric": self.test_metric,
            "seconds": self.seconds,
        }


@dataclass
class RunRecord:
    """
    Lịch sử huấn luyện.

    Attributes:
        metric_name (str): accuracy | mae.
        higher_is_better (bool): Hướng tối ưu của metric.
        epochs (List[EpochRecord]): Theo thứ tự.
        selected_epoch (int, optional): Epoch có validation tốt nhất (hòa -> epoch sớm nhất).
    """

    metric_name: str
    higher_is_better: bool
    epochs: List[EpochRecord] = field(default_factory=list)
    selected_epoch: Optional[int] = None

    def add(self, record: EpochRecord) -> None:
        """Thêm một epoch và cập nhật epoch được chọn."""
        self.epochs.append(record)
        best = self.best()
        if best is None:
            self.selected_epoch = record.epoch
            return
        better = (record.valid_metric > best.valid_metric if self.higher_is_better
                  else record.valid_metric < best.valid_metric)
        if better:
            self.selected_epoch = record.epoch

    def best(self) -> Optional[EpochRecord]:
        if self.selected_epoch is None:
            return None
        for record in self.epochs:
            if record.epoch == self.selected_epoch:
                return record
        return None

    def is_empty(self) -> bool:
        return not self.epochs

    def summary(self) -> Dict[str, Any]:
        """Tóm tắt JSON: epoch được chọn và metric tại epoch đó."""
        best = self.best()
        return {
            "metric": self.metric_name,
            "higher_is_better": self.higher_is_better,
            "num_epochs": len(self.epochs),
            "selected_epoch": self.selected_epoch,
            "best_valid": None if best is None else best.valid_metric,
            "test_at_best_valid": None if best is None else best.test_metric,
            "final_train_loss": self.epochs[-1].train_loss if self.epochs else None,
        }

    def rows(self) -> List[Dict[str, Any]]:
        return [r.to_dict() for r in self.epochs]
