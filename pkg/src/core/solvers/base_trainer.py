"""
Base class cho các vòng huấn luyện.
Cung cấp trạng thái chạy/dừng, thống kê thời gian và cơ chế báo tiến độ qua
callback (on_log, on_epoch, on_progress) để CLI hoặc test theo dõi.
"""

import logging
import time
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, List, Optional

logger = logging.getLogger(__name__)


LogCallback = Callable[[str], None]
EpochCallback = Callable[[int, float, float, float], None]
ProgressCallback = Callable[[int], None]


class BaseTrainer(ABC):
    """
    Abstract Base Class cho trainer.

    Callbacks:
        on_log(str): Nhận mỗi dòng log.
        on_epoch(epoch, train_loss, valid_metric, test_metric): Sau mỗi epoch.
        on_progress(int): Phần trăm hoàn thành (0-100).

    Attributes:
        config (Dict[str, Any]): Tham số bổ sung, đọc bằng config.get(key, default).
        convergence_history (List[float]): Train loss theo từng epoch.
        is_running (bool): Đang chạy hay không.
        should_stop (bool): Cờ dừng an toàn, được kiểm tra đầu mỗi epoch.
    """

    def __init__(self, config: Optional[Dict[str, Any]] = None,
                 on_log: Optional[LogCallback] = None,
                 on_epoch: Optional[EpochCallback] = None,
                 on_progress: Optional[ProgressCallback] = None):
        self.config: Dict[str, Any] = config or {}
        self.on_log = on_log
        self.on_epoch = on_epoch
        self.on_progress = on_progress

        self.convergence_history: List[float] = []
        self.is_running: bool = False
        self.should_stop: bool = False

        self.start_time: Optional[float] = None
        self.end_time: Optional[float] = None
        self.total_epochs: int = 0

        self._validate_input()

    def _validate_input(self) -> None:
        """Kiểm tra dữ liệu đầu vào; lớp con override khi cần."""

    @abstractmethod
    def run(self) -> Any:
        """Chạy toàn bộ quá trình huấn luyện và trả về kết quả."""

    def stop(self) -> None:
        """Dừng an toàn: epoch đang chạy hoàn tất rồi vòng lặp thoát."""
        if self.is_running:
            self.should_stop = True
            self._log("⚠️ Đang dừng huấn luyện...")
        else:
            self._log("ℹ️ Trainer chưa chạy hoặc đã dừng")

    def get_convergence_history(self) -> List[float]:
        return self.convergence_history

    def get_execution_time(self) -> float:
        """Thời gian chạy (giây); đang chạy thì tính tới hiện tại."""
        if self.start_time is None:
            return 0.0
        if self.end_time is None:
            return time.time() - self.start_time
        return self.end_time - self.start_time

    def get_statistics(self) -> Dict[str, Any]:
        stats = {
            'execution_time': self.get_execution_time(),
            'total_epochs': self.total_epochs,
            'convergence_history': list(self.convergence_history),
        }
        if self.convergence_history:
            stats['initial_loss'] = self.convergence_history[0]
            stats['final_loss'] = self.convergence_history[-1]
        return stats

    def reset(self) -> None:
        self.convergence_history = []
        self.is_running = False
        self.should_stop = False
        self.start_time = None
        self.end_time = None
        self.total_epochs = 0
        self._log("✅ Trainer đã được reset")

    def _emit_progress(self, current: int, total: int) -> None:
        if self.on_progress is not None and total > 0:
            self.on_progress(int(current / total * 100))

    def _emit_epoch(self, epoch: int, train_loss: float, valid: float, test: float) -> None:
        if self.on_epoch is not None:
            self.on_epoch(epoch, train_loss, valid, test)

    def _log(self, message: str) -> None:
        logger.info(message)
        if self.on_log is not None:
            self.on_log(message)

    def _log_error(self, message: str) -> None:
        logger.error("❌ %s", message)
        if self.on_log is not None:
            self.on_log(f"❌ ERROR: {message}")

    def __str__(self) -> str:
        return f"{self.__class__.__name__} - Running: {self.is_running}"
