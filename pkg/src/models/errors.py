"""
Hệ thống exception của engine Graph MLP-Mixer.

Mọi lỗi đều kế thừa từ GraphMixerError và đồng thời từ exception builtin
tương ứng (ValueError, ArithmeticError, OSError) để code cũ vẫn bắt được.
Thuộc tính `kind` là chuỗi máy đọc được, CLI dùng nó khi in JSON lỗi.
"""

from typing import Any, Dict, Iterable, Optional, Sequence, Tuple


class GraphMixerError(Exception):
    """Gốc của mọi lỗi trong engine."""

    kind = "error"
    exit_code = 1

    def to_dict(self) -> Dict[str, Any]:
        """Biểu diễn JSON của lỗi (dùng cho stderr của CLI)."""
        return {"error": self.kind, "message": str(self)}


class MalformedGraphError(GraphMixerError, ValueError):
    """Đồ thị vi phạm bất biến: đỉnh ngoài phạm vi, self-loop, cạnh trùng..."""

    kind = "malformed_graph"
    exit_code = 4


class InvalidArgumentError(GraphMixerError, ValueError):
    """Tham số ngoài miền hợp lệ (P <= 0, k < 0, drop_prob >= 1...)."""

    kind = "invalid_argument"
    exit_code = 2


class DimensionError(GraphMixerError, ValueError):
    """Hai tensor không khớp shape. Lưu cả hai shape để báo lỗi."""

    kind = "dimension"

    def __init__(self, message: str, left: Sequence[int] = (), right: Sequence[int] = ()):
        self.left: Tuple[int, ...] = tuple(left)
        self.right: Tuple[int, ...] = tuple(right)
        super().__init__(f"{message}: {self.left} vs {self.right}")

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data.update({"left": list(self.left), "right": list(self.right)})
        return data


class DataError(GraphMixerError, ValueError):
    """Dữ liệu đầu vào sai (JSONL hỏng, nhãn lớp vượt n_c, index embedding sai)."""

    kind = "data"
    exit_code = 4

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"Dòng {line}: {message}"
        super().__init__(message)

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        if self.line is not None:
            data["line"] = self.line
        return data


class DegenerateGraphError(GraphMixerError, ValueError):
    """Tất cả patch đều rỗng nên không thể readout."""

    kind = "degenerate_graph"
    exit_code = 4


class UndefinedMetricError(GraphMixerError, ValueError):
    """Metric không xác định (ROCAUC/AP khi target chỉ có một lớp)."""

    kind = "undefined_metric"


class NonFiniteGradientError(GraphMixerError, ArithmeticError):
    """Gradient chứa NaN/Inf; optimizer dừng lại và báo tên tham số."""

    kind = "non_finite_gradient"

    def __init__(self, names: Iterable[str]):
        self.names = list(names)
        shown = ", ".join(self.names[:10])
        super().__init__(f"Gradient không hữu hạn ở {len(self.names)} tham số: {shown}")

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["params"] = self.names
        return data


class SchemaError(GraphMixerError, ValueError):
    """Config không hợp lệ. `keys` liệt kê các khóa gây lỗi."""

    kind = "schema"
    exit_code = 2

    def __init__(self, message: str, keys: Iterable[str] = ()):
        self.keys = sorted(keys)
        if self.keys:
            message = f"{message}: {', '.join(self.keys)}"
        super().__init__(message)

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["keys"] = self.keys
        return data


class CheckpointError(GraphMixerError, OSError):
    """File checkpoint hỏng hoặc không khớp shape với model."""

    kind = "checkpoint"
    exit_code = 3
