"""
Sổ đăng ký tham số và các layer cơ bản (Linear, MLP, LayerNorm, Embedding).

Mỗi tham số có tên duy nhất; giá trị khởi tạo chỉ phụ thuộc (seed, tên) nên
hai model khác số lớp vẫn có chung giá trị cho các tham số trùng tên.
"""

import logging
import zlib
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.core.tensor import (
    Tensor, add, dropout, embedding_lookup, gelu, layer_norm, matmul,
)
from src.models.errors import CheckpointError, DimensionError, InvalidArgumentError

logger = logging.getLogger(__name__)


GLOROT = "glorot"
ZEROS = "zeros"
ONES = "ones"


class ModelParams:
    """
    Danh sách có thứ tự các tham số học được, đánh chỉ mục theo tên.

    Một lần dựng model (begin_build) chỉ được xin mỗi tên một lần; dựng lại model
    trên cùng ModelParams sẽ dùng lại các tensor đã có.
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self._tensors: Dict[str, Tensor] = {}
        self._claimed: set = set()

    def begin_build(self) -> None:
        self._claimed = set()

    def _init_value(self, name: str, shape: Tuple[int, ...], init: str) -> np.ndarray:
        if init == ZEROS:
            return np.zeros(shape)
        if init == ONES:
            return np.ones(shape)
        if init != GLOROT:
            raise InvalidArgumentError(f"Kiểu khởi tạo không hợp lệ: {init}")
        rng = np.random.default_rng([self.seed, zlib.crc32(name.encode("utf-8"))])
        fan_in = shape[-2] if len(shape) >= 2 else shape[0]
        fan_out = shape[-1]
        limit = np.sqrt(6.0 / max(fan_in + fan_out, 1))
        return rng.uniform(-limit, limit, size=shape)

    def param(self, name: str, shape: Sequence[int], init: str = GLOROT) -> Tensor:
        """
        Lấy (hoặc tạo) tham số theo tên.

        Raises:
            InvalidArgumentError: Tên đã được xin trong cùng một lần dựng.
            DimensionError: Tham số đã tồn tại với shape khác.
        """
        shape = tuple(int(s) for s in shape)
        if name in self._claimed:
            raise InvalidArgumentError(f"Tham số '{name}' bị đăng ký hai lần")
        self._claimed.add(name)
        existing = self._tensors.get(name)
        if existing is not None:
            if existing.shape != shape:
                raise DimensionError(f"Tham số '{name}' đã có shape khác", existing.shape, shape)
            return existing
        tensor = Tensor(self._init_value(name, shape, init), requires_grad=True, name=name)
        self._tensors[name] = tensor
        return tensor

    def buffer(self, name: str, shape: Sequence[int], init: str = ZEROS) -> Tensor:
        """
        Tensor không học (thống kê chuẩn hóa): có trong state dict và checkpoint
        nhưng không nằm trong tensors() nên optimizer không cập nhật.
        """
        shape = tuple(int(s) for s in shape)
        if name in self._claimed:
            raise InvalidArgumentError(f"Tham số '{name}' bị đăng ký hai lần")
        self._claimed.add(name)
        existing = self._tensors.get(name)
        if existing is not None:
            if existing.shape != shape:
                raise DimensionError(f"Buffer '{name}' đã có shape khác", existing.shape, shape)
            return existing
        tensor = Tensor(self._init_value(name, shape, init), requires_grad=False, name=name)
        self._tensors[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __len__(self) -> int:
        return len(self._tensors)

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def names(self) -> List[str]:
        return list(self._tensors)

    def tensors(self) -> List[Tensor]:
        """Các tham số học được (bỏ qua buffer), theo thứ tự đăng ký."""
        return [t for t in self._tensors.values() if t.requires_grad]

    @property
    def num_parameters(self) -> int:
        return int(sum(t.size for t in self.tensors()))

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._tensors.items()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """
        Ghi đè giá trị từ một state dict.

        Raises:
            CheckpointError: Thiếu/thừa tên hoặc shape không khớp.
        """
        missing = sorted(set(self._tensors) - set(state))
        extra = sorted(set(state) - set(self._tensors))
        if missing or extra:
            raise CheckpointError(
                f"Checkpoint không khớp model: thiếu {missing[:5]}, thừa {extra[:5]}"
            )
        for name, tensor in self._tensors.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise CheckpointError(
                    f"Tham số '{name}': shape {value.shape} khác {tensor.shape}"
                )
            tensor.data[...] = value


@dataclass
class ForwardContext:
    """Trạng thái của một lượt forward: training hay không, rng cho dropout."""

    training: bool = False
    rng: Optional[np.random.Generator] = None
    rate: float = 0.0

    def dropout(self, x: Tensor) -> Tensor:
        return dropout(x, self.rate, self.rng, self.training)


class Linear:
    """y = x W + b với W shape [in, out]."""

    def __init__(self, params: ModelParams, name: str, in_dim: int, out_dim: int,
                 bias: bool = True):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = params.param(f"{name}.weight", (in_dim, out_dim))
        self.bias = params.param(f"{name}.bias", (out_dim,), ZEROS) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.in_dim:
            raise DimensionError("Linear: trục cuối không khớp", x.shape, self.weight.shape)
        y = matmul(x, self.weight)
        return add(y, self.bias) if self.bias is not None else y


class MLP:
    """Chuỗi Linear với GELU ở giữa (không có activation sau lớp cuối)."""

    def __init__(self, params: ModelParams, name: str, dims: Sequence[int]):
        if len(dims) < 2:
            raise InvalidArgumentError(f"MLP cần ít nhất 2 kích thước, nhận {list(dims)}")
        self.layers = [
            Linear(params, f"{name}.{i}", dims[i], dims[i + 1]) for i in range(len(dims) - 1)
        ]

    def __call__(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = gelu(x)
        return x


class LayerNorm:
    def __init__(self, params: ModelParams, name: str, dim: int):
        self.gamma = params.param(f"{name}.gamma", (dim,), ONES)
        self.beta = params.param(f"{name}.beta", (dim,), ZEROS)

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gamma, self.beta)


class FeatureNorm:
    """
    Chuẩn hóa theo cột (x - mean) / std với thống kê cố định, ước lượng một lần
    trên dữ liệu train rồi lưu cùng checkpoint.

    Mặc định mean = 0, std = 1 (phép đồng nhất). Cột có std <= STD_FLOOR giữ std = 1.
    """

    STD_FLOOR = 1e-8

    def __init__(self, params: ModelParams, name: str, dim: int):
        self.dim = dim
        self.mean = params.buffer(f"{name}.mean", (dim,), ZEROS)
        self.std = params.buffer(f"{name}.std", (dim,), ONES)

    def fit(self, values: np.ndarray, center: bool = True) -> None:
        """
        Args:
            values (np.ndarray): [n, dim] các dòng quan sát được.
            center (bool): False thì giữ mean = 0 và std là căn trung bình bình phương
                (dùng cho LapPE vì dấu bị lật ngẫu nhiên khi train).
        """
        values = np.asarray(values, dtype=np.float64).reshape(-1, self.dim)
        if len(values) == 0:
            return
        mean = values.mean(axis=0) if center else np.zeros(self.dim)
        spread = np.sqrt(np.mean((values - mean) ** 2, axis=0))
        self.mean.data[...] = mean
        self.std.data[...] = np.where(spread > self.STD_FLOOR, spread, 1.0)

    def __call__(self, x: np.ndarray) -> Tensor:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise DimensionError("FeatureNorm: trục cuối không khớp", x.shape, (self.dim,))
        return Tensor((x - self.mean.data) / self.std.data)


class CategoricalEmbedding:
    """
    Embedding cho đặc trưng categorical nhiều cột: tổng các bảng tra theo từng cột.

    Args:
        vocab_sizes (Sequence[int]): Kích thước từ điển mỗi cột.
    """

    def __init__(self, params: ModelParams, name: str, vocab_sizes: Sequence[int], dim: int):
        self.tables = [
            params.param(f"{name}.{c}", (int(v), dim)) for c, v in enumerate(vocab_sizes)
        ]

    def __call__(self, indices: np.ndarray) -> Tensor:
        indices = np.asarray(indices, dtype=np.int64).reshape(len(indices), -1)
        if indices.shape[1] != len(self.tables):
            raise DimensionError("Embedding: số cột categorical không khớp",
                                 indices.shape, (len(self.tables),))
        out = embedding_lookup(self.tables[0], indices[:, 0])
        for c in range(1, len(self.tables)):
            out = add(out, embedding_lookup(self.tables[c], indices[:, c]))
        return out
