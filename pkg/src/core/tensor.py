"""
Tensor dày (float64) với vi phân ngược (reverse-mode) qua một Tape.

Cách dùng:
    with Tape() as tape:
        loss = f(params)
    grads = tape.backward(loss, params)

Một op chỉ được ghi lên tape đang hoạt động khi có ít nhất một input được
theo dõi (tham số requires_grad hoặc kết quả trung gian của chính tape đó).
Không có tape thì mọi op chỉ tính giá trị, không tốn bộ nhớ cho backward.

Broadcast chỉ cho phép: cùng shape, toán hạng vô hướng (size 1), hoặc mở rộng
theo các trục đầu (shape này là hậu tố của shape kia). Mọi trường hợp khác là
DimensionError.
"""

import logging
import threading
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.special import erf

from src.models.errors import DataError, DimensionError, InvalidArgumentError

logger = logging.getLogger(__name__)

Array = np.ndarray
Operand = Union["Tensor", float, int, np.ndarray]
BackwardFn = Callable[[Array], Sequence[Optional[Array]]]

LAYER_NORM_EPS = 1e-5
_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class Tensor:
    """
    Mảng n chiều tham gia vi phân ngược.

    Attributes:
        data (np.ndarray): Giá trị float64.
        requires_grad (bool): True với lá là tham số học được.
        name (str): Tên (dùng cho checkpoint và báo lỗi gradient).
    """

    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data: Array = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name
        self._tape: Optional["Tape"] = None
        self._node: Optional[int] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def numpy(self) -> Array:
        return self.data

    def detach(self) -> "Tensor":
        """Bản sao không gắn tape, không bao giờ nhận gradient."""
        return Tensor(self.data.copy())

    def __repr__(self) -> str:
        tag = f" '{self.name}'" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other: Operand) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: Operand) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: Operand) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: Operand) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: Operand) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: Operand) -> "Tensor":
        return mul(other, self)

    def __truediv__(self, other: Operand) -> "Tensor":
        return div(self, other)

    def __rtruediv__(self, other: Operand) -> "Tensor":
        return div(other, self)

    def __neg__(self) -> "Tensor":
        return mul(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


# ============================================================================
# TAPE
# ============================================================================

@dataclass
class _Record:
    output: Tensor
    inputs: Tuple[Tensor, ...]
    backward: BackwardFn


class _TapeStack(threading.local):
    def __init__(self):
        self.stack: List["Tape"] = []


_ACTIVE = _TapeStack()


def current_tape() -> Optional["Tape"]:
    """Tape đang hoạt động của luồng hiện tại (None nếu không có)."""
    return _ACTIVE.stack[-1] if _ACTIVE.stack else None


class Tape:
    """
    Danh sách chỉ-thêm các op đã ghi; thứ tự ghi là thứ tự topo.

    Mỗi tape thuộc về đúng một luồng; các tape khác nhau chạy song song được.
    """

    def __init__(self):
        self.records: List[_Record] = []

    def __enter__(self) -> "Tape":
        _ACTIVE.stack.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE.stack.pop()

    def __len__(self) -> int:
        return len(self.records)

    def tracks(self, t: Tensor) -> bool:
        return t.requires_grad or t._tape is self

    def record(self, output: Tensor, inputs: Tuple[Tensor, ...], backward: BackwardFn) -> None:
        output._tape = self
        output._node = len(self.records)
        self.records.append(_Record(output, inputs, backward))

    def backward(self, loss: Tensor, params: Sequence[Tensor]) -> List[Array]:
        """
        Quét ngược topo từ loss, cộng dồn gradient từ mọi nơi tiêu thụ.

        Args:
            loss (Tensor): Vô hướng nằm trên tape này (hoặc chính là một tham số).
            params (Sequence[Tensor]): Các lá cần gradient.

        Returns:
            List[np.ndarray]: Gradient theo thứ tự params; lá không dùng tới nhận 0.

        Raises:
            InvalidArgumentError: loss không phải vô hướng hoặc không nằm trên tape.
        """
        if loss.size != 1:
            raise InvalidArgumentError(f"Loss phải là vô hướng, nhận shape {loss.shape}")
        if not self.tracks(loss):
            raise InvalidArgumentError("Loss không nằm trên tape này")
        grads = {id(loss): np.ones_like(loss.data)}
        for rec in reversed(self.records[:(loss._node + 1) if loss._tape is self else 0]):
            g = grads.pop(id(rec.output), None)
            if g is None:
                continue
            for inp, gi in zip(rec.inputs, rec.backward(g)):
                if gi is None or not self.tracks(inp):
                    continue
                key = id(inp)
                grads[key] = gi if key not in grads else grads[key] + gi
        return [
            np.array(grads[id(p)], dtype=np.float64).reshape(p.shape) if id(p) in grads
            else np.zeros_like(p.data)
            for p in params
        ]


def _wrap(x: Operand) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data: Array, inputs: Tuple[Tensor, ...], backward: BackwardFn) -> Tensor:
    out = Tensor(data)
    tape = current_tape()
    if tape is not None and any(tape.tracks(t) for t in inputs):
        tape.record(out, inputs, backward)
    return out


# ============================================================================
# BROADCAST
# ============================================================================

def _is_scalar(shape: Tuple[int, ...]) -> bool:
    return int(np.prod(shape)) == 1


def _check_broadcast(op: str, a: Tuple[int, ...], b: Tuple[int, ...]) -> None:
    if a == b or _is_scalar(a) or _is_scalar(b):
        return
    shorter, longer = (a, b) if len(a) <= len(b) else (b, a)
    if len(shorter) and longer[len(longer) - len(shorter):] == shorter:
        return
    raise DimensionError(f"{op}: shape không tương thích", a, b)


def _unbroadcast(grad: Array, shape: Tuple[int, ...]) -> Array:
    if grad.shape == shape:
        return grad
    if _is_scalar(shape):
        return np.asarray(grad.sum()).reshape(shape)
    extra = grad.ndim - len(shape)
    return grad.sum(axis=tuple(range(extra))) if extra > 0 else grad


# ============================================================================
# OPS NHỊ PHÂN
# ============================================================================

def add(a: Operand, b: Operand) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _check_broadcast("add", a.shape, b.shape)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _result(a.data + b.data, (a, b), backward)


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _check_broadcast("sub", a.shape, b.shape)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _result(a.data - b.data, (a, b), backward)


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _check_broadcast("mul", a.shape, b.shape)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _result(a.data * b.data, (a, b), backward)


def div(a: Operand, b: Operand) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _check_broadcast("div", a.shape, b.shape)
    out = a.data / b.data

    def backward(g):
        return (_unbroadcast(g / b.data, a.shape),
                _unbroadcast(-g * out / b.data, b.shape))

    return _result(out, (a, b), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """a [..., m, k] @ b [..., k, n]; các trục đầu phải bằng nhau hoặc mở rộng theo trục đầu."""
    a, b = _wrap(a), _wrap(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError("matmul: shape không tương thích", a.shape, b.shape)
    lead_a, lead_b = a.shape[:-2], b.shape[:-2]
    shorter, longer = (lead_a, lead_b) if len(lead_a) <= len(lead_b) else (lead_b, lead_a)
    if longer[len(longer) - len(shorter):] != shorter:
        raise DimensionError("matmul: trục batch không tương thích", a.shape, b.shape)

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _result(a.data @ b.data, (a, b), backward)


# ============================================================================
# OPS HÌNH DẠNG
# ============================================================================

def transpose(x: Tensor) -> Tensor:
    """Đổi chỗ hai trục cuối."""
    if x.ndim < 2:
        raise DimensionError("transpose cần ít nhất 2 trục", x.shape, ())

    def backward(g):
        return (np.swapaxes(g, -1, -2),)

    return _result(np.swapaxes(x.data, -1, -2), (x,), backward)


def permute(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    if sorted(axes) != list(range(x.ndim)):
        raise DimensionError("permute: axes không hợp lệ", x.shape, axes)
    inverse = tuple(np.argsort(axes))

    def backward(g):
        return (np.transpose(g, inverse),)

    return _result(np.transpose(x.data, axes), (x,), backward)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = x.data.reshape(tuple(shape))
    except ValueError:
        raise DimensionError("reshape: số phần tử không khớp", x.shape, tuple(shape))

    def backward(g):
        return (g.reshape(x.shape),)

    return _result(out, (x,), backward)


def expand_last(x: Tensor, n: int) -> Tensor:
    """Lặp trục cuối có kích thước 1 thành n (x [..., 1] -> [..., n])."""
    if x.ndim == 0 or x.shape[-1] != 1:
        raise DimensionError("expand_last cần trục cuối bằng 1", x.shape, (n,))

    def backward(g):
        return (g.sum(axis=-1, keepdims=True),)

    return _result(np.repeat(x.data, n, axis=-1), (x,), backward)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = tuple(_wrap(t) for t in tensors)
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise DimensionError("concat: shape không tương thích",
                             tensors[0].shape, tensors[-1].shape)
    sizes = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, sizes, axis=axis))

    return _result(out, tensors, backward)


# ============================================================================
# OPS MỘT NGÔI
# ============================================================================

def _unary(x: Tensor, value: Array, derivative: Array) -> Tensor:
    def backward(g):
        return (g * derivative,)

    return _result(value, (x,), backward)


def gelu(x: Tensor) -> Tensor:
    """GELU dạng chính xác x·Φ(x), đạo hàm Φ(x) + x·φ(x)."""
    cdf = 0.5 * (1.0 + erf(x.data / _SQRT2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x.data ** 2)
    return _unary(x, x.data * cdf, cdf + x.data * pdf)


def relu(x: Tensor) -> Tensor:
    positive = (x.data > 0).astype(np.float64)
    return _unary(x, x.data * positive, positive)


def sigmoid(x: Tensor) -> Tensor:
    s = 0.5 * (1.0 + np.tanh(0.5 * x.data))
    return _unary(x, s, s * (1.0 - s))


def exp(x: Tensor) -> Tensor:
    e = np.exp(x.data)
    return _unary(x, e, e)


def log(x: Tensor) -> Tensor:
    return _unary(x, np.log(x.data), 1.0 / x.data)


def absolute(x: Tensor) -> Tensor:
    """|x|, đạo hàm tại 0 quy ước bằng 0."""
    return _unary(x, np.abs(x.data), np.sign(x.data))


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _result(y, (x,), backward)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    y = shifted - lse
    probs = np.exp(y)

    def backward(g):
        return (g - probs * g.sum(axis=axis, keepdims=True),)

    return _result(y, (x,), backward)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """Chuẩn hóa theo trục cuối, scale gamma và shift beta có shape [d]."""
    d = x.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise DimensionError("layer_norm: gamma/beta không khớp trục cuối", x.shape, gamma.shape)
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered ** 2).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv

    def backward(g):
        lead = tuple(range(g.ndim - 1))
        dgamma = (g * xhat).sum(axis=lead)
        dbeta = g.sum(axis=lead)
        dxhat = g * gamma.data
        dx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
        return dx, dgamma, dbeta

    return _result(xhat * gamma.data + beta.data, (x, gamma, beta), backward)


def dropout(x: Tensor, rate: float, rng: Optional[np.random.Generator],
            training: bool) -> Tensor:
    """Inverted dropout; tắt khi không training hoặc rate = 0."""
    if not training or rate <= 0.0 or rng is None:
        return x
    scale = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return _unary(x, x.data * scale, scale)


# ============================================================================
# OPS RÚT GỌN
# ============================================================================

def _expand_reduced(g: Array, shape: Tuple[int, ...], axis, keepdims: bool) -> Array:
    if axis is None:
        return np.broadcast_to(g, shape)
    if not keepdims:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        axes = tuple(a % len(shape) for a in axes)
        for a in sorted(axes):
            g = np.expand_dims(g, a)
    return np.broadcast_to(g, shape)


def sum_(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    def backward(g):
        return (_expand_reduced(g, x.shape, axis, keepdims),)

    return _result(x.data.sum(axis=axis, keepdims=keepdims), (x,), backward)


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = x.data.mean(axis=axis, keepdims=keepdims)
    count = x.data.size / max(np.asarray(out).size, 1)

    def backward(g):
        return (_expand_reduced(g, x.shape, axis, keepdims) / count,)

    return _result(out, (x,), backward)


def masked_mean(values: Tensor, mask: Array) -> Tensor:
    """
    values [B, P, d], mask [B, P] ∈ {0,1} -> [B, d] = Σ_p m_p x_p / Σ_p m_p.

    Dòng có mask toàn 0 cho vector 0.
    """
    mask = np.asarray(mask, dtype=np.float64)
    if values.ndim != 3 or mask.shape != values.shape[:2]:
        raise DimensionError("masked_mean: mask không khớp", values.shape, mask.shape)
    counts = mask.sum(axis=1, keepdims=True)
    weights = np.divide(mask, counts, out=np.zeros_like(mask), where=counts > 0)

    def backward(g):
        return (weights[:, :, None] * g[:, None, :],)

    return _result(np.einsum("bp,bpd->bd", weights, values.data), (values,), backward)


# ============================================================================
# OPS CHỈ SỐ VÀ SEGMENT
# ============================================================================

def embedding_lookup(table: Tensor, indices: Array) -> Tensor:
    """
    Tra bảng embedding theo chỉ số nguyên.

    Raises:
        DataError: Chỉ số ngoài [0, vocab).
    """
    indices = np.asarray(indices, dtype=np.int64)
    vocab = table.shape[0]
    if indices.size and (indices.min() < 0 or indices.max() >= vocab):
        bad = int(indices[(indices < 0) | (indices >= vocab)][0])
        raise DataError(f"Chỉ số embedding {bad} ngoài từ điển kích thước {vocab}")

    def backward(g):
        grad = np.zeros_like(table.data)
        np.add.at(grad, indices.reshape(-1), g.reshape(-1, table.shape[1]))
        return (grad,)

    return _result(table.data[indices], (table,), backward)


def gather(x: Tensor, index: Array) -> Tensor:
    """x[index] theo trục 0 (chỉ số có thể lặp)."""
    index = np.asarray(index, dtype=np.int64)

    def backward(g):
        grad = np.zeros_like(x.data)
        np.add.at(grad, index, g)
        return (grad,)

    return _result(x.data[index], (x,), backward)


def segment_matrix(segment_ids: Array, num_segments: int) -> sp.csr_matrix:
    """Ma trận thưa S (num_segments × n) với S[s, i] = 1 nếu segment_ids[i] = s."""
    segment_ids = np.asarray(segment_ids, dtype=np.int64)
    n = len(segment_ids)
    return sp.csr_matrix(
        (np.ones(n, dtype=np.float64), (segment_ids, np.arange(n))), shape=(num_segments, n)
    )


def _segment_apply(matrix: sp.csr_matrix, values: Array) -> Array:
    flat = values.reshape(values.shape[0], -1)
    out = np.asarray(matrix @ flat)
    return out.reshape((matrix.shape[0],) + values.shape[1:])


def segment_sum(values: Tensor, segment_ids: Array, num_segments: int) -> Tensor:
    if len(segment_ids) != values.shape[0]:
        raise DimensionError("segment_sum: số segment id không khớp", values.shape,
                             (len(segment_ids),))
    matrix = segment_matrix(segment_ids, num_segments)

    def backward(g):
        return (_segment_apply(matrix.T.tocsr(), g),)

    return _result(_segment_apply(matrix, values.data), (values,), backward)


def segment_mean(values: Tensor, segment_ids: Array, num_segments: int) -> Tensor:
    """Trung bình theo segment; segment rỗng cho 0."""
    if len(segment_ids) != values.shape[0]:
        raise DimensionError("segment_mean: số segment id không khớp", values.shape,
                             (len(segment_ids),))
    counts = np.bincount(np.asarray(segment_ids, dtype=np.int64), minlength=num_segments)
    inv = np.divide(1.0, counts, out=np.zeros(num_segments), where=counts > 0)
    matrix = sp.diags(inv) @ segment_matrix(segment_ids, num_segments)
    matrix = matrix.tocsr()

    def backward(g):
        return (_segment_apply(matrix.T.tocsr(), g),)

    return _result(_segment_apply(matrix, values.data), (values,), backward)


def segment_softmax(scores: Tensor, segment_ids: Array, num_segments: int) -> Tensor:
    """Softmax của scores [E, ...] trong từng segment (ví dụ các cạnh vào cùng một đỉnh)."""
    segment_ids = np.asarray(segment_ids, dtype=np.int64)
    tail = scores.shape[1:]
    peak = np.full((num_segments,) + tail, -np.inf)
    np.maximum.at(peak, segment_ids, scores.data)
    peak[~np.isfinite(peak)] = 0.0
    e = np.exp(scores.data - peak[segment_ids])
    matrix = segment_matrix(segment_ids, num_segments)
    totals = _segment_apply(matrix, e)
    y = e / totals[segment_ids]

    def backward(g):
        inner = _segment_apply(matrix, g * y)
        return (y * (g - inner[segment_ids]),)

    return _result(y, (scores,), backward)


# ============================================================================
# KIỂM TRA GRADIENT
# ============================================================================

@dataclass
class GradCheckReport:
    """
    Kết quả so sánh gradient autodiff với sai phân trung tâm.

    Attributes:
        max_rel_error (float): Sai số tương đối lớn nhất.
        passed (bool): max_rel_error <= tol.
        entries (list): (tên tham số, chỉ số phẳng, autodiff, sai phân, sai số).
    """

    max_rel_error: float = 0.0
    passed: bool = True
    tol: float = 1e-6
    entries: List[Tuple[str, int, float, float, float]] = field(default_factory=list)

    def failures(self) -> List[Tuple[str, int, float, float, float]]:
        return [e for e in self.entries if e[4] > self.tol]


def grad_check(f: Callable[[], Tensor], params: Sequence[Tensor], h: float = 1e-5,
               tol: float = 1e-6, max_coords: int = 30, seed: int = 0,
               floor: float = 1e-4) -> GradCheckReport:
    """
    So sánh gradient autodiff với (f(θ+h·e) - f(θ-h·e)) / 2h tại tối đa max_coords tọa độ.

    Sai số tương đối = |a - n| / max(|a|, |n|, floor).

    Args:
        f: Closure không tham số trả về loss vô hướng từ params.
        params: Các tham số (data bị thay đổi tạm thời rồi khôi phục).
        h (float): Bước sai phân, > 0.

    Raises:
        InvalidArgumentError: h <= 0.
    """
    if h <= 0:
        raise InvalidArgumentError(f"Bước sai phân h phải > 0, nhận {h}")
    params = list(params)
    report = GradCheckReport(tol=tol)
    sizes = [p.size for p in params]
    total = int(sum(sizes))
    if total == 0:
        return report
    with Tape() as tape:
        loss = f()
    analytic = tape.backward(loss, params)
    rng = np.random.default_rng(seed)
    picks = np.sort(rng.choice(total, size=min(max_coords, total), replace=False))
    offsets = np.cumsum([0] + sizes)
    for flat in picks:
        which = int(np.searchsorted(offsets, flat, side="right") - 1)
        local = int(flat - offsets[which])
        param = params[which]
        view = param.data.reshape(-1)
        original = view[local]
        view[local] = original + h
        plus = f().item()
        view[local] = original - h
        minus = f().item()
        view[local] = original
        numeric = (plus - minus) / (2.0 * h)
        auto = float(analytic[which].reshape(-1)[local])
        rel = abs(auto - numeric) / max(abs(auto), abs(numeric), floor)
        report.entries.append((param.name, local, auto, numeric, rel))
        report.max_rel_error = max(report.max_rel_error, rel)
    report.passed = report.max_rel_error <= tol
    if not report.passed:
        logger.warning("⚠️ grad_check thất bại: sai số %.3e > %.1e", report.max_rel_error, tol)
    return report
