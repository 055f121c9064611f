"""
Định dạng checkpoint nhị phân cho ModelParams.

    [8 byte: độ dài header, little-endian uint64]
    [header JSON UTF-8: {"tensors": [{"name", "shape", "offset"}], "config": {...}}]
    [dữ liệu: các tensor float64 little-endian nối liền theo thứ tự header]

offset tính theo byte, từ đầu vùng dữ liệu.
"""

import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Tuple

import numpy as np

from src.core.layers.base import ModelParams
from src.models.errors import CheckpointError

logger = logging.getLogger(__name__)


DTYPE = np.dtype("<f8")
_HEADER_LEN = struct.Struct("<Q")


def save_checkpoint(params: ModelParams, config: Dict[str, Any], file_path: str) -> str:
    """Ghi tham số (thứ tự đăng ký) kèm config JSON."""
    entries, blobs, offset = [], [], 0
    for name, value in params.state_dict().items():
        data = np.ascontiguousarray(value, dtype=DTYPE)
        entries.append({"name": name, "shape": list(data.shape), "offset": offset})
        blobs.append(data.tobytes())
        offset += data.nbytes
    header = json.dumps({"tensors": entries, "config": config},
                        ensure_ascii=False, sort_keys=True).encode("utf-8")
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as handle:
        handle.write(_HEADER_LEN.pack(len(header)))
        handle.write(header)
        for blob in blobs:
            handle.write(blob)
    logger.info(f"💾 Đã lưu checkpoint {len(entries)} tensor vào {path}")
    return str(path)


def read_checkpoint(file_path: str) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    """
    Đọc checkpoint thành (state dict, config).

    Raises:
        FileNotFoundError: File không tồn tại.
        CheckpointError: File hỏng hoặc cắt cụt.
    """
    path = Path(file_path)
    if not path.exists():
        raise FileNotFoundError(f"File không tồn tại: {file_path}")
    raw = path.read_bytes()
    if len(raw) < _HEADER_LEN.size:
        raise CheckpointError(f"Checkpoint quá ngắn: {file_path}")
    (header_len,) = _HEADER_LEN.unpack_from(raw, 0)
    start = _HEADER_LEN.size + header_len
    if start > len(raw):
        raise CheckpointError("Header checkpoint bị cắt cụt")
    try:
        header = json.loads(raw[_HEADER_LEN.size:start].decode("utf-8"))
        entries = header["tensors"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise CheckpointError(f"Header checkpoint không hợp lệ: {e}")
    payload = memoryview(raw)[start:]
    state = {}
    for entry in entries:
        shape = tuple(int(s) for s in entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        begin = int(entry["offset"])
        end = begin + count * DTYPE.itemsize
        if begin < 0 or end > len(payload):
            raise CheckpointError(f"Tensor '{entry['name']}' vượt quá dữ liệu checkpoint")
        state[entry["name"]] = np.frombuffer(payload[begin:end], dtype=DTYPE).reshape(shape).copy()
    return state, header.get("config", {})


def load_checkpoint(params: ModelParams, file_path: str) -> Dict[str, Any]:
    """Nạp checkpoint vào params (kiểm tra tên và shape); trả về config đã lưu."""
    state, config = read_checkpoint(file_path)
    params.load_state_dict(state)
    return config
