"""
Module xuất kết quả huấn luyện và các bản dump ra file.
Hỗ trợ CSV/JSON (mặc định), Excel có định dạng (kẻ bảng, tô màu header,
tự động giãn cột) và biểu đồ learning curve PNG.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side  # noqa: E402
from openpyxl.utils import get_column_letter  # noqa: E402

from src.models.patch_set import PatchSet  # noqa: E402
from src.models.run_record import RunRecord  # noqa: E402

logger = logging.getLogger(__name__)


RECORD_COLUMNS = ["epoch", "train_loss", "valid_metric", "test_metric", "seconds"]


def _ensure_parent(file_path: str) -> Path:
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def to_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


class Exporter:
    """
    Class chịu trách nhiệm xuất RunRecord, tóm tắt và các bản dump ra file.
    """

    @staticmethod
    def record_frame(record: RunRecord) -> pd.DataFrame:
        return pd.DataFrame(record.rows(), columns=RECORD_COLUMNS)

    @staticmethod
    def export_record_csv(record: RunRecord, file_path: str) -> str:
        """Ghi lịch sử epoch ra CSV (epoch, train_loss, valid_metric, test_metric, seconds)."""
        path = _ensure_parent(file_path)
        Exporter.record_frame(record).to_csv(path, index=False)
        logger.info(f"💾 Đã ghi {len(record.epochs)} epoch vào {path}")
        return str(path)

    @staticmethod
    def export_json(data: Dict[str, Any], file_path: str) -> str:
        """Ghi dict ra JSON (UTF-8, khóa sắp xếp, thụt lề 2); NaN/Inf thành null."""
        path = _ensure_parent(file_path)
        with path.open("w", encoding="utf-8") as handle:
            json.dump(to_jsonable(data), handle, ensure_ascii=False, indent=2, sort_keys=True)
            handle.write("\n")
        return str(path)

    @staticmethod
    def export_record_excel(record: RunRecord, file_path: str) -> bool:
        """
        Xuất lịch sử epoch ra Excel với định dạng đẹp; dòng epoch được chọn tô vàng.

        Returns:
            bool: True nếu thành công.
        """
        try:
            df = Exporter.record_frame(record)
            if df.empty:
                logger.warning("⚠️ Không có epoch nào để xuất.")
                return False
            df.columns = ["Epoch", "Train loss", f"Valid {record.metric_name}",
                          f"Test {record.metric_name}", "Thời gian (s)"]
            path = _ensure_parent(file_path)
            with pd.ExcelWriter(path, engine="openpyxl") as writer:
                df.to_excel(writer, index=False, sheet_name="Lich_Su")
                worksheet = writer.sheets["Lich_Su"]

                header_font = Font(name="Times New Roman", size=12, bold=True, color="FFFFFF")
                header_fill = PatternFill(start_color="0070C0", end_color="0070C0",
                                          fill_type="solid")
                selected_fill = PatternFill(start_color="FFF2CC", end_color="FFF2CC",
                                            fill_type="solid")
                content_font = Font(name="Times New Roman", size=11)
                center = Alignment(horizontal="center", vertical="center")
                thin = Side(style="thin")
                border = Border(left=thin, right=thin, top=thin, bottom=thin)

                for col_idx, column_cells in enumerate(worksheet.columns, 1):
                    length = max(len(str(cell.value)) for cell in column_cells)
                    worksheet.column_dimensions[get_column_letter(col_idx)].width = (length + 4) * 1.2
                    for cell in column_cells:
                        cell.border = border
                        cell.alignment = center
                        if cell.row == 1:
                            cell.font = header_font
                            cell.fill = header_fill
                        else:
                            cell.font = content_font
                            if worksheet.cell(cell.row, 1).value == record.selected_epoch:
                                cell.fill = selected_fill
            logger.info(f"✅ Đã xuất file Excel tại: {path}")
            return True
        except (OSError, ValueError) as e:
            logger.error(f"❌ Lỗi khi xuất file Excel: {e}")
            return False

    @staticmethod
    def plot_learning_curve(record: RunRecord, file_path: str,
                            title: Optional[str] = None) -> str:
        """Vẽ train loss (trục trái) và valid/test metric (trục phải) theo epoch ra PNG."""
        df = Exporter.record_frame(record)
        path = _ensure_parent(file_path)
        fig, ax_loss = plt.subplots(figsize=(7, 4))
        ax_loss.plot(df["epoch"], df["train_loss"], color="tab:blue", label="train loss")
        ax_loss.set_xlabel("epoch")
        ax_loss.set_ylabel("train loss")
        ax_metric = ax_loss.twinx()
        ax_metric.plot(df["epoch"], df["valid_metric"], color="tab:orange", label="valid")
        ax_metric.plot(df["epoch"], df["test_metric"], color="tab:green", label="test",
                       linestyle="--")
        ax_metric.set_ylabel(record.metric_name)
        if record.selected_epoch is not None:
            ax_loss.axvline(record.selected_epoch, color="grey", linestyle=":", linewidth=1)
        lines = ax_loss.get_lines() + ax_metric.get_lines()
        ax_loss.legend(lines, [line.get_label() for line in lines], loc="best")
        ax_loss.set_title(title or "Learning curve")
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
        return str(path)

    @staticmethod
    def patch_set_dict(patch_set: PatchSet, stats: Optional[Dict[str, Any]] = None,
                       name: str = "") -> Dict[str, Any]:
        data = patch_set.to_dict()
        data["name"] = name
        if stats is not None:
            data["statistics"] = stats
        return data

    @staticmethod
    def node_pe_dict(values: np.ndarray, kind: str, name: str = "") -> Dict[str, Any]:
        return {"name": name, "kind": kind, "dim": int(values.shape[1]), "values": values}
