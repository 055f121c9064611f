"""
Package models - Tầng dữ liệu của engine Graph MLP-Mixer.

Module này cung cấp các data classes cơ bản:
- Graph, AdjacencyIndex, InducedSubgraph: Đồ thị và chỉ mục kề
- PatchSet: Kết quả phân hoạch + mở rộng patch
- Dataset, Task, Fold: Bộ dữ liệu và split
- ModelConfig, TrainConfig, DatasetSpec, RunConfig: Cấu hình
- RunRecord, EpochRecord: Lịch sử huấn luyện

Các class này hoàn toàn độc lập với thuật toán và giao diện dòng lệnh.
"""

from .config import DatasetSpec, ModelConfig, RunConfig, TrainConfig
from .dataset import Dataset, Fold, Task
from .graph import AdjacencyIndex, Graph, InducedSubgraph
from .patch_set import PatchSet
from .run_record import EpochRecord, RunRecord

__all__ = [
    'Graph', 'AdjacencyIndex', 'InducedSubgraph', 'PatchSet',
    'Dataset', 'Fold', 'Task',
    'ModelConfig', 'TrainConfig', 'DatasetSpec', 'RunConfig',
    'EpochRecord', 'RunRecord',
]
