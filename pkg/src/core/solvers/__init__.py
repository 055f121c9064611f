"""
Package solvers - Bộ tối ưu Adam và các vòng huấn luyện
"""

from .adam import OptimState, adam_step, clip_by_global_norm
from .base_trainer import BaseTrainer
from .trainer import (
    CrossValidationResult, GraphMixerTrainer, TrainResult, run_cross_validation, train_loop,
)

__all__ = [
    'OptimState', 'adam_step', 'clip_by_global_norm', 'BaseTrainer',
    'GraphMixerTrainer', 'TrainResult', 'CrossValidationResult',
    'train_loop', 'run_cross_validation',
]
