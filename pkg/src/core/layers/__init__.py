"""
Package layers - Các lớp học được của Graph MLP-Mixer / Graph ViT
"""

from .base import (
    MLP, CategoricalEmbedding, FeatureNorm, ForwardContext, LayerNorm, Linear, ModelParams,
)
from .encoders import PatchEncoder, overlap_average
from .graph_mixer import GraphMixerModel, model_forward
from .mixer import GraphAttention, MixerLayer, ViTLayer

__all__ = [
    'ModelParams', 'ForwardContext', 'Linear', 'MLP', 'LayerNorm', 'FeatureNorm',
    'CategoricalEmbedding',
    'PatchEncoder', 'overlap_average', 'MixerLayer', 'ViTLayer', 'GraphAttention',
    'GraphMixerModel', 'model_forward',
]
