"""Grounded bilingual embedding model: architecture, training, inference,
and checkpointing."""

from .backprop import (
    joint_gradients,
    language_gradients,
    ortho_penalty_gradient,
    zero_gradients,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .inference import translate_word, translate_words, two_stage_translate, y_word_embeddings
from .model import (
    Batch,
    GroundingModel,
    ModelDims,
    encode_features,
    encode_text_x,
    encode_text_y,
    feature_forward,
    joint_loss,
    make_batch,
    nce_loss,
    ortho_penalty,
    text_forward,
)
from .training import GroundTrainConfig, TrainResult, train

__all__ = [
    "Batch",
    "GroundingModel",
    "GroundTrainConfig",
    "ModelDims",
    "TrainResult",
    "encode_features",
    "encode_text_x",
    "encode_text_y",
    "feature_forward",
    "joint_gradients",
    "joint_loss",
    "language_gradients",
    "load_checkpoint",
    "make_batch",
    "nce_loss",
    "ortho_penalty",
    "ortho_penalty_gradient",
    "save_checkpoint",
    "text_forward",
    "train",
    "translate_word",
    "translate_words",
    "two_stage_translate",
    "y_word_embeddings",
    "zero_gradients",
]
