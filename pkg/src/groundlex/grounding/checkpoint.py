"""Grounding model persistence: tensor container plus the two vocabularies."""

from __future__ import annotations

from pathlib import Path

from ..corpus import load_vocabulary, save_vocabulary
from ..tensorio import read_tensors, write_tensors
from .model import GroundingModel, ModelDims, PARAM_NAMES

VOCAB_X_FILE = "vocab_x.txt"
VOCAB_Y_FILE = "vocab_y.txt"


def save_checkpoint(model: GroundingModel, directory) -> None:
    directory = Path(directory)
    meta = {
        "kind": "grounding_model",
        "dims": {
            "word_dim": model.dims.word_dim,
            "hidden_dim": model.dims.hidden_dim,
            "joint_dim": model.dims.joint_dim,
            "feature_dim": model.dims.feature_dim,
        },
    }
    write_tensors(directory, model.params, meta=meta)
    save_vocabulary(model.vocab_x, directory / VOCAB_X_FILE)
    save_vocabulary(model.vocab_y, directory / VOCAB_Y_FILE)


def load_checkpoint(directory) -> GroundingModel:
    directory = Path(directory)
    tensors, meta = read_tensors(directory)
    if meta.get("kind") != "grounding_model":
        raise ValueError(f"{directory} does not hold a grounding model checkpoint")
    missing = [n for n in PARAM_NAMES if n not in tensors]
    if missing:
        raise ValueError(f"checkpoint is missing tensors: {missing}")
    dims = ModelDims(**{k: int(v) for k, v in meta["dims"].items()})
    vocab_x = load_vocabulary(directory / VOCAB_X_FILE)
    vocab_y = load_vocabulary(directory / VOCAB_Y_FILE)
    return GroundingModel(vocab_x=vocab_x, vocab_y=vocab_y, dims=dims, params=tensors)
