"""Narrated clip records and their JSON-lines dataset format.

One record per line: {"id": str, "features": [float, ...], "caption": str}.
Captions are encoded against a vocabulary at load (or explicitly via
``encode_clips``); the raw text is kept for baselines that need it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .corpus import DEFAULT_SENTENCE_LENGTH, EncodedSentence, Vocabulary, encode_sentence, tokenize
from .errors import DimensionMismatchError, NonFiniteError


@dataclass(frozen=True)
class NarratedClip:
    """Precomputed grounding feature vector paired with a caption."""

    clip_id: str
    features: np.ndarray  # (D_v,) float64
    text: str
    caption: EncodedSentence | None = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if not np.all(np.isfinite(feats)):
            raise NonFiniteError(f"clip {self.clip_id}: non-finite feature vector")
        object.__setattr__(self, "features", feats)


def feature_dim(clips: Sequence[NarratedClip]) -> int:
    if not clips:
        raise ValueError("empty clip dataset")
    dim = clips[0].features.shape[0]
    for c in clips:
        if c.features.shape[0] != dim:
            raise DimensionMismatchError(
                f"clip {c.clip_id}: feature dim {c.features.shape[0]} != {dim}"
            )
    return dim


def encode_clips(
    clips: Sequence[NarratedClip],
    vocab: Vocabulary,
    length: int = DEFAULT_SENTENCE_LENGTH,
) -> list[NarratedClip]:
    """Attach encoded captions (tokenize + id-encode + pad) to every clip."""
    return [
        replace(c, caption=encode_sentence(vocab, tokenize(c.text), length)) for c in clips
    ]


def save_clip_dataset(clips: Sequence[NarratedClip], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in clips:
            rec = {"id": c.clip_id, "features": [float(x) for x in c.features], "caption": c.text}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_clip_dataset(
    path,
    vocab: Vocabulary | None = None,
    length: int = DEFAULT_SENTENCE_LENGTH,
) -> list[NarratedClip]:
    """Read a JSON-lines clip file; encodes captions when a vocabulary is given."""
    clips = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: line {lineno} is not valid JSON: {exc}") from exc
            clips.append(
                NarratedClip(
                    clip_id=str(rec["id"]),
                    features=np.asarray(rec["features"], dtype=np.float64),
                    text=str(rec["caption"]),
                )
            )
    feature_dim(clips)
    if vocab is not None:
        clips = encode_clips(clips, vocab, length)
    return clips
