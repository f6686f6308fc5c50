"""The grounded bilingual embedding model.

Three encoders share a joint space of dimension ``joint_dim``:

* text encoder for language X: word embedding lookup -> position-wise affine
  + ReLU (word_dim -> hidden_dim) -> coordinatewise max over non-pad
  positions -> affine (hidden_dim -> joint_dim) -> L2 normalization;
* text encoder for language Y: identical, except each word vector first
  passes through the square adapt layer, ``v @ adapt.T``;
* feature encoder: a single affine map (feature_dim -> joint_dim) applied to
  a precomputed clip feature vector, then L2 normalization.

The trunk past the adapt layer is shared between the two languages; the
adapt layer is the only language-Y-specific piece besides the embedding
table, and its weights are softly pushed toward orthogonality during
training so it behaves like a rotation between the two word-vector spaces.

Outputs are unit-normalized, so dot products in the joint space are cosine
similarities. Parameters live in a plain dict of float64 arrays; the word
embedding tables carry two extra rows past the vocabulary (UNK, then PAD).
The PAD row never reaches the pooled representation because padded
positions are masked out of the max.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..corpus import EncodedSentence, Vocabulary
from ..embeddings import EmbeddingMatrix
from ..errors import DimensionMismatchError

PARAM_NAMES = (
    "emb_x",
    "emb_y",
    "adapt",
    "ff_w",
    "ff_b",
    "out_w",
    "out_b",
    "feat_w",
    "feat_b",
)


@dataclass(frozen=True)
class ModelDims:
    word_dim: int = 300
    hidden_dim: int = 512
    joint_dim: int = 256
    feature_dim: int = 64


@dataclass
class Batch:
    """A single-language training batch: padded captions plus clip features."""

    ids: np.ndarray        # (B, L) int32
    lengths: np.ndarray    # (B,) int
    features: np.ndarray   # (B, D_v) float64

    @property
    def size(self) -> int:
        return self.ids.shape[0]


def make_batch(clips: Sequence) -> Batch:
    """Stack encoded clips into a Batch. Clips must carry encoded captions."""
    if any(c.caption is None for c in clips):
        raise ValueError("clips must have encoded captions; call encode_clips first")
    ids = np.stack([c.caption.ids for c in clips])
    lengths = np.array([c.caption.true_length for c in clips], dtype=np.int64)
    features = np.stack([c.features for c in clips])
    return Batch(ids=ids, lengths=lengths, features=features)


@dataclass
class GroundingModel:
    vocab_x: Vocabulary
    vocab_y: Vocabulary
    dims: ModelDims
    params: dict = field(repr=False)

    @classmethod
    def create(
        cls,
        vocab_x: Vocabulary,
        vocab_y: Vocabulary,
        dims: ModelDims,
        seed: int = 0,
        init_emb_x: EmbeddingMatrix | None = None,
        init_emb_y: EmbeddingMatrix | None = None,
    ) -> "GroundingModel":
        """Fresh model; word embedding tables start from pretrained matrices
        when given (plus small-random UNK and zero PAD rows), otherwise from
        scaled Gaussian noise. The adapt layer starts at a random orthogonal
        matrix."""
        rng = np.random.default_rng(seed)
        dw, di, dj, dv = dims.word_dim, dims.hidden_dim, dims.joint_dim, dims.feature_dim

        def emb_table(vocab: Vocabulary, pretrained: EmbeddingMatrix | None) -> np.ndarray:
            table = np.empty((vocab.total_size, dw))
            if pretrained is not None:
                if pretrained.dim != dw:
                    raise DimensionMismatchError(
                        f"pretrained dim {pretrained.dim} != word_dim {dw}"
                    )
                if pretrained.vocab.size != vocab.size:
                    raise DimensionMismatchError(
                        f"pretrained vocabulary size {pretrained.vocab.size} "
                        f"!= model vocabulary size {vocab.size}"
                    )
                table[: vocab.size] = pretrained.vectors
            else:
                table[: vocab.size] = rng.normal(0.0, 1.0 / np.sqrt(dw), (vocab.size, dw))
            table[vocab.unk_id] = rng.normal(0.0, 0.01, dw)
            table[vocab.pad_id] = 0.0
            return table

        q, _ = np.linalg.qr(rng.normal(0.0, 1.0, (dw, dw)))
        params = {
            "emb_x": emb_table(vocab_x, init_emb_x),
            "emb_y": emb_table(vocab_y, init_emb_y),
            "adapt": q,
            "ff_w": rng.normal(0.0, 1.0 / np.sqrt(dw), (dw, di)),
            "ff_b": np.zeros(di),
            "out_w": rng.normal(0.0, 1.0 / np.sqrt(di), (di, dj)),
            "out_b": np.zeros(dj),
            "feat_w": rng.normal(0.0, 1.0 / np.sqrt(dv), (dv, dj)),
            "feat_b": np.zeros(dj),
        }
        return cls(vocab_x=vocab_x, vocab_y=vocab_y, dims=dims, params=params)

    def copy(self) -> "GroundingModel":
        return GroundingModel(
            vocab_x=self.vocab_x,
            vocab_y=self.vocab_y,
            dims=self.dims,
            params={k: v.copy() for k, v in self.params.items()},
        )


def _normalize_rows(q: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(q, axis=1)
    if np.any(norms == 0):
        raise ValueError(f"{what}: zero-norm vector cannot be normalized")
    return q / norms[:, None], norms


def text_forward(
    model: GroundingModel, ids: np.ndarray, lengths: np.ndarray, lang: str, cache: bool = False
):
    """Batched text encoding. Returns (B, joint_dim) unit rows; with
    ``cache`` also the intermediates needed for the backward pass."""
    if lang not in ("x", "y"):
        raise ValueError(f"lang must be 'x' or 'y', got {lang!r}")
    ids = np.asarray(ids)
    lengths = np.asarray(lengths)
    if np.any(lengths < 1):
        raise ValueError("sentence with true_length=0: nothing to pool")
    p = model.params
    emb = p["emb_x"] if lang == "x" else p["emb_y"]
    e = emb[ids]                                      # (B, L, dw)
    u = e @ p["adapt"].T if lang == "y" else e        # (B, L, dw)
    z = u @ p["ff_w"] + p["ff_b"]                     # (B, L, di)
    h = np.maximum(z, 0.0)
    pos = np.arange(ids.shape[1])
    pad_mask = pos[None, :] >= lengths[:, None]       # (B, L) True at padding
    h_masked = np.where(pad_mask[:, :, None], -np.inf, h)
    # First maximal non-pad position per channel; argmax takes the first.
    pool_idx = np.argmax(h_masked, axis=1)            # (B, di)
    pooled = np.take_along_axis(h, pool_idx[:, None, :], axis=1)[:, 0, :]
    q = pooled @ p["out_w"] + p["out_b"]              # (B, dj)
    out, norms = _normalize_rows(q, "text encoding")
    if not cache:
        return out
    return out, {
        "ids": ids,
        "e": e,
        "u": u,
        "z": z,
        "pool_idx": pool_idx,
        "pooled": pooled,
        "out": out,
        "norms": norms,
        "lang": lang,
    }


def feature_forward(model: GroundingModel, features: np.ndarray, cache: bool = False):
    """Batched feature encoding to unit rows in the joint space."""
    features = np.asarray(features, dtype=np.float64)
    p = model.params
    if features.ndim != 2 or features.shape[1] != model.dims.feature_dim:
        raise DimensionMismatchError(
            f"features shape {features.shape} does not match feature_dim "
            f"{model.dims.feature_dim}"
        )
    q = features @ p["feat_w"] + p["feat_b"]
    out, norms = _normalize_rows(q, "feature encoding")
    if not cache:
        return out
    return out, {"features": features, "out": out, "norms": norms}


def encode_text_x(model: GroundingModel, sentence: EncodedSentence) -> np.ndarray:
    """Unit vector in the joint space for one language-X sentence."""
    return text_forward(model, sentence.ids[None, :], np.array([sentence.true_length]), "x")[0]


def encode_text_y(model: GroundingModel, sentence: EncodedSentence) -> np.ndarray:
    """As encode_text_x, but through the adapt layer and language-Y table."""
    return text_forward(model, sentence.ids[None, :], np.array([sentence.true_length]), "y")[0]


def encode_features(model: GroundingModel, features: np.ndarray) -> np.ndarray:
    """Unit vector in the joint space for one clip feature vector."""
    return feature_forward(model, np.asarray(features)[None, :])[0]


def nce_loss(text_embs: np.ndarray, clip_embs: np.ndarray) -> float:
    """Mean contrastive loss with in-batch negatives.

    For row i the positive is (text_i, clip_i) and the negatives are text_i
    re-paired with the other clips in the batch, giving a B-way softmax:
    loss_i = logsumexp_j(t_i . c_j) - t_i . c_i. Equal to ln(B) when all
    pairwise scores coincide.
    """
    t = np.asarray(text_embs, dtype=np.float64)
    c = np.asarray(clip_embs, dtype=np.float64)
    if t.shape != c.shape:
        raise DimensionMismatchError(f"batch shapes differ: {t.shape} vs {c.shape}")
    b = t.shape[0]
    if b < 2:
        raise ValueError(f"in-batch negatives need batch size >= 2, got {b}")
    scores = t @ c.T
    row_max = scores.max(axis=1, keepdims=True)
    lse = row_max[:, 0] + np.log(np.exp(scores - row_max).sum(axis=1))
    return float(np.mean(lse - np.diag(scores)))


def ortho_penalty(w: np.ndarray) -> float:
    """Squared Frobenius norm of W W^T - I."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {w.shape}")
    delta = w @ w.T - np.eye(w.shape[0])
    return float(np.sum(delta * delta))


def joint_loss(model: GroundingModel, batch_x: Batch, batch_y: Batch, ortho_weight: float) -> float:
    """Contrastive loss of both languages plus the weighted orthogonality
    penalty on the adapt layer."""
    tx = text_forward(model, batch_x.ids, batch_x.lengths, "x")
    cx = feature_forward(model, batch_x.features)
    ty = text_forward(model, batch_y.ids, batch_y.lengths, "y")
    cy = feature_forward(model, batch_y.features)
    loss = nce_loss(tx, cx) + nce_loss(ty, cy)
    if ortho_weight != 0.0:
        loss += ortho_weight * ortho_penalty(model.params["adapt"])
    return loss
