"""Word translation and two-stage retrieval with a trained grounding model."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..corpus import EncodedSentence, Vocabulary, encode_sentence, tokenize
from ..errors import UnknownWordError
from .model import GroundingModel, feature_forward, text_forward


def _single_word_matrix(model: GroundingModel, lang: str) -> np.ndarray:
    """Joint-space embedding of every vocabulary word as a one-word sentence."""
    vocab = model.vocab_x if lang == "x" else model.vocab_y
    ids = np.arange(vocab.size, dtype=np.int32)[:, None]
    lengths = np.ones(vocab.size, dtype=np.int64)
    return text_forward(model, ids, lengths, lang)


def y_word_embeddings(model: GroundingModel) -> np.ndarray:
    """(V_y, joint_dim) matrix of language-Y single-word encodings. Compute
    once and reuse across many queries."""
    return _single_word_matrix(model, "y")


def translate_word(
    model: GroundingModel,
    word_x: str,
    k: int = 10,
    y_matrix: np.ndarray | None = None,
) -> list[tuple[str, float]]:
    """Rank language-Y words by cosine to the encoded query word.

    Ties break toward the lower Y vocabulary rank; k is clamped to the Y
    vocabulary size. Raises UnknownWordError for out-of-vocabulary queries
    (distinct from an empty result).
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if word_x not in model.vocab_x:
        raise UnknownWordError(f"{word_x!r} is not in the X vocabulary")
    if y_matrix is None:
        y_matrix = y_word_embeddings(model)
    qid = np.array([[model.vocab_x.id_of(word_x)]], dtype=np.int32)
    query = text_forward(model, qid, np.array([1]), "x")[0]
    scores = y_matrix @ query
    order = np.argsort(-scores, kind="stable")[: min(k, model.vocab_y.size)]
    return [(model.vocab_y.tokens[i], float(scores[i])) for i in order]


def translate_words(
    model: GroundingModel, words: Sequence[str], k: int = 10
) -> dict[str, list[tuple[str, float]]]:
    """Batch translate_word; silently skips out-of-vocabulary queries."""
    y_matrix = y_word_embeddings(model)
    out = {}
    for w in words:
        if w in model.vocab_x:
            out[w] = translate_word(model, w, k, y_matrix=y_matrix)
    return out


def _as_sentence(query, vocab: Vocabulary) -> EncodedSentence:
    if isinstance(query, EncodedSentence):
        return query
    tokens = tokenize(query)
    return encode_sentence(vocab, tokens, max(len(tokens), 1))


def two_stage_translate(
    model: GroundingModel,
    query_x,
    clips_y: Sequence,
    candidates_y: Sequence,
    k: int = 10,
):
    """Retrieve the clip closest to the encoded X query, then rank candidate
    Y sentences against that clip's embedding.

    Both rankings are deterministic (ties toward the earlier element), but
    the two stage-wise optima need not compose into the jointly best pair.
    Returns (best clip, list of (candidate, score)).
    """
    if not clips_y or not candidates_y:
        raise ValueError("clip dataset and candidate set must both be nonempty")
    sent = _as_sentence(query_x, model.vocab_x)
    query = text_forward(model, sent.ids[None, :], np.array([sent.true_length]), "x")[0]

    clip_embs = feature_forward(model, np.stack([c.features for c in clips_y]))
    best_clip = clips_y[int(np.argmax(clip_embs @ query))]
    best_emb = clip_embs[int(np.argmax(clip_embs @ query))]

    cand_sents = [_as_sentence(c, model.vocab_y) for c in candidates_y]
    length = max(s.true_length for s in cand_sents)
    ids = np.stack([np.pad(s.ids[:length], (0, max(0, length - len(s.ids))),
                           constant_values=model.vocab_y.pad_id) for s in cand_sents])
    lengths = np.array([min(s.true_length, length) for s in cand_sents])
    cand_embs = text_forward(model, ids, lengths, "y")
    scores = cand_embs @ best_emb
    order = np.argsort(-scores, kind="stable")[: min(k, len(candidates_y))]
    return best_clip, [(candidates_y[i], float(scores[i])) for i in order]
