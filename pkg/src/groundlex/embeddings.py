"""Monolingual word embeddings: skip-gram with negative sampling, text-format
persistence, and cosine nearest-neighbor queries.

The trainer is a vectorized NumPy implementation of skip-gram / negative
sampling with a dynamic context window, unigram^0.75 negative distribution,
and linear learning-rate decay. Updates are applied in deterministic chunks
(reads within a chunk happen before writes), so a fixed seed reproduces the
same matrix exactly on a given platform. Parallel training is out of scope;
the single-writer path is the deterministic one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit

from .corpus import Vocabulary
from .errors import DimensionMismatchError, EmbeddingFormatError, NonFiniteError

NEGATIVE_EXPONENT = 0.75
# Update batching granularity. Chunks must stay small: every pair in a chunk
# reads parameters from before the chunk's write, so very large chunks turn
# frequent-word updates into huge summed steps and diverge.
_CHUNK = 256


@dataclass(frozen=True)
class SkipGramConfig:
    dim: int = 300
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    # Frequent-word subsampling threshold; 0 disables (the default).
    subsample: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.negatives < 1:
            raise ValueError("dim, window and negatives must all be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class EmbeddingMatrix:
    """Dense per-word vectors, one row per vocabulary token (rank order)."""

    vocab: Vocabulary
    vectors: np.ndarray  # (V, dim) float64

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != self.vocab.size:
            raise DimensionMismatchError(
                f"vectors shape {self.vectors.shape} does not match "
                f"vocabulary size {self.vocab.size}"
            )
        if not np.all(np.isfinite(self.vectors)):
            raise NonFiniteError("embedding matrix contains non-finite values")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def row(self, word: str) -> np.ndarray:
        wid = self.vocab.id_of(word)
        if wid >= self.vocab.size:
            raise KeyError(word)
        return self.vectors[wid]


def _encode_for_training(sentences, vocab: Vocabulary) -> list[np.ndarray]:
    """Sentences as in-vocabulary id arrays; OOV positions are dropped."""
    encoded = []
    for sent in sentences:
        ids = [vocab.id_of(t) for t in sent]
        ids = [i for i in ids if i < vocab.size]
        if ids:
            encoded.append(np.asarray(ids, dtype=np.int64))
    return encoded


def _sentence_pairs(ids: np.ndarray, windows: np.ndarray):
    """(center, context) index pairs for one sentence given per-position
    dynamic window sizes."""
    n = len(ids)
    centers, contexts = [], []
    for t in range(n):
        b = windows[t]
        lo, hi = max(0, t - b), min(n, t + b + 1)
        for c in range(lo, hi):
            if c != t:
                centers.append(ids[t])
                contexts.append(ids[c])
    return centers, contexts


def train_skipgram_with_trace(
    sentences: Iterable[Sequence[str]],
    vocab: Vocabulary,
    config: SkipGramConfig = SkipGramConfig(),
) -> tuple[EmbeddingMatrix, list[float]]:
    """Train skip-gram embeddings and return per-epoch mean losses.

    The loss of a (center, context) pair is the negative-sampling objective
    -log sigmoid(s_pos) - sum_k log sigmoid(-s_neg_k), averaged per epoch
    over pairs before that chunk's update is applied.
    """
    if vocab.size == 0:
        raise ValueError("vocabulary is empty")
    encoded = _encode_for_training(sentences, vocab)
    if not encoded:
        raise ValueError("empty corpus: nothing to train on")

    rng = np.random.default_rng(config.seed)
    v, dim = vocab.size, config.dim
    w_in = (rng.random((v, dim)) - 0.5) / dim
    w_out = np.zeros((v, dim))
    if config.epochs == 0:
        return EmbeddingMatrix(vocab=vocab, vectors=w_in), []

    freqs = np.asarray(vocab.counts, dtype=np.float64)
    freqs = np.maximum(freqs, 1.0)
    neg_probs = freqs**NEGATIVE_EXPONENT
    neg_probs /= neg_probs.sum()
    keep_probs = None
    if config.subsample > 0:
        rel = freqs / freqs.sum()
        keep_probs = np.minimum(1.0, np.sqrt(config.subsample / rel))

    total_positions = sum(len(s) for s in encoded) * config.epochs
    seen_positions = 0
    lr0, lr_min = config.learning_rate, config.min_learning_rate
    epoch_losses: list[float] = []

    for _ in range(config.epochs):
        loss_sum, loss_pairs = 0.0, 0
        chunk_c: list[int] = []
        chunk_o: list[int] = []
        pending_positions = 0

        def flush():
            nonlocal loss_sum, loss_pairs, seen_positions, pending_positions
            if not chunk_c:
                seen_positions += pending_positions
                pending_positions = 0
                return
            c = np.asarray(chunk_c, dtype=np.int64)
            o = np.asarray(chunk_o, dtype=np.int64)
            m = len(c)
            neg = rng.choice(v, size=(m, config.negatives), p=neg_probs)
            vc = w_in[c]                                  # (m, d)
            uo = w_out[o]                                 # (m, d)
            un = w_out[neg]                               # (m, k, d)
            s_pos = np.einsum("md,md->m", vc, uo)
            s_neg = np.einsum("md,mkd->mk", vc, un)
            # expit(-s) == 1 - sigmoid(s); log kept stable by clipping
            loss_sum += float(
                -np.log(np.clip(expit(s_pos), 1e-12, None)).sum()
                - np.log(np.clip(expit(-s_neg), 1e-12, None)).sum()
            )
            loss_pairs += m

            frac = seen_positions / max(total_positions, 1)
            lr = max(lr_min, lr0 * (1.0 - frac))
            g_pos = expit(s_pos) - 1.0                    # (m,)
            g_neg = expit(s_neg)                          # (m, k)
            grad_vc = g_pos[:, None] * uo + np.einsum("mk,mkd->md", g_neg, un)
            np.add.at(w_in, c, -lr * grad_vc)
            np.add.at(w_out, o, -lr * g_pos[:, None] * vc)
            np.add.at(
                w_out,
                neg.reshape(-1),
                (-lr * g_neg[:, :, None] * vc[:, None, :]).reshape(-1, dim),
            )
            seen_positions += pending_positions
            pending_positions = 0
            chunk_c.clear()
            chunk_o.clear()

        for ids in encoded:
            if keep_probs is not None:
                mask = rng.random(len(ids)) < keep_probs[ids]
                kept = ids[mask]
                if len(kept) == 0:
                    continue
            else:
                kept = ids
            windows = rng.integers(1, config.window + 1, size=len(kept))
            centers, contexts = _sentence_pairs(kept, windows)
            chunk_c.extend(centers)
            chunk_o.extend(contexts)
            pending_positions += len(ids)
            if len(chunk_c) >= _CHUNK:
                flush()
        flush()
        epoch_losses.append(loss_sum / max(loss_pairs, 1))

    return EmbeddingMatrix(vocab=vocab, vectors=w_in), epoch_losses


def train_skipgram(
    sentences: Iterable[Sequence[str]],
    vocab: Vocabulary,
    config: SkipGramConfig = SkipGramConfig(),
) -> EmbeddingMatrix:
    emb, _ = train_skipgram_with_trace(sentences, vocab, config)
    return emb


def save_embeddings(emb: EmbeddingMatrix, path) -> None:
    """Text format: header line "V dim", then one "token v1 ... v_dim" line
    per word. Floats are written with shortest round-trip formatting, so a
    save/load cycle is bit-exact."""
    with open(path, "w", encoding="utf-8") as fh:
        v, dim = emb.vectors.shape
        fh.write(f"{v} {dim}\n")
        for token, row in zip(emb.vocab.tokens, emb.vectors):
            fh.write(token + " " + " ".join(repr(float(x)) for x in row) + "\n")


def load_embeddings(path) -> EmbeddingMatrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise EmbeddingFormatError(f"{path}: header must be 'V dim', got {header!r}")
        try:
            v, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise EmbeddingFormatError(f"{path}: non-integer header {header!r}") from exc
        tokens: list[str] = []
        rows = np.empty((v, dim))
        for i in range(v):
            line = fh.readline()
            if not line:
                raise EmbeddingFormatError(f"{path}: expected {v} rows, found {i}")
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise DimensionMismatchError(
                    f"{path}: line {i + 2} has {len(parts) - 1} values, expected {dim}"
                )
            tokens.append(parts[0])
            rows[i] = [float(x) for x in parts[1:]]
        if not np.all(np.isfinite(rows)):
            raise NonFiniteError(f"{path}: embedding file contains non-finite values")
    vocab = Vocabulary(tokens=tuple(tokens), counts=tuple([0] * v))
    return EmbeddingMatrix(vocab=vocab, vectors=rows)


def cosine_knn(emb: EmbeddingMatrix, query: np.ndarray, k: int) -> list[tuple[str, float]]:
    """The k most cosine-similar words to ``query``, descending.

    Ties break toward the lower vocabulary rank. Zero-norm stored rows get
    similarity 0; a zero-norm query is an error.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (emb.dim,):
        raise DimensionMismatchError(
            f"query shape {query.shape} does not match embedding dim {emb.dim}"
        )
    qn = np.linalg.norm(query)
    if qn == 0:
        raise ValueError("zero-norm query has no cosine direction")
    norms = np.linalg.norm(emb.vectors, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    sims = (emb.vectors @ query) / (safe * qn)
    sims = np.where(norms > 0, sims, 0.0)
    order = np.argsort(-sims, kind="stable")[: min(k, emb.vocab.size)]
    return [(emb.vocab.tokens[i], float(sims[i])) for i in order]
