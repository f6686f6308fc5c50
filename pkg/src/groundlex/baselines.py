"""Non-grounded reference methods: random chance and the video-retrieval
pseudo-parallel-corpus translator."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from .clips import NarratedClip, feature_dim
from .corpus import Vocabulary
from .errors import DimensionMismatchError


@dataclass
class ChanceEstimate:
    """Monte-Carlo and closed-form Recall@n under uniform retrieval."""

    monte_carlo: float
    expectation: float
    std_error: float
    trials: int


def random_chance_recall(
    dictionary,
    vocab_y_size: int,
    n: int,
    trials: int = 10000,
    seed: int = 0,
) -> ChanceEstimate:
    """Recall@n of retrieving n of vocab_y_size candidates uniformly without
    replacement.

    The closed form per query with t accepted translations is
    1 - C(V - t, n) / C(V, n); the Monte-Carlo estimate actually samples
    candidate subsets, so the two are independent routes to the same number.
    ``std_error`` is the binomial standard error of the Monte-Carlo mean
    under the closed-form hit probabilities.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    v = int(vocab_y_size)
    if n < 1 or n > v:
        raise ValueError(f"n={n} out of range for vocabulary size {v}")
    t_values = [min(len(targets), v) for targets in dictionary.entries.values()]
    if not t_values:
        raise ValueError("empty dictionary")
    q = len(t_values)

    probs = np.array([1.0 - comb(v - t, n) / comb(v, n) for t in t_values])
    expectation = float(probs.mean())

    rng = np.random.default_rng(seed)
    hits = 0
    # group queries by t: the simulated hit only depends on the number of
    # accepted targets, which by symmetry can sit at indices 0..t-1
    for t in sorted(set(t_values)):
        n_q = sum(1 for tv in t_values if tv == t)
        draws = rng.random((trials, v)).argpartition(n - 1, axis=1)[:, :n]
        per_trial = (draws < t).any(axis=1)
        hits += int(per_trial.sum()) * n_q
    monte_carlo = hits / (trials * q)
    std_error = float(np.sqrt(np.sum(probs * (1.0 - probs)) / (trials * q * q)))
    return ChanceEstimate(
        monte_carlo=monte_carlo, expectation=expectation, std_error=std_error, trials=trials
    )


@dataclass
class PseudoParallelCorpus:
    """Caption pairs induced by nearest-neighbor matching of clip features."""

    pairs: list[tuple[NarratedClip, NarratedClip, float]]
    k: int


def build_pseudo_parallel(
    clips_x: Sequence[NarratedClip],
    clips_y: Sequence[NarratedClip],
    k: int = 3,
) -> PseudoParallelCorpus:
    """For every X clip, its k nearest Y clips by Euclidean feature distance
    (exact exhaustive search)."""
    if not clips_x or not clips_y:
        raise ValueError("both clip datasets must be nonempty")
    if feature_dim(clips_x) != feature_dim(clips_y):
        raise DimensionMismatchError(
            f"feature dims differ: {feature_dim(clips_x)} vs {feature_dim(clips_y)}"
        )
    k = min(k, len(clips_y))
    fx = np.stack([c.features for c in clips_x])
    fy = np.stack([c.features for c in clips_y])
    # squared distances via the expansion ||a-b||^2 = ||a||^2 - 2ab + ||b||^2
    sq = (
        (fx * fx).sum(axis=1)[:, None]
        - 2.0 * fx @ fy.T
        + (fy * fy).sum(axis=1)[None, :]
    )
    np.maximum(sq, 0.0, out=sq)
    pairs = []
    for i, row in enumerate(sq):
        nearest = np.argsort(row, kind="stable")[:k]
        for j in nearest:
            pairs.append((clips_x[i], clips_y[int(j)], float(np.sqrt(row[j]))))
    return PseudoParallelCorpus(pairs=pairs, k=k)


def save_pseudo_parallel(corpus: PseudoParallelCorpus, path) -> None:
    """Tab-separated lines: caption_x, caption_y, distance."""
    with open(path, "w", encoding="utf-8") as fh:
        for cx, cy, dist in corpus.pairs:
            fh.write(f"{cx.text}\t{cy.text}\t{dist!r}\n")


def _pair_counts(
    corpus: PseudoParallelCorpus, vocab_x: Vocabulary, vocab_y: Vocabulary
) -> np.ndarray:
    """Co-occurrence counts of (x word, y word) over paired captions, one
    count per occurrence pair."""
    counts = np.zeros((vocab_x.size, vocab_y.size))
    for cx, cy, _ in corpus.pairs:
        if cx.caption is None or cy.caption is None:
            raise ValueError("clips must carry encoded captions")
        ids_x = [int(i) for i in cx.caption.ids[: cx.caption.true_length] if i < vocab_x.size]
        ids_y = [int(j) for j in cy.caption.ids[: cy.caption.true_length] if j < vocab_y.size]
        for i in ids_x:
            for j in ids_y:
                counts[i, j] += 1.0
    return counts


class JointProbTranslator:
    """Ranks Y words by their joint probability with the query X word over a
    pseudo-parallel corpus.

    The normalizer is the total pair-token mass, so rankings for a fixed
    source word are unaffected by the choice of global versus per-source
    normalization.
    """

    def __init__(self, corpus: PseudoParallelCorpus, vocab_x: Vocabulary, vocab_y: Vocabulary):
        self.vocab_x = vocab_x
        self.vocab_y = vocab_y
        self.counts = _pair_counts(corpus, vocab_x, vocab_y)
        self.total = self.counts.sum()

    def translate(self, word_x: str, k: int = 10) -> list[tuple[str, float]] | None:
        """Ranked (word, joint probability); None when the word was never
        observed in a paired caption (distinct from an empty top-k)."""
        if word_x not in self.vocab_x:
            raise KeyError(word_x)
        row = self.counts[self.vocab_x.id_of(word_x)]
        if row.sum() == 0:
            return None
        probs = row / self.total if self.total > 0 else row
        freqs = np.asarray(self.vocab_y.counts, dtype=np.float64)
        # rank by probability, ties by higher Y frequency, then Y rank
        order = np.lexsort((np.arange(len(probs)), -freqs, -probs))[: min(k, len(probs))]
        return [(self.vocab_y.tokens[j], float(probs[j])) for j in order]


def joint_prob_translate(
    corpus: PseudoParallelCorpus,
    vocab_x: Vocabulary,
    vocab_y: Vocabulary,
    word_x: str,
    k: int = 10,
) -> list[tuple[str, float]] | None:
    """One-shot wrapper around JointProbTranslator (build the translator
    directly when querying many words)."""
    return JointProbTranslator(corpus, vocab_x, vocab_y).translate(word_x, k)
