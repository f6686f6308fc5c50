"""Text ingestion: tokenization, vocabulary construction, sentence encoding,
and within-sentence co-occurrence counts.

Corpora are plain UTF-8 text files with one sentence per line. All counting
here is associative (shard counts merge by addition), and the resulting
types are treated as immutable once built.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

DEFAULT_MAX_VOCAB = 65536
# Narration sentences average ten words, which motivates the default
# fixed encoding length.
DEFAULT_SENTENCE_LENGTH = 10

UNK_TOKEN = "<unk>"
PAD_TOKEN = "<pad>"


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on Unicode whitespace, stripping punctuation from
    token boundaries.

    Interior punctuation (apostrophes, hyphens) survives; tokens that are
    punctuation-only vanish. Input is assumed pre-segmented into
    space-delimited tokens, so scripts without whitespace word boundaries
    must be segmented upstream.
    """
    out = []
    for raw in text.lower().split():
        start, end = 0, len(raw)
        while start < end and _is_punct(raw[start]):
            start += 1
        while end > start and _is_punct(raw[end - 1]):
            end -= 1
        if end > start:
            out.append(raw[start:end])
    return out


@dataclass(frozen=True)
class Vocabulary:
    """Frequency-ranked token table.

    ``tokens`` is ordered by descending count with ties broken by ascending
    lexicographic order; ids 0..size-1 follow that order. The UNK and PAD
    ids sit just past the token range so they can never collide with a
    corpus token.
    """

    tokens: tuple[str, ...]
    counts: tuple[int, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    @property
    def size(self) -> int:
        """Number of corpus tokens (excludes UNK and PAD)."""
        return len(self.tokens)

    @property
    def total_size(self) -> int:
        """Token count plus the two special ids."""
        return len(self.tokens) + 2

    @property
    def unk_id(self) -> int:
        return len(self.tokens)

    @property
    def pad_id(self) -> int:
        return len(self.tokens) + 1

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __len__(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        """Id of ``token``, or unk_id if out of vocabulary."""
        return self._index.get(token, self.unk_id)

    def word(self, token_id: int) -> str:
        if token_id == self.unk_id:
            return UNK_TOKEN
        if token_id == self.pad_id:
            return PAD_TOKEN
        return self.tokens[token_id]


def count_tokens(sentences: Iterable[Sequence[str]]) -> Counter:
    """Token occurrence counts over an iterable of token sequences."""
    counts: Counter = Counter()
    for sent in sentences:
        counts.update(sent)
    return counts


def vocabulary_from_counts(counts: Counter, max_size: int = DEFAULT_MAX_VOCAB) -> Vocabulary:
    if max_size < 1:
        raise ValueError(f"max_size must be >= 1, got {max_size}")
    if not counts:
        raise ValueError("empty corpus: no tokens to build a vocabulary from")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:max_size]
    tokens, kept = zip(*ranked)
    return Vocabulary(tokens=tuple(tokens), counts=tuple(kept))


def build_vocabulary(
    sentences: Iterable[Sequence[str]], max_size: int = DEFAULT_MAX_VOCAB
) -> Vocabulary:
    """Vocabulary of the ``max_size`` most frequent tokens.

    Deterministic for a given corpus regardless of sentence order: ranking
    is by count, then by token string.
    """
    return vocabulary_from_counts(count_tokens(sentences), max_size=max_size)


@dataclass(frozen=True)
class EncodedSentence:
    """Fixed-length id sequence; positions at and past ``true_length`` hold pad."""

    ids: np.ndarray  # (L,) int32
    true_length: int

    def __post_init__(self):
        object.__setattr__(self, "ids", np.asarray(self.ids, dtype=np.int32))


def encode_sentence(
    vocab: Vocabulary, tokens: Sequence[str], length: int = DEFAULT_SENTENCE_LENGTH
) -> EncodedSentence:
    """Map tokens to ids, truncate to ``length``, pad the remainder.

    Out-of-vocabulary tokens become unk_id.
    """
    if length < 1:
        raise ValueError(f"sentence length must be >= 1, got {length}")
    ids = np.full(length, vocab.pad_id, dtype=np.int32)
    kept = min(len(tokens), length)
    for i in range(kept):
        ids[i] = vocab.id_of(tokens[i])
    return EncodedSentence(ids=ids, true_length=kept)


def decode_sentence(vocab: Vocabulary, sentence: EncodedSentence) -> list[str]:
    """Tokens for the non-pad positions (inverse of encode for in-vocab input)."""
    return [vocab.word(int(i)) for i in sentence.ids[: sentence.true_length]]


@dataclass
class CooccurrenceTable:
    """Sparse symmetric counts of same-sentence co-occurrence.

    Keyed by token id against the vocabulary the table was built with.
    Self-pairs are excluded; a pair of distinct positions holding the same
    type does not count.
    """

    vocab: Vocabulary
    counts: dict  # id -> Counter of context-id -> count

    def count(self, word_a: str, word_b: str) -> int:
        a, b = self.vocab.id_of(word_a), self.vocab.id_of(word_b)
        if a >= self.vocab.size or b >= self.vocab.size:
            return 0
        return self.counts.get(a, {}).get(b, 0)

    def distribution(self, word: str, support: Sequence[str]) -> np.ndarray:
        """Co-occurrence counts of ``word`` against ``support`` words, unnormalized.

        Callers normalize; an all-zero vector means the word never co-occurs
        with the support set.
        """
        wid = self.vocab.id_of(word)
        row = self.counts.get(wid, {})
        return np.array([row.get(self.vocab.id_of(s), 0) for s in support], dtype=np.float64)


def cooccurrence(sentences: Iterable[Sequence[str]], vocab: Vocabulary) -> CooccurrenceTable:
    """Count unordered within-sentence pairs, once per position pair.

    A sentence [a, a, b] contributes 2 to count(a, b) (two a-positions, one
    b-position) and nothing to count(a, a). Out-of-vocabulary tokens are
    skipped.
    """
    counts: dict = {}
    for sent in sentences:
        ids = [vocab.id_of(t) for t in sent]
        ids = [i for i in ids if i < vocab.size]
        n = len(ids)
        for i in range(n):
            a = ids[i]
            for j in range(i + 1, n):
                b = ids[j]
                if a == b:
                    continue
                counts.setdefault(a, Counter())[b] += 1
                counts.setdefault(b, Counter())[a] += 1
    return CooccurrenceTable(vocab=vocab, counts=counts)


def read_corpus(path) -> Iterator[list[str]]:
    """Tokenized sentences from a one-sentence-per-line UTF-8 file.

    Blank lines are skipped.
    """
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            tokens = tokenize(line)
            if tokens:
                yield tokens


def save_vocabulary(vocab: Vocabulary, path) -> None:
    """One token per line in rank order, with a tab-separated count."""
    with open(path, "w", encoding="utf-8") as fh:
        for token, count in zip(vocab.tokens, vocab.counts):
            fh.write(f"{token}\t{count}\n")


def load_vocabulary(path) -> Vocabulary:
    """Read a vocabulary file; counts are optional (default 0)."""
    tokens, counts = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            tokens.append(parts[0])
            counts.append(int(parts[1]) if len(parts) > 1 else 0)
    return Vocabulary(tokens=tuple(tokens), counts=tuple(counts))
