"""Bilingual dictionary I/O, Recall@n scoring, and corpus dissimilarity.

The dictionary file format is one whitespace-separated pair per line,
"SourceWord TargetWord"; a source word may occur on multiple lines to list
several accepted translations.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import jensenshannon

from .corpus import CooccurrenceTable
from .errors import DictionaryFormatError


@dataclass
class BilingualDictionary:
    """Source word -> set of accepted target translations."""

    entries: dict[str, set[str]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def add(self, source: str, target: str) -> None:
        self.entries.setdefault(source, set()).add(target)

    def restrict(self, source_vocab=None, target_vocab=None) -> "BilingualDictionary":
        """Entries whose source is in ``source_vocab`` and with accepted
        targets filtered to ``target_vocab`` (entries losing every target are
        dropped). Pass None to leave a side unrestricted."""
        out = BilingualDictionary()
        for src, targets in self.entries.items():
            if source_vocab is not None and src not in source_vocab:
                continue
            kept = {t for t in targets if target_vocab is None or t in target_vocab}
            if kept:
                out.entries[src] = kept
        return out


def load_dictionary(path) -> BilingualDictionary:
    """Read a two-column dictionary file; duplicate lines collapse.

    Lines with any other number of columns raise DictionaryFormatError
    listing the offending line numbers. An empty file is a valid empty
    dictionary.
    """
    dic = BilingualDictionary()
    bad: list[int] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2:
                bad.append(lineno)
                continue
            dic.add(parts[0], parts[1])
    if bad:
        raise DictionaryFormatError(
            f"{path}: expected two columns per line, bad lines: {bad}", line_numbers=bad
        )
    return dic


def save_dictionary(dic: BilingualDictionary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for src in sorted(dic.entries):
            for tgt in sorted(dic.entries[src]):
                fh.write(f"{src} {tgt}\n")


@dataclass
class EvalReport:
    """Recall@n over the covered queries, with coverage reported separately."""

    recall: float
    n: int
    queries_total: int
    queries_covered: int
    hits: list[tuple[str, bool, int]]  # (query, hit, rank of first hit or -1)

    @property
    def coverage(self) -> float:
        return self.queries_covered / self.queries_total if self.queries_total else 0.0

    def summary(self) -> str:
        return (
            f"recall@{self.n}={self.recall:.4f} "
            f"({sum(1 for _, h, _ in self.hits if h)}/{self.queries_covered} covered queries, "
            f"coverage {self.coverage:.2%})"
        )


def recall_at_n(
    predictions: dict[str, list],
    dictionary: BilingualDictionary,
    n: int,
) -> EvalReport:
    """A covered query scores a hit iff any accepted translation appears in
    its top-n list.

    Queries with no prediction entry (out of the prediction vocabulary) are
    excluded from the recall denominator and only affect coverage.
    Prediction lists may hold words or (word, score) tuples.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    hits: list[tuple[str, bool, int]] = []
    covered = 0
    for src, accepted in sorted(dictionary.entries.items()):
        ranked = predictions.get(src)
        if ranked is None:
            continue
        covered += 1
        words = [w[0] if isinstance(w, tuple) else w for w in ranked]
        rank = -1
        for pos, w in enumerate(words[:n], start=1):
            if w in accepted:
                rank = pos
                break
        hits.append((src, rank > 0, rank))
    n_hits = sum(1 for _, h, _ in hits if h)
    recall = n_hits / covered if covered else 0.0
    return EvalReport(
        recall=recall,
        n=n,
        queries_total=len(dictionary.entries),
        queries_covered=covered,
        hits=hits,
    )


def write_report_csv(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query", "rank_of_first_hit", "hit"])
        for query, hit, rank in report.hits:
            writer.writerow([query, rank, int(hit)])


def report_markdown(report: EvalReport) -> str:
    lines = [
        f"| metric | value |",
        f"| --- | --- |",
        f"| recall@{report.n} | {report.recall:.4f} |",
        f"| queries total | {report.queries_total} |",
        f"| queries covered | {report.queries_covered} |",
        f"| coverage | {report.coverage:.4f} |",
    ]
    return "\n".join(lines)


def js_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Jensen-Shannon distance with base-2 logs: sqrt of the symmetrized KL
    to the midpoint. Bounded in [0, 1]; 1 exactly for disjoint supports."""
    return float(jensenshannon(np.asarray(p, float), np.asarray(q, float), base=2.0))


@dataclass
class DissimilarityResult:
    distance: float
    pairs_used: int
    pairs_skipped: int


def corpus_dissimilarity(
    cooc_a: CooccurrenceTable,
    cooc_b: CooccurrenceTable,
    aligned_pairs: list[tuple[str, str]],
    smoothing: float = 0.0,
) -> DissimilarityResult:
    """Mean Jensen-Shannon distance between per-word co-occurrence
    distributions of two corpora.

    For each aligned pair, the word's same-sentence co-occurrence counts are
    restricted to the aligned context vocabulary (so both sides share a
    support index) and normalized. Pairs with zero mass on either side are
    skipped unless ``smoothing`` adds epsilon mass everywhere.
    """
    if not aligned_pairs:
        raise ValueError("aligned_pairs must be nonempty")
    support_a = [a for a, _ in aligned_pairs]
    support_b = [b for _, b in aligned_pairs]
    distances = []
    skipped = 0
    for word_a, word_b in aligned_pairs:
        pa = cooc_a.distribution(word_a, support_a) + smoothing
        pb = cooc_b.distribution(word_b, support_b) + smoothing
        if pa.sum() == 0 or pb.sum() == 0:
            skipped += 1
            continue
        distances.append(js_distance(pa / pa.sum(), pb / pb.sum()))
    if not distances:
        raise ValueError("no aligned pair has co-occurrence mass in both corpora")
    return DissimilarityResult(
        distance=float(np.mean(distances)), pairs_used=len(distances), pairs_skipped=skipped
    )
