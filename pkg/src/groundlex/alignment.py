"""Linear alignment between two word-embedding spaces.

Everything here uses the row convention: a LinearMap with matrix M sends
source rows into the target space as ``X @ M``. The closed-form orthogonal
Procrustes solution, CSLS retrieval scores, dictionary induction, the
self-learning iterative Procrustes loop, and the refinement pipeline that
seeds self-learning from a trained adapt layer instead of an adversarial
initialization all live in this module.

Unless disabled, alignment entry points preprocess embedding matrices by
unit-normalizing rows, mean-centering, and renormalizing; retrieval through
``translate_with_map`` must use the same flag the map was fitted with (the
default matches).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingMatrix
from .errors import DimensionMismatchError
from .tensorio import read_tensors, write_tensors

DEFAULT_REFINE_ITERS = 5
DEFAULT_CSLS_K = 10
DEFAULT_INDUCTION_LIMIT = 10000
DEFAULT_RESTARTS = 25
# Supervised protocol convention: fit on at most this many dictionary pairs.
DEFAULT_SUPERVISED_PAIRS = 5000

ORTHOGONALITY_TOL = 1e-6


@dataclass
class LinearMap:
    """A square mapping between embedding spaces (row convention X @ M)."""

    matrix: np.ndarray
    orthogonal: bool
    provenance: str  # identity | random | supervised | iterative | adapt_layer | muve

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise DimensionMismatchError(f"LinearMap must be square, got {self.matrix.shape}")
        if self.orthogonal:
            err = orthogonality_error(self.matrix)
            if err >= ORTHOGONALITY_TOL:
                raise ValueError(
                    f"matrix flagged orthogonal but ||WW^T - I||_F = {err:.3e}"
                )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def orthogonality_error(w: np.ndarray) -> float:
    w = np.asarray(w, dtype=np.float64)
    return float(np.linalg.norm(w @ w.T - np.eye(w.shape[0])))


def normalize_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    return m / np.where(norms > 0, norms, 1.0)


def preprocess_embeddings(vectors: np.ndarray, enabled: bool = True) -> np.ndarray:
    """Unit rows, mean-center, unit rows again. Identity when disabled."""
    v = np.asarray(vectors, dtype=np.float64)
    if not enabled:
        return v.copy()
    v = normalize_rows(v)
    v = v - v.mean(axis=0, keepdims=True)
    return normalize_rows(v)


def _fix_svd_signs(u: np.ndarray, vt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic sign convention: the largest-magnitude entry of each
    left singular vector is made positive (the paired right vector flips
    too, leaving the product unchanged)."""
    for k in range(u.shape[1]):
        j = int(np.argmax(np.abs(u[:, k])))
        if u[j, k] < 0:
            u[:, k] = -u[:, k]
            vt[k, :] = -vt[k, :]
    return u, vt


def orthogonalize(w: np.ndarray) -> np.ndarray:
    """Nearest orthogonal matrix in Frobenius norm (U V^T of the SVD)."""
    u, _, vt = np.linalg.svd(np.asarray(w, dtype=np.float64))
    u, vt = _fix_svd_signs(u, vt)
    return u @ vt


def procrustes(x: np.ndarray, y: np.ndarray) -> LinearMap:
    """Orthogonal W minimizing ||X W - Y||_F, in closed form via the SVD of
    X^T Y. Warns on rank-deficient X^T Y (the minimizer is then not unique,
    but the SVD still yields one)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatchError(f"paired matrices differ in shape: {x.shape} vs {y.shape}")
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("need at least one paired row")
    m = x.T @ y
    u, s, vt = np.linalg.svd(m)
    if np.any(s <= s[0] * 1e-12) or s[0] == 0.0:
        warnings.warn(
            "rank-deficient cross-covariance: Procrustes solution is not unique",
            RuntimeWarning,
            stacklevel=2,
        )
    u, vt = _fix_svd_signs(u, vt)
    return LinearMap(matrix=u @ vt, orthogonal=True, provenance="supervised")


def supervised_align(
    emb_x: EmbeddingMatrix,
    emb_y: EmbeddingMatrix,
    pairs: list[tuple[str, str]],
    normalize: bool = True,
) -> tuple[LinearMap, float]:
    """Procrustes on the dictionary pairs present in both vocabularies.

    Returns (map, coverage) where coverage = resolved pairs / given pairs.
    """
    if not pairs:
        raise ValueError("no dictionary pairs given")
    xm = preprocess_embeddings(emb_x.vectors, normalize)
    ym = preprocess_embeddings(emb_y.vectors, normalize)
    rows_x, rows_y = [], []
    for wx, wy in pairs:
        if wx in emb_x.vocab and wy in emb_y.vocab:
            rows_x.append(xm[emb_x.vocab.id_of(wx)])
            rows_y.append(ym[emb_y.vocab.id_of(wy)])
    if not rows_x:
        raise ValueError("none of the dictionary pairs resolve in both vocabularies")
    lin = procrustes(np.array(rows_x), np.array(rows_y))
    return lin, len(rows_x) / len(pairs)


def _cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return normalize_rows(a) @ normalize_rows(b).T


def csls_matrix(mapped_x: np.ndarray, y: np.ndarray, k: int = DEFAULT_CSLS_K) -> np.ndarray:
    """CSLS scores between every mapped source row and every target row.

    score(i, j) = 2 cos(x_i, y_j) - r_x(i) - r_y(j), where r_x(i) is the
    mean cosine of x_i to its k nearest targets and r_y(j) the mean cosine
    of y_j to its k nearest mapped sources. Subtracting the local mean
    similarities demotes "hub" targets that are near everything.
    """
    mapped_x = np.asarray(mapped_x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if k < 1 or k > y.shape[0] or k > mapped_x.shape[0]:
        raise ValueError(
            f"k={k} out of range for {mapped_x.shape[0]} sources and {y.shape[0]} targets"
        )
    cos = _cosine_matrix(mapped_x, y)
    r_x = np.sort(cos, axis=1)[:, -k:].mean(axis=1)   # (n_x,)
    r_y = np.sort(cos, axis=0)[-k:, :].mean(axis=0)   # (n_y,)
    return 2.0 * cos - r_x[:, None] - r_y[None, :]


def csls(
    x_mapped: np.ndarray,
    y: np.ndarray,
    k: int,
    mapped_sources: np.ndarray | None = None,
) -> np.ndarray:
    """CSLS score vector of one mapped query against every row of Y.

    Target hubness r_y needs a population of mapped source vectors; it
    defaults to the query alone only when none is supplied (degenerate but
    well-defined).
    """
    x_mapped = np.asarray(x_mapped, dtype=np.float64)
    if mapped_sources is None:
        mapped_sources = x_mapped[None, :]
    sources = np.asarray(mapped_sources, dtype=np.float64)
    if k < 1 or k > y.shape[0] or k > sources.shape[0]:
        raise ValueError(f"k={k} out of range")
    cos_q = _cosine_matrix(x_mapped[None, :], y)[0]       # (n_y,)
    r_x = float(np.sort(cos_q)[-k:].mean())
    cos_all = _cosine_matrix(sources, y)                  # (n_s, n_y)
    r_y = np.sort(cos_all, axis=0)[-k:, :].mean(axis=0)
    return 2.0 * cos_q - r_x - r_y


@dataclass
class InducedDictionary:
    """Word-id pairs induced from geometry, with their retrieval scores."""

    pairs: list[tuple[int, int, float]]

    def id_pairs(self) -> list[tuple[int, int]]:
        return [(a, b) for a, b, _ in self.pairs]


def induce_dictionary(
    mapped_x: np.ndarray,
    y: np.ndarray,
    policy: str = "csls_topk",
    limit: int = DEFAULT_INDUCTION_LIMIT,
    csls_k: int = DEFAULT_CSLS_K,
) -> InducedDictionary:
    """Candidate translation pairs over the ``limit`` most frequent words
    per side (rows are assumed frequency-ordered).

    mutual_nn keeps pairs that are each other's cosine nearest neighbor;
    csls_topk keeps every source's CSLS argmax. May return an empty set.
    """
    if policy not in ("mutual_nn", "csls_topk"):
        raise ValueError(f"unknown induction policy {policy!r}")
    n = min(limit, mapped_x.shape[0], y.shape[0])
    xs, ys = mapped_x[:n], y[:n]
    pairs: list[tuple[int, int, float]] = []
    if policy == "mutual_nn":
        cos = _cosine_matrix(xs, ys)
        fwd = np.argmax(cos, axis=1)
        bwd = np.argmax(cos, axis=0)
        for i, j in enumerate(fwd):
            if bwd[j] == i:
                pairs.append((i, int(j), float(cos[i, j])))
    else:
        k = min(csls_k, n)
        scores = csls_matrix(xs, ys, k=k)
        best = np.argmax(scores, axis=1)
        pairs = [(i, int(j), float(scores[i, j])) for i, j in enumerate(best)]
    return InducedDictionary(pairs=pairs)


def _mean_csls_of_mutual_pairs(
    mapped_x: np.ndarray, y: np.ndarray, limit: int, csls_k: int
) -> float:
    """Unsupervised fit criterion: mean CSLS score of the induced mutual-NN
    pairs (-inf when nothing is mutual)."""
    induced = induce_dictionary(mapped_x, y, policy="mutual_nn", limit=limit)
    if not induced.pairs:
        return -np.inf
    n = min(limit, mapped_x.shape[0], y.shape[0])
    k = min(csls_k, n)
    scores = csls_matrix(mapped_x[:n], y[:n], k=k)
    return float(np.mean([scores[i, j] for i, j, _ in induced.pairs]))


def _refine(
    w: np.ndarray,
    xm: np.ndarray,
    ym: np.ndarray,
    iters: int,
    policy: str,
    limit: int,
    csls_k: int,
) -> np.ndarray:
    """Alternate dictionary induction and Procrustes until the induced pair
    set stabilizes or ``iters`` is reached."""
    prev_pairs = None
    for _ in range(iters):
        induced = induce_dictionary(xm @ w, ym, policy=policy, limit=limit, csls_k=csls_k)
        if not induced.pairs:
            break
        ids = induced.id_pairs()
        if ids == prev_pairs:
            break
        prev_pairs = ids
        src = np.array([xm[i] for i, _ in ids])
        tgt = np.array([ym[j] for _, j in ids])
        w = procrustes(src, tgt).matrix
    return w


def iterative_procrustes(
    emb_x: EmbeddingMatrix,
    emb_y: EmbeddingMatrix,
    restarts: int = DEFAULT_RESTARTS,
    iters: int = 20,
    limit: int = DEFAULT_INDUCTION_LIMIT,
    csls_k: int = DEFAULT_CSLS_K,
    seed: int = 0,
    normalize: bool = True,
) -> LinearMap:
    """Self-learning alignment without any seed mapping.

    Each restart starts from the identity (restart 0) or a random orthogonal
    matrix and alternates mutual-NN induction with Procrustes. The restart
    with the highest mean CSLS score over its induced mutual-NN pairs wins.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if emb_x.dim != emb_y.dim:
        raise DimensionMismatchError(f"embedding dims differ: {emb_x.dim} vs {emb_y.dim}")
    xm = preprocess_embeddings(emb_x.vectors, normalize)
    ym = preprocess_embeddings(emb_y.vectors, normalize)
    rng = np.random.default_rng(seed)
    d = emb_x.dim
    best_w, best_score = None, -np.inf
    for r in range(restarts):
        if r == 0:
            w0 = np.eye(d)
        else:
            w0, _ = np.linalg.qr(rng.normal(0.0, 1.0, (d, d)))
        w = _refine(w0, xm, ym, iters, "mutual_nn", limit, csls_k)
        score = _mean_csls_of_mutual_pairs(xm @ w, ym, limit, csls_k)
        if score > best_score:
            best_w, best_score = w, score
    return LinearMap(matrix=best_w, orthogonal=True, provenance="iterative")


def muve_align(
    adapt: np.ndarray | LinearMap,
    emb_x: EmbeddingMatrix,
    emb_y: EmbeddingMatrix,
    refine_iters: int = DEFAULT_REFINE_ITERS,
    csls_k: int = DEFAULT_CSLS_K,
    limit: int = DEFAULT_INDUCTION_LIMIT,
    normalize: bool = True,
) -> LinearMap:
    """Refinement pipeline seeded by a trained adapt layer.

    The adapt weights (which send Y word vectors into X space as v @ W^T
    during grounding) are orthogonalized, at which point the same matrix is
    the X -> Y row mapping. Refinement then alternates CSLS-argmax induction
    over the ``limit`` most frequent words with Procrustes; retrieval
    downstream should use CSLS.
    """
    seed_raw = adapt.matrix if isinstance(adapt, LinearMap) else np.asarray(adapt)
    if seed_raw.shape != (emb_x.dim, emb_x.dim) or emb_x.dim != emb_y.dim:
        raise DimensionMismatchError(
            f"adapt shape {seed_raw.shape} incompatible with embedding dims "
            f"{emb_x.dim}/{emb_y.dim}"
        )
    w = orthogonalize(seed_raw)
    if refine_iters > 0:
        xm = preprocess_embeddings(emb_x.vectors, normalize)
        ym = preprocess_embeddings(emb_y.vectors, normalize)
        w = _refine(w, xm, ym, refine_iters, "csls_topk", limit, csls_k)
    return LinearMap(matrix=w, orthogonal=True, provenance="muve")


def translate_with_map(
    emb_x: EmbeddingMatrix,
    emb_y: EmbeddingMatrix,
    linmap: LinearMap,
    words: list[str],
    k: int = 10,
    metric: str = "csls",
    csls_k: int = DEFAULT_CSLS_K,
    normalize: bool = True,
) -> dict[str, list[tuple[str, float]]]:
    """Ranked target candidates for each in-vocabulary query word.

    ``normalize`` must match the preprocessing the map was fitted with.
    CSLS hubness terms are computed against the full mapped source
    vocabulary. Out-of-vocabulary queries are skipped.
    """
    if metric not in ("cosine", "csls"):
        raise ValueError(f"unknown metric {metric!r}")
    xm = preprocess_embeddings(emb_x.vectors, normalize) @ linmap.matrix
    ym = preprocess_embeddings(emb_y.vectors, normalize)
    ids = [emb_x.vocab.id_of(w) for w in words if w in emb_x.vocab]
    kept = [w for w in words if w in emb_x.vocab]
    if not kept:
        return {}
    if metric == "cosine":
        scores = _cosine_matrix(xm[ids], ym)
    else:
        k_eff = min(csls_k, ym.shape[0], xm.shape[0])
        cos_q = _cosine_matrix(xm[ids], ym)
        r_x = np.sort(cos_q, axis=1)[:, -k_eff:].mean(axis=1)
        cos_all = _cosine_matrix(xm, ym)
        r_y = np.sort(cos_all, axis=0)[-k_eff:, :].mean(axis=0)
        scores = 2.0 * cos_q - r_x[:, None] - r_y[None, :]
    out = {}
    top = min(k, emb_y.vocab.size)
    for row, word in zip(scores, kept):
        order = np.argsort(-row, kind="stable")[:top]
        out[word] = [(emb_y.vocab.tokens[j], float(row[j])) for j in order]
    return out


def save_linear_map(linmap: LinearMap, directory, normalize: bool = True) -> None:
    write_tensors(
        directory,
        {"matrix": linmap.matrix},
        meta={
            "kind": "linear_map",
            "orthogonal": linmap.orthogonal,
            "provenance": linmap.provenance,
            "normalized_inputs": normalize,
        },
    )


def load_linear_map(directory) -> tuple[LinearMap, bool]:
    """Returns (map, normalized_inputs flag recorded at save time)."""
    directory = Path(directory)
    tensors, meta = read_tensors(directory)
    if meta.get("kind") != "linear_map":
        raise ValueError(f"{directory} does not hold a linear map")
    lin = LinearMap(
        matrix=tensors["matrix"],
        orthogonal=bool(meta.get("orthogonal", False)),
        provenance=str(meta.get("provenance", "random")),
    )
    return lin, bool(meta.get("normalized_inputs", True))
