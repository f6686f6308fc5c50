"""Exact reverse-mode gradients for the grounding model.

The architecture is small and fixed, so the backward pass is written by
hand against the caches produced by the forward functions. Conventions:

* max-pool routes its gradient to the first maximal non-pad position
  (matching np.argmax in the forward);
* ReLU uses subgradient 0 at exactly 0;
* the L2-normalization backward is dq = (dout - (out . dout) out) / ||q||.
"""

from __future__ import annotations

import numpy as np

from .model import Batch, GroundingModel, feature_forward, ortho_penalty, text_forward


def zero_gradients(model: GroundingModel) -> dict:
    return {name: np.zeros_like(arr) for name, arr in model.params.items()}


def _nce_backward(t: np.ndarray, c: np.ndarray):
    """Loss value and gradients w.r.t. the unit text/clip embedding rows."""
    b = t.shape[0]
    if b < 2:
        raise ValueError(f"in-batch negatives need batch size >= 2, got {b}")
    scores = t @ c.T
    row_max = scores.max(axis=1, keepdims=True)
    exp = np.exp(scores - row_max)
    softmax = exp / exp.sum(axis=1, keepdims=True)
    lse = row_max[:, 0] + np.log(exp.sum(axis=1))
    loss = float(np.mean(lse - np.diag(scores)))
    d_scores = (softmax - np.eye(b)) / b
    return loss, d_scores @ c, d_scores.T @ t


def _normalize_backward(d_out: np.ndarray, out: np.ndarray, norms: np.ndarray) -> np.ndarray:
    return (d_out - out * np.sum(out * d_out, axis=1, keepdims=True)) / norms[:, None]


def _text_backward(model: GroundingModel, cache: dict, d_out: np.ndarray, grads: dict) -> None:
    p = model.params
    d_q = _normalize_backward(d_out, cache["out"], cache["norms"])
    grads["out_w"] += cache["pooled"].T @ d_q
    grads["out_b"] += d_q.sum(axis=0)
    d_pooled = d_q @ p["out_w"].T                                  # (B, di)

    d_h = np.zeros_like(cache["z"])                                # (B, L, di)
    np.put_along_axis(d_h, cache["pool_idx"][:, None, :], d_pooled[:, None, :], axis=1)
    d_z = d_h * (cache["z"] > 0)

    dw = model.dims.word_dim
    u_flat = cache["u"].reshape(-1, dw)
    d_z_flat = d_z.reshape(-1, d_z.shape[-1])
    grads["ff_w"] += u_flat.T @ d_z_flat
    grads["ff_b"] += d_z_flat.sum(axis=0)
    d_u = d_z @ p["ff_w"].T                                        # (B, L, dw)

    if cache["lang"] == "y":
        e_flat = cache["e"].reshape(-1, dw)
        grads["adapt"] += d_u.reshape(-1, dw).T @ e_flat
        d_e = d_u @ p["adapt"]
        emb_name = "emb_y"
    else:
        d_e = d_u
        emb_name = "emb_x"
    np.add.at(grads[emb_name], cache["ids"].reshape(-1), d_e.reshape(-1, dw))


def _feature_backward(model: GroundingModel, cache: dict, d_out: np.ndarray, grads: dict) -> None:
    d_q = _normalize_backward(d_out, cache["out"], cache["norms"])
    grads["feat_w"] += cache["features"].T @ d_q
    grads["feat_b"] += d_q.sum(axis=0)


def ortho_penalty_gradient(w: np.ndarray) -> np.ndarray:
    """d/dW of ||W W^T - I||_F^2, which is 4 (W W^T - I) W."""
    return 4.0 * (w @ w.T - np.eye(w.shape[0])) @ w


def language_gradients(
    model: GroundingModel,
    batch: Batch,
    lang: str,
    ortho_weight: float = 0.0,
    freeze_word_embeddings: bool = False,
    grads: dict | None = None,
) -> tuple[float, dict]:
    """Loss and exact gradients of one language's contrastive term plus the
    weighted orthogonality penalty. Gradients accumulate into ``grads`` when
    given (other parameters stay zero)."""
    if grads is None:
        grads = zero_gradients(model)
    t, t_cache = text_forward(model, batch.ids, batch.lengths, lang, cache=True)
    c, c_cache = feature_forward(model, batch.features, cache=True)
    loss, d_t, d_c = _nce_backward(t, c)
    _text_backward(model, t_cache, d_t, grads)
    _feature_backward(model, c_cache, d_c, grads)
    if ortho_weight != 0.0:
        loss += ortho_weight * ortho_penalty(model.params["adapt"])
        grads["adapt"] += ortho_weight * ortho_penalty_gradient(model.params["adapt"])
    if freeze_word_embeddings:
        grads["emb_x"][:] = 0.0
        grads["emb_y"][:] = 0.0
    return loss, grads


def joint_gradients(
    model: GroundingModel,
    batch_x: Batch,
    batch_y: Batch,
    ortho_weight: float,
    freeze_word_embeddings: bool = False,
) -> tuple[float, dict]:
    """Loss and exact gradients of the full two-language objective."""
    grads = zero_gradients(model)
    loss_x, _ = language_gradients(model, batch_x, "x", 0.0, False, grads)
    loss_y, _ = language_gradients(model, batch_y, "y", 0.0, False, grads)
    loss = loss_x + loss_y
    if ortho_weight != 0.0:
        loss += ortho_weight * ortho_penalty(model.params["adapt"])
        grads["adapt"] += ortho_weight * ortho_penalty_gradient(model.params["adapt"])
    if freeze_word_embeddings:
        grads["emb_x"][:] = 0.0
        grads["emb_y"][:] = 0.0
    return loss, grads
