"""Adam training loop for the grounding model.

Steps strictly alternate languages (X on even steps, Y on odd); every batch
is single-language and the orthogonality penalty applies on every step. A
held-out fraction of each language's clips provides the validation
contrastive loss used for checkpoint selection, so no bilingual signal
leaks into model selection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import OverlappingClipsError
from .backprop import language_gradients, zero_gradients
from .model import Batch, GroundingModel, make_batch, nce_loss, feature_forward, text_forward


@dataclass(frozen=True)
class GroundTrainConfig:
    batch_size: int = 128
    learning_rate: float = 1e-3
    steps: int = 2000
    ortho_weight: float = 1.0
    freeze_word_embeddings: bool = False
    validation_fraction: float = 0.1
    seed: int = 0
    eval_every: int = 50
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 (in-batch negatives)")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in [0, 1)")
        if self.ortho_weight < 0:
            raise ValueError("ortho_weight must be >= 0")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")


@dataclass
class TrainResult:
    model: GroundingModel
    step_losses: np.ndarray          # (steps,) per-step training loss
    val_steps: list[int] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    best_step: int | None = None


class _Adam:
    def __init__(self, model: GroundingModel, config: GroundTrainConfig):
        self.cfg = config
        self.m = zero_gradients(model)
        self.v = zero_gradients(model)
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        cfg = self.cfg
        self.t += 1
        b1c = 1.0 - cfg.adam_beta1**self.t
        b2c = 1.0 - cfg.adam_beta2**self.t
        for name, g in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= cfg.adam_beta1
            m += (1.0 - cfg.adam_beta1) * g
            v *= cfg.adam_beta2
            v += (1.0 - cfg.adam_beta2) * g * g
            params[name] -= cfg.learning_rate * (m / b1c) / (np.sqrt(v / b2c) + cfg.adam_eps)


def _split_validation(n: int, fraction: float, rng) -> tuple[np.ndarray, np.ndarray]:
    order = rng.permutation(n)
    n_val = int(round(n * fraction))
    # keep at least 2 training clips so a batch is formable
    n_val = min(n_val, max(0, n - 2))
    return order[n_val:], order[:n_val]


def _validation_loss(model: GroundingModel, clips, idx, lang: str) -> float | None:
    if len(idx) < 2:
        return None
    batch = make_batch([clips[i] for i in idx])
    t = text_forward(model, batch.ids, batch.lengths, lang)
    c = feature_forward(model, batch.features)
    return nce_loss(t, c)


def train(
    model: GroundingModel,
    clips_x,
    clips_y,
    config: GroundTrainConfig = GroundTrainConfig(),
) -> TrainResult:
    """Train a copy of ``model`` on two unpaired clip collections.

    The input model is left untouched. Returns the checkpoint with the best
    mean validation loss when validation is possible, otherwise the final
    parameters. Deterministic for a fixed seed.
    """
    if not clips_x or not clips_y:
        raise ValueError("both clip datasets must be nonempty")
    ids_x = {c.clip_id for c in clips_x}
    ids_y = {c.clip_id for c in clips_y}
    shared = ids_x & ids_y
    if shared:
        raise OverlappingClipsError(
            f"clip collections must be disjoint (unpaired data); shared ids: "
            f"{sorted(shared)[:5]}{'...' if len(shared) > 5 else ''}"
        )

    model = model.copy()
    if config.steps == 0:
        return TrainResult(model=model, step_losses=np.zeros(0))

    rng = np.random.default_rng(config.seed)
    train_x, val_x = _split_validation(len(clips_x), config.validation_fraction, rng)
    train_y, val_y = _split_validation(len(clips_y), config.validation_fraction, rng)
    optimizer = _Adam(model, config)

    step_losses = np.zeros(config.steps)
    val_steps: list[int] = []
    val_losses: list[float] = []
    best: tuple[float, int, dict] | None = None

    for step in range(config.steps):
        lang, pool, clips = ("x", train_x, clips_x) if step % 2 == 0 else ("y", train_y, clips_y)
        bsz = min(config.batch_size, len(pool))
        take = rng.choice(pool, size=bsz, replace=False)
        batch = make_batch([clips[i] for i in take])
        loss, grads = language_gradients(
            model,
            batch,
            lang,
            ortho_weight=config.ortho_weight,
            freeze_word_embeddings=config.freeze_word_embeddings,
        )
        optimizer.step(model.params, grads)
        step_losses[step] = loss

        if (step + 1) % config.eval_every == 0 or step == config.steps - 1:
            lx = _validation_loss(model, clips_x, val_x, "x")
            ly = _validation_loss(model, clips_y, val_y, "y")
            parts = [v for v in (lx, ly) if v is not None]
            if parts:
                val = float(np.mean(parts))
                val_steps.append(step + 1)
                val_losses.append(val)
                if best is None or val < best[0]:
                    best = (val, step + 1, {k: v.copy() for k, v in model.params.items()})

    best_step = None
    if best is not None:
        best_step = best[1]
        model.params = best[2]
    return TrainResult(
        model=model,
        step_losses=step_losses,
        val_steps=val_steps,
        val_losses=val_losses,
        best_step=best_step,
    )
