"""Synthetic grounded bilingual worlds with known ground truth.

A world has M latent concepts. Each concept owns a feature prototype on the
unit sphere (what clips of it look like), a position in a low-dimensional
semantic space shared by both languages (what it tends to co-occur with),
and one content word per language. Clips draw an anchor concept from the
language's topic distribution and companion concepts from the anchor's
semantic neighborhood, so both languages exhibit the same word
co-occurrence geometry; captions mix the concept words with high-frequency
function words. Relevance noise replaces a caption with one about an
unrelated concept set while the features keep describing the original
concepts, mimicking narration that wanders off-topic.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .clips import NarratedClip, save_clip_dataset
from .corpus import tokenize
from .evaluation import BilingualDictionary


@dataclass(frozen=True)
class SynthConfig:
    concepts: int = 100
    function_words: int = 12
    feature_dim: int = 64
    clips_per_language: int = 5000
    concepts_per_clip: int = 3
    feature_noise_sigma: float = 0.1
    # Half of real instructional narration is unrelated to what is on
    # screen; 0.5 reproduces that regime.
    relevance_prob: float = 0.5
    topic_divergence: float = 0.25
    zipf_exponent: float = 1.0
    affinity_bandwidth: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.concepts < 2:
            raise ValueError("a world needs at least 2 concepts")
        if not 0.0 <= self.relevance_prob <= 1.0:
            raise ValueError("relevance_prob must lie in [0, 1]")
        if not 0.0 <= self.topic_divergence <= 1.0:
            raise ValueError("topic_divergence must lie in [0, 1]")
        if self.concepts_per_clip < 1:
            raise ValueError("concepts_per_clip must be >= 1")


@dataclass(frozen=True)
class ConceptWorld:
    config: SynthConfig
    prototypes: np.ndarray          # (M, D_v) unit rows
    semantic_positions: np.ndarray  # (M, 2)
    affinity: np.ndarray            # (M, M) row-stochastic, zero diagonal
    topic_x: np.ndarray             # (M,)
    topic_y: np.ndarray             # (M,)
    content_x: tuple[str, ...]
    content_y: tuple[str, ...]
    function_x: tuple[str, ...]
    function_y: tuple[str, ...]


def _zipf(n: int, exponent: float) -> np.ndarray:
    w = np.arange(1, n + 1, dtype=np.float64) ** (-exponent)
    return w / w.sum()


def generate_world(config: SynthConfig) -> ConceptWorld:
    """Deterministic world for a given config (the seed lives in the config)."""
    rng = np.random.default_rng(config.seed)
    m = config.concepts

    protos = rng.standard_normal((m, config.feature_dim))
    protos /= np.linalg.norm(protos, axis=1, keepdims=True)
    gram = protos @ protos.T
    np.fill_diagonal(gram, -1.0)
    if gram.max() >= 1.0 - 1e-12:
        raise RuntimeError("degenerate prototype draw: duplicate concept features")

    sem = rng.standard_normal((m, 2))
    d2 = ((sem[:, None, :] - sem[None, :, :]) ** 2).sum(axis=2)
    aff = np.exp(-d2 / (2.0 * config.affinity_bandwidth**2))
    np.fill_diagonal(aff, 0.0)
    aff /= aff.sum(axis=1, keepdims=True)

    topic_x = _zipf(m, config.zipf_exponent)
    perm = rng.permutation(m)
    topic_y = (1.0 - config.topic_divergence) * topic_x + config.topic_divergence * topic_x[perm]
    topic_y = topic_y / topic_y.sum()

    width = max(3, len(str(m - 1)))
    content_x = tuple(f"x{i:0{width}d}" for i in range(m))
    content_y = tuple(f"y{i:0{width}d}" for i in range(m))
    function_x = tuple(f"fx{j:02d}" for j in range(config.function_words))
    function_y = tuple(f"fy{j:02d}" for j in range(config.function_words))

    return ConceptWorld(
        config=config,
        prototypes=protos,
        semantic_positions=sem,
        affinity=aff,
        topic_x=topic_x,
        topic_y=topic_y,
        content_x=content_x,
        content_y=content_y,
        function_x=function_x,
        function_y=function_y,
    )


def _draw_concepts(world: ConceptWorld, topic: np.ndarray, rng) -> list[int]:
    anchor = int(rng.choice(world.config.concepts, p=topic))
    concepts = [anchor]
    extra = world.config.concepts_per_clip - 1
    if extra > 0:
        concepts += [int(c) for c in rng.choice(world.config.concepts, size=extra,
                                                p=world.affinity[anchor])]
    return concepts


def sample_dataset(
    world: ConceptWorld,
    language: str,
    n_clips: int,
    seed: int | None = None,
) -> list[NarratedClip]:
    """Generate clips for one language.

    Features are the mean prototype of the clip's concepts plus Gaussian
    noise; with probability 1 - relevance_prob the caption's concept set is
    redrawn independently of the features. Deterministic: the default seed
    derives from the world seed and the language.
    """
    if language not in ("x", "y"):
        raise ValueError("language must be 'x' or 'y'")
    if n_clips < 1:
        raise ValueError("n_clips must be >= 1")
    cfg = world.config
    if seed is None:
        seed_seq = np.random.SeedSequence([cfg.seed, 7 if language == "x" else 11])
    else:
        seed_seq = np.random.SeedSequence(seed)
    rng = np.random.default_rng(seed_seq)

    topic = world.topic_x if language == "x" else world.topic_y
    content = world.content_x if language == "x" else world.content_y
    function = world.function_x if language == "x" else world.function_y
    func_probs = _zipf(len(function), 1.0) if function else None

    clips = []
    for i in range(n_clips):
        concepts = _draw_concepts(world, topic, rng)
        feats = world.prototypes[concepts].mean(axis=0)
        if cfg.feature_noise_sigma > 0:
            feats = feats + cfg.feature_noise_sigma * rng.standard_normal(cfg.feature_dim)
        caption_concepts = concepts
        if rng.random() >= cfg.relevance_prob:
            caption_concepts = _draw_concepts(world, topic, rng)
        tokens = [content[c] for c in caption_concepts]
        if func_probs is not None:
            # function words take up half the caption tokens
            picks = rng.choice(len(function), size=len(caption_concepts), p=func_probs)
            tokens += [function[j] for j in picks]
        order = rng.permutation(len(tokens))
        text = " ".join(tokens[j] for j in order)
        clips.append(NarratedClip(clip_id=f"{language}-{i:06d}", features=feats, text=text))
    return clips


def ground_truth_dictionary(world: ConceptWorld) -> BilingualDictionary:
    """One entry per concept, X content word -> its Y content word."""
    dic = BilingualDictionary()
    for wx, wy in zip(world.content_x, world.content_y):
        dic.add(wx, wy)
    return dic


def corpus_sentences(clips) -> list[list[str]]:
    """Tokenized captions of a clip dataset, for embedding training."""
    return [tokenize(c.text) for c in clips]


def write_world_files(world: ConceptWorld, directory, clips_x, clips_y) -> dict:
    """Emit clip JSON-lines, per-language caption corpora, the ground-truth
    dictionary, and a manifest recording the config. Returns file paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "clips_x": directory / "clips_x.jsonl",
        "clips_y": directory / "clips_y.jsonl",
        "corpus_x": directory / "corpus_x.txt",
        "corpus_y": directory / "corpus_y.txt",
        "dictionary": directory / "gt_dictionary.txt",
        "manifest": directory / "world.json",
    }
    save_clip_dataset(clips_x, paths["clips_x"])
    save_clip_dataset(clips_y, paths["clips_y"])
    for key, clips in (("corpus_x", clips_x), ("corpus_y", clips_y)):
        with open(paths[key], "w", encoding="utf-8") as fh:
            for c in clips:
                fh.write(c.text + "\n")
    from .evaluation import save_dictionary

    save_dictionary(ground_truth_dictionary(world), paths["dictionary"])
    with open(paths["manifest"], "w", encoding="utf-8") as fh:
        json.dump({"config": asdict(world.config)}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {k: str(v) for k, v in paths.items()}
