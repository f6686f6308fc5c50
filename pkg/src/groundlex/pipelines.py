"""End-to-end experiment pipelines over synthetic worlds.

One pipeline run generates a world, trains monolingual skip-gram embeddings
and the grounding model, and evaluates every translation method against the
world's ground-truth dictionary: closed-form chance, the video-retrieval
baseline, direct grounding-model retrieval, self-learning iterative
Procrustes, the adapt-layer-seeded refinement, and the supervised upper
bound. Evaluation follows the seen-in-both-vocabularies rule: dictionary
entries whose accepted targets all fall outside the target vocabulary are
dropped, and queries outside the prediction vocabulary count toward
coverage but not recall.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .alignment import (
    iterative_procrustes,
    muve_align,
    supervised_align,
    translate_with_map,
)
from .baselines import JointProbTranslator, build_pseudo_parallel, random_chance_recall
from .clips import encode_clips
from .corpus import DEFAULT_SENTENCE_LENGTH, Vocabulary, build_vocabulary
from .embeddings import EmbeddingMatrix, SkipGramConfig, train_skipgram
from .evaluation import BilingualDictionary, EvalReport, recall_at_n
from .grounding import (
    GroundingModel,
    GroundTrainConfig,
    ModelDims,
    train,
    translate_words,
)
from .synthworld import ConceptWorld, SynthConfig, corpus_sentences, generate_world, ground_truth_dictionary, sample_dataset


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for a full synthetic-world run, sized for minutes-scale CPU work."""

    synth: SynthConfig = SynthConfig()
    skipgram: SkipGramConfig = SkipGramConfig(
        dim=48, window=5, negatives=5, epochs=10, learning_rate=0.025
    )
    ground: GroundTrainConfig = GroundTrainConfig(
        batch_size=128,
        learning_rate=1e-3,
        steps=2000,
        ortho_weight=1.0,
        freeze_word_embeddings=True,
        validation_fraction=0.1,
        eval_every=100,
    )
    hidden_dim: int = 128
    joint_dim: int = 64
    refine_iters: int = 5
    csls_k: int = 10
    induction_limit: int = 10000
    ip_restarts: int = 25
    ip_iters: int = 15
    retrieval_k: int = 10
    video_retrieval_k: int = 3
    sentence_length: int = DEFAULT_SENTENCE_LENGTH


@dataclass
class WorldData:
    """Everything derivable from a world before any bilingual method runs."""

    config: PipelineConfig
    world: ConceptWorld
    clips_x: list
    clips_y: list
    vocab_x: Vocabulary
    vocab_y: Vocabulary
    emb_x: EmbeddingMatrix
    emb_y: EmbeddingMatrix
    gt: BilingualDictionary


def prepare_world(
    config: PipelineConfig,
    seed: int,
    data_fraction_y: float = 1.0,
    vocab_fraction_y: float = 1.0,
) -> WorldData:
    """Generate a world and train the monolingual pieces.

    ``data_fraction_y`` keeps a prefix of the Y clip collection (affecting
    both the Y text corpus and grounding training); ``vocab_fraction_y``
    truncates the Y vocabulary to its most frequent fraction. Both mimic
    low-resource target languages.
    """
    synth = replace(config.synth, seed=seed)
    world = generate_world(synth)
    clips_x = sample_dataset(world, "x", synth.clips_per_language)
    clips_y = sample_dataset(world, "y", synth.clips_per_language)
    if data_fraction_y < 1.0:
        keep = max(2, int(round(len(clips_y) * data_fraction_y)))
        clips_y = clips_y[:keep]

    sentences_x = corpus_sentences(clips_x)
    sentences_y = corpus_sentences(clips_y)
    vocab_x = build_vocabulary(sentences_x)
    vocab_y = build_vocabulary(sentences_y)
    if vocab_fraction_y < 1.0:
        keep = max(1, int(round(vocab_y.size * vocab_fraction_y)))
        vocab_y = build_vocabulary(sentences_y, max_size=keep)

    sg = replace(config.skipgram, seed=seed)
    emb_x = train_skipgram(sentences_x, vocab_x, sg)
    emb_y = train_skipgram(sentences_y, vocab_y, replace(sg, seed=seed + 1))

    clips_x = encode_clips(clips_x, vocab_x, config.sentence_length)
    clips_y = encode_clips(clips_y, vocab_y, config.sentence_length)
    return WorldData(
        config=config,
        world=world,
        clips_x=clips_x,
        clips_y=clips_y,
        vocab_x=vocab_x,
        vocab_y=vocab_y,
        emb_x=emb_x,
        emb_y=emb_y,
        gt=ground_truth_dictionary(world),
    )


def train_grounding(data: WorldData, seed: int, ortho_weight: float | None = None) -> GroundingModel:
    cfg = data.config
    ground_cfg = replace(cfg.ground, seed=seed)
    if ortho_weight is not None:
        ground_cfg = replace(ground_cfg, ortho_weight=ortho_weight)
    dims = ModelDims(
        word_dim=cfg.skipgram.dim,
        hidden_dim=cfg.hidden_dim,
        joint_dim=cfg.joint_dim,
        feature_dim=cfg.synth.feature_dim,
    )
    model = GroundingModel.create(
        data.vocab_x, data.vocab_y, dims, seed=seed,
        init_emb_x=data.emb_x, init_emb_y=data.emb_y,
    )
    return train(model, data.clips_x, data.clips_y, ground_cfg).model


def evaluable_dictionary(data: WorldData) -> BilingualDictionary:
    """Ground truth restricted to targets present in the Y vocabulary."""
    return data.gt.restrict(target_vocab=data.vocab_y)


def evaluate_predictions(data: WorldData, predictions: dict, n: int = 1) -> EvalReport:
    return recall_at_n(predictions, evaluable_dictionary(data), n)


def chance_recall(data: WorldData, n: int = 1) -> float:
    gt = evaluable_dictionary(data)
    if not gt.entries:
        return 0.0
    return random_chance_recall(gt, data.vocab_y.size, n=n).expectation


def video_retrieval_predictions(data: WorldData) -> dict:
    """Joint-probability translations over the feature-matched pseudo
    corpus. In-vocabulary queries with no observed pairing get an empty
    ranking (a miss, not an exclusion)."""
    corpus = build_pseudo_parallel(data.clips_x, data.clips_y, k=data.config.video_retrieval_k)
    translator = JointProbTranslator(corpus, data.vocab_x, data.vocab_y)
    preds: dict = {}
    for word in evaluable_dictionary(data).entries:
        if word in data.vocab_x:
            ranked = translator.translate(word, k=data.config.retrieval_k)
            preds[word] = ranked if ranked is not None else []
    return preds


def base_model_predictions(data: WorldData, model: GroundingModel) -> dict:
    words = [w for w in evaluable_dictionary(data).entries]
    return translate_words(model, words, k=data.config.retrieval_k)


def muve_predictions(data: WorldData, model: GroundingModel) -> dict:
    lin = muve_align(
        model.params["adapt"],
        data.emb_x,
        data.emb_y,
        refine_iters=data.config.refine_iters,
        csls_k=data.config.csls_k,
        limit=data.config.induction_limit,
    )
    words = list(evaluable_dictionary(data).entries)
    return translate_with_map(
        data.emb_x, data.emb_y, lin, words,
        k=data.config.retrieval_k, metric="csls", csls_k=data.config.csls_k,
    )


def iterative_predictions(data: WorldData, seed: int = 0) -> dict:
    lin = iterative_procrustes(
        data.emb_x,
        data.emb_y,
        restarts=data.config.ip_restarts,
        iters=data.config.ip_iters,
        limit=data.config.induction_limit,
        csls_k=data.config.csls_k,
        seed=seed,
    )
    words = list(evaluable_dictionary(data).entries)
    return translate_with_map(
        data.emb_x, data.emb_y, lin, words,
        k=data.config.retrieval_k, metric="csls", csls_k=data.config.csls_k,
    )


def supervised_predictions(data: WorldData, train_pairs: list[tuple[str, str]]) -> dict:
    lin, _ = supervised_align(data.emb_x, data.emb_y, train_pairs)
    words = list(evaluable_dictionary(data).entries)
    return translate_with_map(
        data.emb_x, data.emb_y, lin, words,
        k=data.config.retrieval_k, metric="csls", csls_k=data.config.csls_k,
    )


@dataclass
class MethodRecalls:
    """Recall@1 (percent) per method for one world."""

    chance: float
    video_retrieval: float
    base_model: float
    muve: float
    iterative: float | None = None
    extras: dict = field(default_factory=dict)


def run_method_comparison(
    config: PipelineConfig,
    seed: int,
    include_iterative: bool = False,
    n: int = 1,
) -> MethodRecalls:
    """Full single-world comparison at Recall@n, reported in percent."""
    data = prepare_world(config, seed)
    model = train_grounding(data, seed)
    as_pct = lambda r: 100.0 * r
    result = MethodRecalls(
        chance=as_pct(chance_recall(data, n)),
        video_retrieval=as_pct(evaluate_predictions(data, video_retrieval_predictions(data), n).recall),
        base_model=as_pct(evaluate_predictions(data, base_model_predictions(data, model), n).recall),
        muve=as_pct(evaluate_predictions(data, muve_predictions(data, model), n).recall),
    )
    if include_iterative:
        result.iterative = as_pct(
            evaluate_predictions(data, iterative_predictions(data, seed), n).recall
        )
    return result
