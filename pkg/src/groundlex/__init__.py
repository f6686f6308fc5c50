"""groundlex: unsupervised word translation by grounding two languages in a
shared feature space.

The library learns a joint embedding over captions and precomputed clip
features for two languages at once (sharing the feature encoder), reads a
cross-lingual word mapping out of the trained adapt layer, and refines it
with closed-form Procrustes and CSLS retrieval. Baselines, evaluation
metrics, and a synthetic grounded-world generator support desk-scale
verification end to end.
"""

from . import alignment, baselines, clips, corpus, embeddings, evaluation, grounding, synthworld

__version__ = "0.1.0"

__all__ = [
    "alignment",
    "baselines",
    "clips",
    "corpus",
    "embeddings",
    "evaluation",
    "grounding",
    "synthworld",
    "__version__",
]
