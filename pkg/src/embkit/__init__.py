"""embkit: train word embeddings and evaluate them end to end.

Four training algorithms (SGNS, CBOW, GloVe, subword SkipGram), an embedding
store with text/binary formats and OOV composition, and three evaluation
tasks: word analogies, tf-idf document classification, and neural
morphological tagging.
"""

__version__ = "0.1.0"

from embkit.store import EmbeddingStore, cosine, load_store
from embkit.train import TrainConfig
from embkit.vocab import SubwordIndexer, Vocabulary, build_vocab

__all__ = [
    "EmbeddingStore",
    "SubwordIndexer",
    "TrainConfig",
    "Vocabulary",
    "build_vocab",
    "cosine",
    "load_store",
    "__version__",
]
