"""Domain enrichment of general-purpose word embeddings.

A large general embedding (e.g. trained on Tweets) is mapped into the space of
a small domain embedding with a one-hidden-layer ReLU regressor, so that every
general-vocabulary word, including words the domain corpus never saw, receives
a domain-flavoured vector. The package also ships the evaluation harness used
to compare feature representations on short-text binary classification.
"""

from embaug.embedding import Embedding, common_vocab, load_word2vec_text, save_word2vec_text

__version__ = "0.1.0"

__all__ = [
    "Embedding",
    "common_vocab",
    "load_word2vec_text",
    "save_word2vec_text",
    "__version__",
]
