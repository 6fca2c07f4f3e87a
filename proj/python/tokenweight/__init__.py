"""Keyword-weighted cross-entropy for report generation models."""

from ._core import (
    Vocabulary,
    builtin_set,
    extract_labels,
    f1_macro,
    find_keyword_spans,
    generate_corpus,
    loss_and_grad,
    relative_gain,
    version,
    weights_for,
)

__all__ = [
    "Vocabulary",
    "builtin_set",
    "extract_labels",
    "f1_macro",
    "find_keyword_spans",
    "generate_corpus",
    "loss_and_grad",
    "relative_gain",
    "version",
    "weights_for",
]

__version__ = version()
