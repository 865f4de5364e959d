"""Term folding shared by the store, the form miner and the result processor."""

from __future__ import annotations

import re

_SEPARATORS = re.compile(r"[\s_\-]+")


def fold(text: str) -> str:
    """Lowercase, turn ``_``/``-``/whitespace runs into single spaces, trim."""
    return _SEPARATORS.sub(" ", text.lower()).strip()


def fold_value(text: str) -> str:
    """Lowercase and collapse whitespace; values keep their punctuation."""
    return " ".join(text.lower().split())


def normalize(term: str) -> str:
    """Fold a schema term and strip a naive plural ``s``.

    >>> normalize("Book_Title ")
    'book title'
    >>> normalize("Authors")
    'author'
    >>> normalize("as")
    'as'
    """
    folded = fold(term)
    if folded.endswith("s") and len(folded) - 1 >= 3:
        return folded[:-1]
    return folded
