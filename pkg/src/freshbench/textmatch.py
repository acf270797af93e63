"""Name containment checks: case-insensitive, accent-folded, word-boundary matched.

Used wherever a document must (or must not) mention an entity by any of its
names: summary verification, distractor purity filtering, and benchmark
verification. This folding is deliberately separate from answer-scoring
normalization, which follows the QA-metric convention instead.
"""

from __future__ import annotations

import re
import unicodedata
from functools import lru_cache
from typing import Iterable


@lru_cache(maxsize=8192)
def fold(text: str) -> str:
    """Casefold, strip diacritics, and collapse whitespace."""
    decomposed = unicodedata.normalize("NFKD", text)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return re.sub(r"\s+", " ", stripped.casefold()).strip()


@lru_cache(maxsize=8192)
def _name_pattern(folded_name: str) -> re.Pattern:
    # Lookarounds instead of \b so names ending in punctuation ("F.C.") still anchor.
    return re.compile(r"(?<!\w)" + re.escape(folded_name) + r"(?!\w)")


def contains_name(text: str, name: str) -> bool:
    """True iff ``name`` occurs in ``text`` as a whole word sequence."""
    folded_name = fold(name)
    if not folded_name:
        return False
    return bool(_name_pattern(folded_name).search(fold(text)))


def contains_any(text: str, names: Iterable[str]) -> bool:
    folded_text = fold(text)
    for name in names:
        folded_name = fold(name)
        if folded_name and _name_pattern(folded_name).search(folded_text):
            return True
    return False
