"""Inter-rater agreement for binary annotations: raw agreement and Gwet's AC1.

AC1 is the chance-corrected coefficient that stays stable under skewed label
distributions, which is exactly the regime of benchmark quality annotations
(most items are judged positive). Observed agreement Pa is the mean over items
of the fraction of agreeing rater pairs; chance agreement uses Gwet's form
Pe = 2 * pi * (1 - pi) with pi the mean prevalence of the positive label.
"""

from __future__ import annotations

from typing import Sequence

from .errors import AgreementUndefinedError


def _validate(annotations: Sequence[Sequence[int]]) -> None:
    if len(annotations) < 2:
        raise ValueError("need at least 2 raters")
    n_items = len(annotations[0])
    if n_items < 1:
        raise ValueError("need at least 1 item")
    for row in annotations:
        if len(row) != n_items:
            raise ValueError("all raters must label the same items")
        for label in row:
            if label not in (0, 1):
                raise ValueError(f"labels must be binary 0/1, got {label!r}")


def _observed_agreement(annotations: Sequence[Sequence[int]]) -> float:
    n_raters = len(annotations)
    n_items = len(annotations[0])
    pair_count = n_raters * (n_raters - 1)
    total = 0.0
    for item in range(n_items):
        positives = sum(annotations[rater][item] for rater in range(n_raters))
        negatives = n_raters - positives
        agreeing = positives * (positives - 1) + negatives * (negatives - 1)
        total += agreeing / pair_count
    return total / n_items


def raw_agreement(annotations: Sequence[Sequence[int]]) -> float:
    """Mean pairwise percent agreement over items."""
    _validate(annotations)
    return _observed_agreement(annotations)


def gwet_ac1(annotations: Sequence[Sequence[int]]) -> float:
    """Gwet's AC1 for binary categories: (Pa - Pe) / (1 - Pe)."""
    _validate(annotations)
    pa = _observed_agreement(annotations)
    n_raters = len(annotations)
    n_items = len(annotations[0])
    prevalence = sum(sum(row) for row in annotations) / (n_raters * n_items)
    pe = 2.0 * prevalence * (1.0 - prevalence)
    if 1.0 - pe == 0.0:
        raise AgreementUndefinedError("chance agreement equals 1, coefficient undefined")
    return (pa - pe) / (1.0 - pe)


def annotation_agreement(annotations: Sequence[Sequence[int]]) -> tuple[float, float]:
    """(raw agreement, Gwet's AC1) of a raters x items binary matrix."""
    return raw_agreement(annotations), gwet_ac1(annotations)
