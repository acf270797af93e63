"""Answer scoring: exact match and token F1 under the standard QA normalization,
plus option-letter parsing and multi-choice aggregation.

Normalization lowercases, strips punctuation, removes articles (for languages
configured with an article list), collapses whitespace, and tokenizes on
whitespace. EM and F1 are maximized over the acceptable answer aliases. When
both token lists are empty the score is their equality, so F1 >= EM always
holds; when exactly one side is empty the score is 0.
"""

from __future__ import annotations

import re
import string
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

ENGLISH_ARTICLES = ("a", "an", "the")
OPTION_LABELS = ("A", "B", "C", "D")

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)
_CHOICE_RE = re.compile(r"\b([ABCD])\b")


def normalize_answer(text: str, articles: Sequence[str] = ENGLISH_ARTICLES) -> list[str]:
    """Normalized token list of an answer string."""
    lowered = text.lower().translate(_PUNCT_TABLE)
    if articles:
        pattern = r"\b(" + "|".join(re.escape(a) for a in articles) + r")\b"
        lowered = re.sub(pattern, " ", lowered)
    return lowered.split()


def exact_match(
    raw_output: str, answers: Sequence[str], articles: Sequence[str] = ENGLISH_ARTICLES
) -> int:
    """1 iff the normalized output equals the normalization of any acceptable answer."""
    if not answers:
        raise ValueError("answers must be non-empty")
    prediction = normalize_answer(raw_output, articles)
    return int(any(prediction == normalize_answer(answer, articles) for answer in answers))


def _f1(pred_tokens: list[str], gold_tokens: list[str]) -> float:
    if not pred_tokens or not gold_tokens:
        return float(pred_tokens == gold_tokens)
    common = Counter(pred_tokens) & Counter(gold_tokens)
    num_same = sum(common.values())
    if num_same == 0:
        return 0.0
    precision = num_same / len(pred_tokens)
    recall = num_same / len(gold_tokens)
    return (2 * precision * recall) / (precision + recall)


def token_f1(
    raw_output: str, answers: Sequence[str], articles: Sequence[str] = ENGLISH_ARTICLES
) -> float:
    """Best token-overlap F1 of the output against any acceptable answer."""
    if not answers:
        raise ValueError("answers must be non-empty")
    prediction = normalize_answer(raw_output, articles)
    return max(_f1(prediction, normalize_answer(answer, articles)) for answer in answers)


def parse_choice(raw_output: str) -> str | None:
    """First standalone option letter in the output, or None.

    Tolerates the usual shapes: "A", "A.", "(A)", "Option A", "The answer is B".
    Lowercase letters never match; "a" is an article, not an answer.
    """
    match = _CHOICE_RE.search(raw_output or "")
    return match.group(1) if match else None


@dataclass(frozen=True)
class MultiChoiceScores:
    accuracy: float
    macro_f1: float
    kind_proportions: dict[str, float]
    total: int


def score_multichoice(
    predictions: Iterable[tuple[str | None, str]],
    option_kinds_by_label: Mapping[str, Mapping[str, str]] | None = None,
    sample_ids: Sequence[str] | None = None,
) -> MultiChoiceScores:
    """Aggregate parsed labels against correct labels.

    ``predictions`` yields (parsed_label_or_None, correct_label) pairs, aligned
    with ``sample_ids`` when option-kind proportions are wanted;
    ``option_kinds_by_label`` then maps sample id -> label -> option kind.

    Accuracy is the fraction of exact label matches. F1 is macro-averaged over
    the label classes observed in gold or predictions; unparsed outputs count
    against recall of their gold class and as their own selection kind.
    """
    pairs = list(predictions)
    if not pairs:
        return MultiChoiceScores(0.0, 0.0, {}, 0)
    correct = sum(1 for predicted, gold in pairs if predicted == gold)
    tp: Counter = Counter()
    fp: Counter = Counter()
    fn: Counter = Counter()
    for predicted, gold in pairs:
        if predicted == gold:
            tp[gold] += 1
        else:
            fn[gold] += 1
            if predicted is not None:
                fp[predicted] += 1
    observed = [
        label for label in OPTION_LABELS
        if tp[label] or fp[label] or fn[label]
    ]
    f1s = []
    for label in observed:
        denominator = 2 * tp[label] + fp[label] + fn[label]
        f1s.append(2 * tp[label] / denominator if denominator else 0.0)
    macro_f1 = sum(f1s) / len(f1s) if f1s else 0.0

    kinds: Counter = Counter()
    if option_kinds_by_label is not None and sample_ids is not None:
        for sample_id, (predicted, _) in zip(sample_ids, pairs):
            if predicted is None:
                kinds["unparsed"] += 1
            else:
                kinds[option_kinds_by_label[sample_id][predicted]] += 1
    proportions = {kind: count / len(pairs) for kind, count in sorted(kinds.items())}
    return MultiChoiceScores(
        accuracy=correct / len(pairs),
        macro_f1=macro_f1,
        kind_proportions=proportions,
        total=len(pairs),
    )
