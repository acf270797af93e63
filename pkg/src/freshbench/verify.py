"""Re-checks every machine-assertable invariant of an emitted benchmark.

Checks cover the record schema, the contamination guard (update after the
window cutoff, every context revision at or after the update), distractor
purity (no subject/object alias inside any distractor passage), multi-choice
option integrity, interval consistency, and manifest honesty (stated counts
equal independent recounts). All violations are collected, not just the first.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .dates import FuzzyDate
from .samples import (
    BENCHMARK_FILE,
    MANIFEST_FILE,
    OPTION_CORRECT,
    OPTION_NOISE,
    OPTION_OUTDATED,
    OPTION_UNKNOWN,
    TASK_MULTI_HOP,
    TASK_SINGLE_HOP,
    UNKNOWN_TEXT,
    context_passages,
)
from .textmatch import contains_any, fold
from .wiki import parse_api_timestamp

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = (
    "id",
    "task",
    "language",
    "hops",
    "question",
    "answer",
    "subject",
    "pid",
    "object",
    "context",
    "passages",
    "gold_positions",
    "n_distractors",
    "update_time",
)


@dataclass(frozen=True)
class Violation:
    where: str
    check: str
    detail: str

    def __str__(self) -> str:
        return f"{self.where}: [{self.check}] {self.detail}"


def verify_benchmark(output_dir: Path | str) -> list[Violation]:
    """All invariant violations of benchmark.jsonl + manifest.json under a directory."""
    output_dir = Path(output_dir)
    violations: list[Violation] = []
    benchmark_path = output_dir / BENCHMARK_FILE
    manifest_path = output_dir / MANIFEST_FILE
    if not benchmark_path.exists():
        return [Violation("benchmark", "files", f"missing {benchmark_path}")]
    manifest = {}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    else:
        violations.append(Violation("manifest", "files", f"missing {manifest_path}"))

    cutoff = None
    window = manifest.get("window") or {}
    if window.get("cutoff"):
        cutoff = FuzzyDate.parse(window["cutoff"])

    recounts: dict[str, dict[str, int]] = {}
    n_records = 0
    with benchmark_path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                violations.append(Violation(f"line {line_no}", "schema", f"bad JSON: {exc}"))
                continue
            n_records += 1
            violations.extend(_check_record(record, cutoff, line_no))
            per_task = recounts.setdefault(record.get("task", "?"), {})
            key = str(record.get("n_distractors", "?"))
            per_task[key] = per_task.get(key, 0) + 1

    stated = manifest.get("counts", {})
    if manifest and stated != recounts:
        violations.append(
            Violation("manifest", "counts", f"stated {stated} but recounted {recounts}")
        )
    if manifest and manifest.get("total") != n_records:
        violations.append(
            Violation("manifest", "counts", f"stated total {manifest.get('total')} != {n_records}")
        )
    return violations


def _check_record(record: dict, cutoff: FuzzyDate | None, line_no: int) -> list[Violation]:
    where = record.get("id", f"line {line_no}")
    out: list[Violation] = []
    for field_name in REQUIRED_FIELDS:
        if record.get(field_name) in (None, [], ""):
            out.append(Violation(where, "schema", f"missing field {field_name}"))
    if out:
        return out  # structural problems make the remaining checks meaningless

    task = record["task"]
    if task not in (TASK_SINGLE_HOP, TASK_MULTI_HOP):
        out.append(Violation(where, "schema", f"unknown task {task}"))
        return out

    passages = record["passages"]
    texts = context_passages(record["context"])
    if len(texts) != len(passages):
        out.append(Violation(where, "schema", "context and passage metadata misaligned"))
        return out

    gold_positions = set(record["gold_positions"])
    expected_gold = 1 if task == TASK_SINGLE_HOP else record["hops"]
    if len(gold_positions) != expected_gold:
        out.append(
            Violation(where, "schema", f"{task} needs {expected_gold} gold passages, "
                                       f"got {len(gold_positions)}")
        )
    if len(gold_positions) + record["n_distractors"] != len(texts):
        out.append(Violation(where, "schema", "gold + distractors do not cover the context"))
    if task == TASK_SINGLE_HOP and not record.get("object_old"):
        out.append(Violation(where, "schema", "single-hop record lacks object_old"))

    try:
        update_time = FuzzyDate.parse(record["update_time"])
    except ValueError as exc:
        out.append(Violation(where, "schema", f"bad update_time: {exc}"))
        return out

    # Contamination guard: the update postdates the cutoff and every passage
    # revision postdates the update.
    if cutoff is not None and update_time.earliest() < cutoff.earliest():
        out.append(
            Violation(where, "contamination", f"update_time {record['update_time']} "
                                              f"precedes cutoff {cutoff.isoformat()}")
        )
    update_instant = update_time.earliest_instant()
    for i, passage in enumerate(passages):
        stamp = parse_api_timestamp(passage["timestamp"])
        if stamp < update_instant:
            out.append(
                Violation(where, "contamination", f"passage {i} revised {passage['timestamp']}, "
                                                  f"before update {record['update_time']}")
            )
        if passage["gold"] != (i in gold_positions):
            out.append(Violation(where, "schema", f"passage {i} gold flag disagrees "
                                                  f"with gold_positions"))

    # Distractor purity: no subject/object alias inside any distractor passage.
    banned = list(record["subject"]) + list(record["object"])
    for i, text in enumerate(texts):
        if i in gold_positions:
            continue
        if contains_any(text, banned):
            out.append(
                Violation(where, "distractor-purity", f"passage {i} names the subject or object")
            )

    interval = record.get("interval")
    if interval:
        begin = FuzzyDate.parse(interval["begin"])
        end = FuzzyDate.parse(interval["end"])
        if not begin.earliest() <= update_time.earliest() < end.earliest():
            out.append(
                Violation(where, "interval", f"update_time {record['update_time']} outside "
                                             f"interval {interval['begin']}..{interval['end']}")
            )

    out.extend(_check_options(record, where))
    return out


def _check_options(record: dict, where: str) -> list[Violation]:
    options = record.get("options")
    kinds = record.get("option_kinds")
    label = record.get("answer_multichoice")
    if options is None and kinds is None and label is None:
        return []
    out: list[Violation] = []
    if not options or not kinds or len(options) != 4 or len(kinds) != 4 or label not in "ABCD":
        return [Violation(where, "options", "multi-choice fields malformed")]
    if kinds.count(OPTION_CORRECT) != 1:
        out.append(Violation(where, "options", "need exactly one correct option"))
    if kinds.count(OPTION_UNKNOWN) != 1:
        out.append(Violation(where, "options", "need exactly one unknown option"))
    else:
        unknown_at = kinds.index(OPTION_UNKNOWN)
        if options[unknown_at] != UNKNOWN_TEXT:
            out.append(Violation(where, "options", f"unknown option text must be {UNKNOWN_TEXT!r}"))
    expected = (
        {OPTION_OUTDATED: 1, OPTION_NOISE: 1}
        if record["task"] == TASK_SINGLE_HOP
        else {OPTION_OUTDATED: 0, OPTION_NOISE: 2}
    )
    for kind, count in expected.items():
        if kinds.count(kind) != count:
            out.append(Violation(where, "options", f"{record['task']} needs {count} {kind} "
                                                   f"options, got {kinds.count(kind)}"))
    folded = [fold(o) for o in options]
    if len(set(folded)) != 4:
        out.append(Violation(where, "options", "options not pairwise distinct"))
    answer_folds = {fold(a) for a in record["answer"]}
    mapped = sum(1 for f in folded if f in answer_folds)
    if mapped != 1:
        out.append(Violation(where, "options", f"{mapped} options map to the answer set, "
                                               f"expected exactly 1"))
    if kinds[ord(label) - ord("A")] != OPTION_CORRECT:
        out.append(Violation(where, "options", "answer_multichoice does not point at "
                                               "the correct option"))
    if record["task"] == TASK_SINGLE_HOP and record.get("object_old"):
        outdated_at = kinds.index(OPTION_OUTDATED) if OPTION_OUTDATED in kinds else None
        if outdated_at is not None and fold(options[outdated_at]) != fold(record["object_old"][0]):
            out.append(Violation(where, "options", "outdated option is not the old object"))
    return out
