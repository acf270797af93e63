"""Detect knowledge updates: per-key claim timelines diffed across a cutoff window.

Claims are grouped by (subject, relation), sorted chronologically by start
time, and scanned for the earliest in-window claim whose object differs from
its immediate predecessor's object. The immediate-predecessor comparison is
what excludes reverts: a value returning to an earlier state only counts when
it differs from the value it directly displaces, and each key emits at most
one update per window.

"After the cutoff" means earliest-instant(start) >= earliest-instant(cutoff),
so a month-precision start counts as after a cutoff equal to that month's
first day. Candidates whose start instant ties with a neighboring claim of a
different object are skipped (ambiguous ordering) and the scan continues, so
widening the window never removes a previously detected update.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .dates import FuzzyDate, add_months
from .store import Claim, ClaimStore, canonical_json, id_sort_key

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class CutoffWindow:
    """Half-open window [cutoff, current): updates must start inside it."""

    cutoff: FuzzyDate
    current: FuzzyDate

    def __post_init__(self):
        if self.cutoff.earliest() >= self.current.earliest():
            raise ValueError(
                f"window inverted: cutoff {self.cutoff} must precede current {self.current}"
            )

    def contains(self, when: FuzzyDate) -> bool:
        return self.cutoff.earliest() <= when.earliest() < self.current.earliest()


@dataclass(frozen=True, slots=True)
class ClaimHistory:
    """All dated claims of one (subject, relation) key, sorted chronologically."""

    subject: str
    relation: str
    timeline: tuple[Claim, ...]

    def __post_init__(self):
        for claim in self.timeline:
            if claim.subject != self.subject or claim.relation != self.relation:
                raise ValueError("timeline claim does not match history key")
            if claim.start is None:
                raise ValueError("timeline claims must carry a start date")


def timeline_sort_key(claim: Claim):
    return (claim.start.earliest(), id_sort_key(claim.object))


@dataclass(frozen=True, slots=True)
class UpdatedKnowledge:
    """A post-cutoff claim together with the object value it displaced."""

    new_claim: Claim
    old_object: str

    def __post_init__(self):
        if self.old_object == self.new_claim.object:
            raise ValueError("update must change the object")
        if self.new_claim.start is None:
            raise ValueError("update claim must carry a start date")

    @property
    def subject(self) -> str:
        return self.new_claim.subject

    @property
    def relation(self) -> str:
        return self.new_claim.relation

    @property
    def object(self) -> str:
        return self.new_claim.object

    @property
    def update_time(self) -> FuzzyDate:
        return self.new_claim.start


@dataclass(frozen=True, slots=True)
class TimeInterval:
    """Half-open interval [begin, end) used for trend bucketing."""

    begin: FuzzyDate
    end: FuzzyDate

    def __post_init__(self):
        if self.begin.earliest() >= self.end.earliest():
            raise ValueError(f"interval inverted: {self.begin} >= {self.end}")

    def contains(self, when: FuzzyDate) -> bool:
        return self.begin.earliest() <= when.earliest() < self.end.earliest()

    def label(self) -> str:
        return f"{self.begin.isoformat()}..{self.end.isoformat()}"


def group_histories(store: ClaimStore) -> Iterator[ClaimHistory]:
    """One history per (subject, relation) key that has at least one dated claim."""
    for subject, relation in store.iter_keys():
        dated = [c for c in store.claims_for(subject, relation) if c.start is not None]
        if not dated:
            continue
        dated.sort(key=timeline_sort_key)
        yield ClaimHistory(subject=subject, relation=relation, timeline=tuple(dated))


def detect_update(
    history: ClaimHistory,
    window: CutoffWindow,
    counters: Counter | None = None,
) -> UpdatedKnowledge | None:
    """Earliest in-window object change of a history, or None.

    The first claim of a timeline is never an update (nothing is displaced),
    and candidates with ambiguous tie ordering are skipped, not returned.
    """
    timeline = history.timeline
    t2 = window.current.earliest()
    for i in range(1, len(timeline)):
        claim = timeline[i]
        started = claim.start.earliest()
        if started >= t2:
            break
        if not window.contains(claim.start):
            continue
        previous = timeline[i - 1]
        if claim.object == previous.object:
            continue
        if _tie_ambiguous(timeline, i):
            if counters is not None:
                counters["updates_skipped_ambiguous_tie"] += 1
            continue
        return UpdatedKnowledge(new_claim=claim, old_object=previous.object)
    return None


def _tie_ambiguous(timeline: Sequence[Claim], i: int) -> bool:
    """A candidate is ambiguous when tie order decides what changed.

    Sharing a start instant with the predecessor makes the old object depend
    on the tie-break; sharing one with a different-object successor makes the
    new object depend on it.
    """
    started = timeline[i].start.earliest()
    if timeline[i - 1].start.earliest() == started:
        return True
    if i + 1 < len(timeline):
        successor = timeline[i + 1]
        if successor.start.earliest() == started and successor.object != timeline[i].object:
            return True
    return False


def scan_updates(
    store: ClaimStore,
    window: CutoffWindow,
    languages: Sequence[str],
    counters: Counter | None = None,
) -> list[UpdatedKnowledge]:
    """All detected updates whose subject and object have names in some requested language.

    Output order is deterministic: by subject id, then relation id.
    """
    counters = counters if counters is not None else Counter()
    updates = []
    for history in group_histories(store):
        counters["histories_scanned"] += 1
        update = detect_update(history, window, counters)
        if update is None:
            continue
        if not _named_in_any(store, update.subject, languages) or not _named_in_any(
            store, update.object, languages
        ):
            counters["updates_dropped_unnamed"] += 1
            continue
        counters["updates_found"] += 1
        updates.append(update)
    return updates


def _named_in_any(store: ClaimStore, entity_id: str, languages: Sequence[str]) -> bool:
    return any(store.names(entity_id, lang) is not None for lang in languages)


def make_intervals(
    period_begin: FuzzyDate, period_end: FuzzyDate, stride_months: int
) -> list[TimeInterval]:
    """Contiguous half-open intervals covering [begin, end); the last may be short."""
    if stride_months < 1:
        raise ValueError(f"stride must be >= 1 month, got {stride_months}")
    begin = period_begin.earliest()
    end = period_end.earliest()
    if begin >= end:
        raise ValueError(f"period inverted: {period_begin} >= {period_end}")
    intervals = []
    cursor = begin
    while cursor < end:
        bound = min(add_months(cursor, stride_months), end)
        intervals.append(
            TimeInterval(begin=FuzzyDate.from_date(cursor), end=FuzzyDate.from_date(bound))
        )
        cursor = bound
    return intervals


def bucket_updates(
    updates: Iterable[UpdatedKnowledge],
    intervals: Sequence[TimeInterval],
    counters: Counter | None = None,
) -> dict[TimeInterval, list[UpdatedKnowledge]]:
    """Assign each update to the unique interval containing its start instant."""
    buckets: dict[TimeInterval, list[UpdatedKnowledge]] = {iv: [] for iv in intervals}
    for update in updates:
        for interval in intervals:
            if interval.contains(update.update_time):
                buckets[interval].append(update)
                break
        else:
            if counters is not None:
                counters["updates_outside_intervals"] += 1
    return buckets


def write_updates(updates: Iterable[UpdatedKnowledge], path: Path | str) -> None:
    """Audit log of detected updates, one JSON record per line."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for u in updates:
            fh.write(
                canonical_json(
                    {
                        "subject": u.subject,
                        "relation": u.relation,
                        "object": u.object,
                        "object_old": u.old_object,
                        "update_time": u.update_time.isoformat(),
                        "end": u.new_claim.end.isoformat() if u.new_claim.end else None,
                        "line": u.new_claim.source_line,
                    }
                )
                + "\n"
            )


def read_updates(path: Path | str) -> list[UpdatedKnowledge]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            claim = Claim(
                subject=rec["subject"],
                relation=rec["relation"],
                object=rec["object"],
                start=FuzzyDate.parse(rec["update_time"]),
                end=FuzzyDate.parse(rec["end"]) if rec.get("end") else None,
                source_line=rec.get("line"),
            )
            out.append(UpdatedKnowledge(new_claim=claim, old_object=rec["object_old"]))
    return out
