"""Sample construction: questions over updated knowledge, distractor padding,
multi-choice options, and the line-delimited benchmark file format.

Single-hop questions instantiate the relation's interrogative template with
the subject's canonical label; multi-hop questions nest noun-phrase templates
along a chain of claims where each object is the next subject, and the answer
is the last object's alias set. Distractors are other samples' supporting
documents that mention neither the subject nor the object and are interleaved
with the gold documents at seed-determined positions. The whole construction
is a pure function of (store, window, config, seed).
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path
from typing import Mapping, Sequence

from .dates import FuzzyDate
from .diff import TimeInterval, UpdatedKnowledge
from .errors import AssemblyError, ConfigError, InsufficientPoolError
from .store import AliasSet, Claim, ClaimStore, canonical_json, id_sort_key
from .textmatch import contains_any, fold
from .wiki import SupportingDocument, format_api_timestamp, parse_api_timestamp

TASK_SINGLE_HOP = "single_hop"
TASK_MULTI_HOP = "multi_hop"

OPTION_CORRECT = "correct"
OPTION_UNKNOWN = "unknown"
OPTION_OUTDATED = "outdated"
OPTION_NOISE = "noise"

UNKNOWN_TEXT = "Unknown"

BENCHMARK_FILE = "benchmark.jsonl"
MANIFEST_FILE = "manifest.json"

_PASSAGE_PREFIX_RE = re.compile(r"^Passage \d+: ")


@dataclass(frozen=True, slots=True)
class Chain:
    """Connected claims starting at an update; link i's object is link i+1's subject."""

    head: UpdatedKnowledge
    links: tuple[Claim, ...]

    def __post_init__(self):
        if not self.links:
            raise ValueError("chain needs at least one link")
        if self.links[0] != self.head.new_claim:
            raise ValueError("first link must be the update's new claim")
        for left, right in zip(self.links, self.links[1:]):
            if left.object != right.subject:
                raise ValueError("chain broken: object does not feed next subject")

    @property
    def hops(self) -> int:
        return len(self.links)


@dataclass(frozen=True, slots=True)
class PassageMeta:
    """Provenance of one context passage."""

    page_title: str
    revision_id: int
    timestamp: datetime
    gold: bool


@dataclass(frozen=True, slots=True)
class Sample:
    """One benchmark sample: question, context passages, acceptable answers."""

    id: str
    task: str
    language: str
    question: str
    context: tuple[str, ...]
    passages: tuple[PassageMeta, ...]
    answers: tuple[str, ...]
    subject_names: AliasSet
    object_names: AliasSet
    old_object_names: AliasSet | None
    relation: str
    answer_relation: str
    subject_id: str
    object_id: str
    old_object_id: str
    update_time: FuzzyDate
    hops: int
    gold_positions: tuple[int, ...]
    distractor_count: int
    interval: TimeInterval | None = None

    def __post_init__(self):
        if not self.answers:
            raise ValueError("answers must be non-empty")
        if not self.context:
            raise ValueError("context must be non-empty")
        if len(self.context) != len(self.passages):
            raise ValueError("context and passage metadata misaligned")
        if len(self.gold_positions) + self.distractor_count != len(self.context):
            raise ValueError("gold + distractor counts must cover the context")
        expected_gold = 1 if self.task == TASK_SINGLE_HOP else self.hops
        if len(self.gold_positions) != expected_gold:
            raise ValueError(
                f"{self.task} sample needs {expected_gold} gold documents, "
                f"got {len(self.gold_positions)}"
            )

    @property
    def gold_doc_count(self) -> int:
        return len(self.gold_positions)


@dataclass(frozen=True, slots=True)
class MultiChoiceSample:
    """Four labeled options over a base sample; labels are a seeded permutation."""

    base: Sample
    options: tuple[str, str, str, str]
    correct_label: str
    option_kinds: tuple[str, str, str, str]

    def __post_init__(self):
        kinds = list(self.option_kinds)
        if kinds.count(OPTION_CORRECT) != 1:
            raise ValueError("exactly one correct option required")
        if kinds.count(OPTION_UNKNOWN) != 1:
            raise ValueError("exactly one unknown option required")
        unknown_at = kinds.index(OPTION_UNKNOWN)
        if self.options[unknown_at] != UNKNOWN_TEXT:
            raise ValueError(f"unknown option text must be {UNKNOWN_TEXT!r}")
        if self.base.task == TASK_SINGLE_HOP:
            expected = {OPTION_OUTDATED: 1, OPTION_NOISE: 1}
        else:
            expected = {OPTION_OUTDATED: 0, OPTION_NOISE: 2}
        for kind, count in expected.items():
            if kinds.count(kind) != count:
                raise ValueError(f"{self.base.task} needs {count} {kind} options")
        folded = [fold(o) for o in self.options]
        if len(set(folded)) != 4:
            raise ValueError("options must be pairwise distinct after normalization")
        if self.correct_label not in ("A", "B", "C", "D"):
            raise ValueError(f"bad label: {self.correct_label}")
        if kinds[ord(self.correct_label) - ord("A")] != OPTION_CORRECT:
            raise ValueError("correct_label must point at the correct option")


def derived_rng(seed: int, *parts: str) -> random.Random:
    """Independent RNG stream for one (seed, purpose) pair."""
    digest = hashlib.sha256("|".join([str(seed), *parts]).encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def make_sample_id(
    subject_id: str,
    link_relations: Sequence[str],
    link_objects: Sequence[str],
    update_time: FuzzyDate,
    task: str,
    language: str,
    n_distractors: int,
) -> str:
    payload = canonical_json(
        {
            "subject": subject_id,
            "relations": list(link_relations),
            "objects": list(link_objects),
            "update_time": update_time.isoformat(),
            "task": task,
            "language": language,
            "n_distractors": n_distractors,
        }
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _template_for(relation_config, relation: str, language: str, nominal: bool) -> str:
    entry = relation_config.get(relation)
    if entry is None:
        raise ConfigError([f"relation {relation} missing from configuration"])
    templates = entry.templates.get(language)
    if templates is None:
        raise ConfigError([f"relation {relation}: no templates for language {language}"])
    text = templates.nominal if nominal else templates.question
    if not text:
        kind = "nominal" if nominal else "interrogative"
        raise ConfigError([f"relation {relation}: missing {kind} template for {language}"])
    return text


def _canonical_label(store: ClaimStore, entity_id: str, language: str) -> str:
    names = store.names(entity_id, language)
    if names is None:
        raise AssemblyError(f"entity {entity_id} has no names in language {language}")
    return names.canonical


def render_single_hop_question(
    update: UpdatedKnowledge,
    relation_config,
    store: ClaimStore,
    language: str,
) -> str:
    """Interrogative template of the relation with the subject's canonical label."""
    template = _template_for(relation_config, update.relation, language, nominal=False)
    return template.replace("{}", _canonical_label(store, update.subject, language))


def render_multi_hop_question(
    chain: Chain,
    relation_config,
    store: ClaimStore,
    language: str,
) -> str:
    """Nested composition: last link's interrogative over the inner links' nominals."""
    phrase = _canonical_label(store, chain.head.subject, language)
    for link in chain.links[:-1]:
        nominal = _template_for(relation_config, link.relation, language, nominal=True)
        phrase = nominal.replace("{}", phrase)
    question = _template_for(relation_config, chain.links[-1].relation, language, nominal=False)
    return question.replace("{}", phrase)


def _claim_valid_at(claim: Claim, when) -> bool:
    # Undated starts count as long-standing facts; only claims that started
    # after the update or ended before it are rejected.
    if claim.start is not None and claim.start.earliest() > when:
        return False
    if claim.end is not None and claim.end.latest() < when:
        return False
    return True


def build_chain(
    update: UpdatedKnowledge,
    store: ClaimStore,
    relation_config,
    hops: int,
) -> Chain | None:
    """Depth-first search for a chain of ``hops`` claims valid at the update time.

    The branch choice is deterministic: smallest relation id, then smallest
    object id. Entities already on the chain are never revisited. Returns None
    when no complete chain exists.
    """
    if hops < 1:
        raise ValueError("hops must be >= 1")
    when = update.update_time.earliest()
    hop_relations = sorted(
        (pid for pid, entry in relation_config.items() if entry.hop), key=id_sort_key
    )
    links: list[Claim] = [update.new_claim]
    visited = {update.subject, update.object}

    def extend(current: str, remaining: int) -> bool:
        if remaining == 0:
            return True
        candidates = []
        for pid in hop_relations:
            for claim in store.claims_for(current, pid):
                if claim.object in visited:
                    continue
                if not _claim_valid_at(claim, when):
                    continue
                candidates.append(claim)
        candidates.sort(key=lambda c: (id_sort_key(c.relation), id_sort_key(c.object)))
        for claim in candidates:
            links.append(claim)
            visited.add(claim.object)
            if extend(claim.object, remaining - 1):
                return True
            visited.discard(claim.object)
            links.pop()
        return False

    if not extend(update.object, hops - 1):
        return None
    return Chain(head=update, links=tuple(links))


def assemble_gold_sample(
    source: UpdatedKnowledge | Chain,
    documents: Sequence[SupportingDocument],
    store: ClaimStore,
    relation_config,
    language: str,
) -> Sample:
    """Gold sample over an update (single-hop) or a chain (multi-hop).

    Expects one verified supporting document per link, in link order; the
    answer set is the last object's aliases.
    """
    chain = source if isinstance(source, Chain) else Chain(source, (source.new_claim,))
    if len(documents) != chain.hops:
        raise AssemblyError(
            f"need {chain.hops} documents for a {chain.hops}-hop sample, got {len(documents)}"
        )
    task = TASK_MULTI_HOP if chain.hops >= 2 else TASK_SINGLE_HOP
    head = chain.head
    last = chain.links[-1]
    subject_names = store.names(head.subject, language)
    object_names = store.names(head.object, language)
    answer_names = store.names(last.object, language)
    if subject_names is None or object_names is None or answer_names is None:
        raise AssemblyError(
            f"update {head.subject}/{head.relation}: names missing in language {language}"
        )
    old_object_names = store.names(head.old_object, language)
    if task == TASK_SINGLE_HOP:
        question = render_single_hop_question(head, relation_config, store, language)
    else:
        question = render_multi_hop_question(chain, relation_config, store, language)
    sample_id = make_sample_id(
        head.subject,
        [link.relation for link in chain.links],
        [link.object for link in chain.links],
        head.update_time,
        task,
        language,
        n_distractors=0,
    )
    passages = tuple(
        PassageMeta(
            page_title=doc.revision.page_title,
            revision_id=doc.revision.revision_id,
            timestamp=doc.revision.timestamp,
            gold=True,
        )
        for doc in documents
    )
    return Sample(
        id=sample_id,
        task=task,
        language=language,
        question=question,
        context=tuple(doc.text for doc in documents),
        passages=passages,
        answers=answer_names.names(),
        subject_names=subject_names,
        object_names=object_names,
        old_object_names=old_object_names,
        relation=head.relation,
        answer_relation=last.relation,
        subject_id=head.subject,
        object_id=head.object,
        old_object_id=head.old_object,
        update_time=head.update_time,
        hops=chain.hops,
        gold_positions=tuple(range(len(documents))),
        distractor_count=0,
        interval=None,
    )


def _distractor_eligible(sample: Sample, doc: SupportingDocument) -> bool:
    own_revisions = {(p.page_title, p.revision_id) for p in sample.passages}
    if (doc.revision.page_title, doc.revision.revision_id) in own_revisions:
        return False
    # Contamination guard: every context passage must postdate this sample's update.
    if doc.revision.timestamp < sample.update_time.earliest_instant():
        return False
    banned = sample.subject_names.names() + sample.object_names.names()
    return not contains_any(doc.text, banned)


def add_distractors(
    sample: Sample,
    pool: Sequence[SupportingDocument],
    n_distractors: int,
    seed: int,
) -> Sample:
    """Pad the context with distracting documents drawn uniformly under the seed.

    Documents naming the sample's subject or object (any alias) are rejected,
    as are documents revised before the sample's update. The chosen distractors
    are interleaved with the gold passages at seed-determined positions;
    the result is deterministic for a fixed (sample id, seed).
    """
    if n_distractors < 0:
        raise ValueError("n_distractors must be >= 0")
    if n_distractors == 0:
        return sample
    eligible = [doc for doc in pool if _distractor_eligible(sample, doc)]
    if len(eligible) < n_distractors:
        raise InsufficientPoolError(sample.id, n_distractors, len(eligible))
    rng = derived_rng(seed, sample.id, "distractors")
    chosen = rng.sample(eligible, n_distractors)
    total = len(sample.context) + n_distractors
    distractor_slots = set(rng.sample(range(total), n_distractors))
    context: list[str] = []
    passages: list[PassageMeta] = []
    gold_positions: list[int] = []
    gold_iter = iter(zip(sample.context, sample.passages))
    distractor_iter = iter(chosen)
    for position in range(total):
        if position in distractor_slots:
            doc = next(distractor_iter)
            context.append(doc.text)
            passages.append(
                PassageMeta(
                    page_title=doc.revision.page_title,
                    revision_id=doc.revision.revision_id,
                    timestamp=doc.revision.timestamp,
                    gold=False,
                )
            )
        else:
            text, meta = next(gold_iter)
            context.append(text)
            passages.append(meta)
            gold_positions.append(position)
    new_id = hashlib.sha256(
        f"{sample.id}|nd={n_distractors}".encode("utf-8")
    ).hexdigest()[:16]
    return replace(
        sample,
        id=new_id,
        context=tuple(context),
        passages=tuple(passages),
        gold_positions=tuple(gold_positions),
        distractor_count=n_distractors,
    )


def build_multichoice(
    sample: Sample,
    answer_pool: Sequence[tuple[str, AliasSet]],
    seed: int,
) -> MultiChoiceSample:
    """Four options: correct, "Unknown", and (single-hop) the displaced old answer
    plus one noise entry, or (multi-hop) two noise entries.

    Noise is drawn from other samples' answers, preferring entries of the same
    relation; noise never collides with the correct or outdated texts.
    """
    correct = sample.object_names.canonical if sample.task == TASK_SINGLE_HOP else sample.answers[0]
    entries: list[tuple[str, str]] = [(OPTION_CORRECT, correct), (OPTION_UNKNOWN, UNKNOWN_TEXT)]
    taken = {fold(correct), fold(UNKNOWN_TEXT)}
    # No other option may map into the answer set, aliases included.
    banned = taken | {fold(answer) for answer in sample.answers}
    if sample.task == TASK_SINGLE_HOP:
        if sample.old_object_names is None:
            raise AssemblyError(f"sample {sample.id}: single-hop needs old object names")
        outdated = sample.old_object_names.canonical
        if fold(outdated) in banned:
            raise AssemblyError(f"sample {sample.id}: outdated option collides with the answers")
        entries.append((OPTION_OUTDATED, outdated))
        taken.add(fold(outdated))
        banned |= {fold(name) for name in sample.old_object_names.names()}
        noise_needed = 1
    else:
        noise_needed = 2
    rng = derived_rng(seed, sample.id, "options")
    for _ in range(noise_needed):
        candidates = [
            (relation, names.canonical)
            for relation, names in answer_pool
            if fold(names.canonical) not in taken and fold(names.canonical) not in banned
        ]
        preferred = [c for c in candidates if c[0] == sample.answer_relation]
        bucket = preferred or candidates
        if not bucket:
            raise InsufficientPoolError(sample.id, noise_needed, 0, what="noise options")
        choice = rng.choice(sorted(bucket, key=lambda c: (c[0], c[1])))
        entries.append((OPTION_NOISE, choice[1]))
        taken.add(fold(choice[1]))
    rng.shuffle(entries)
    kinds = tuple(kind for kind, _ in entries)
    options = tuple(text for _, text in entries)
    correct_label = "ABCD"[kinds.index(OPTION_CORRECT)]
    return MultiChoiceSample(
        base=sample,
        options=options,  # type: ignore[arg-type]
        correct_label=correct_label,
        option_kinds=kinds,  # type: ignore[arg-type]
    )


def rendered_context(sample: Sample) -> str | list[str]:
    """Table-style context: a bare string for one passage, "Passage N: " lines otherwise."""
    if len(sample.context) == 1:
        return sample.context[0]
    return [f"Passage {i + 1}: {text}" for i, text in enumerate(sample.context)]


def context_passages(context: str | list[str]) -> list[str]:
    """Invert rendered_context back to raw passage texts."""
    if isinstance(context, str):
        return [context]
    return [_PASSAGE_PREFIX_RE.sub("", passage, count=1) for passage in context]


def to_record(sample: Sample, multichoice: MultiChoiceSample | None) -> dict:
    record = {
        "id": sample.id,
        "task": sample.task,
        "language": sample.language,
        "hops": sample.hops,
        "question": sample.question,
        "answer": list(sample.answers),
        "subject": list(sample.subject_names.names()),
        "pid": sample.relation,
        "object": list(sample.object_names.names()),
        "object_old": list(sample.old_object_names.names()) if sample.old_object_names else None,
        "subject_id": sample.subject_id,
        "object_id": sample.object_id,
        "object_old_id": sample.old_object_id,
        "answer_pid": sample.answer_relation,
        "context": rendered_context(sample),
        "passages": [
            {
                "page_title": p.page_title,
                "revision_id": p.revision_id,
                "timestamp": format_api_timestamp(p.timestamp),
                "gold": p.gold,
            }
            for p in sample.passages
        ],
        "gold_positions": list(sample.gold_positions),
        "n_distractors": sample.distractor_count,
        "update_time": sample.update_time.isoformat(),
        "interval": (
            {"begin": sample.interval.begin.isoformat(), "end": sample.interval.end.isoformat()}
            if sample.interval
            else None
        ),
        "options": list(multichoice.options) if multichoice else None,
        "answer_multichoice": multichoice.correct_label if multichoice else None,
        "option_kinds": list(multichoice.option_kinds) if multichoice else None,
    }
    return record


def from_record(record: dict) -> tuple[Sample, MultiChoiceSample | None]:
    subject_names = _alias_set(record["subject"], record["language"])
    object_names = _alias_set(record["object"], record["language"])
    old_names = (
        _alias_set(record["object_old"], record["language"]) if record.get("object_old") else None
    )
    interval = None
    if record.get("interval"):
        interval = TimeInterval(
            begin=FuzzyDate.parse(record["interval"]["begin"]),
            end=FuzzyDate.parse(record["interval"]["end"]),
        )
    sample = Sample(
        id=record["id"],
        task=record["task"],
        language=record["language"],
        question=record["question"],
        context=tuple(context_passages(record["context"])),
        passages=tuple(
            PassageMeta(
                page_title=p["page_title"],
                revision_id=p["revision_id"],
                timestamp=parse_api_timestamp(p["timestamp"]),
                gold=p["gold"],
            )
            for p in record["passages"]
        ),
        answers=tuple(record["answer"]),
        subject_names=subject_names,
        object_names=object_names,
        old_object_names=old_names,
        relation=record["pid"],
        answer_relation=record["answer_pid"],
        subject_id=record["subject_id"],
        object_id=record["object_id"],
        old_object_id=record["object_old_id"],
        update_time=FuzzyDate.parse(record["update_time"]),
        hops=record["hops"],
        gold_positions=tuple(record["gold_positions"]),
        distractor_count=record["n_distractors"],
        interval=interval,
    )
    multichoice = None
    if record.get("options"):
        multichoice = MultiChoiceSample(
            base=sample,
            options=tuple(record["options"]),
            correct_label=record["answer_multichoice"],
            option_kinds=tuple(record["option_kinds"]),
        )
    return sample, multichoice


def _alias_set(names: Sequence[str], language: str) -> AliasSet:
    return AliasSet(names[0], tuple(names[1:]), language=language)


def emit_benchmark(
    entries: Sequence[tuple[Sample, MultiChoiceSample | None]],
    output_dir: Path | str,
    manifest_extra: Mapping | None = None,
) -> tuple[Path, Path]:
    """Write benchmark.jsonl plus a manifest with per-task x per-N_d counts."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    ordered = sorted(entries, key=lambda e: (e[0].id, e[0].distractor_count))
    benchmark_path = output_dir / BENCHMARK_FILE
    counts: dict[str, dict[str, int]] = {}
    with benchmark_path.open("w", encoding="utf-8") as fh:
        for sample, multichoice in ordered:
            fh.write(canonical_json(to_record(sample, multichoice)) + "\n")
            per_task = counts.setdefault(sample.task, {})
            key = str(sample.distractor_count)
            per_task[key] = per_task.get(key, 0) + 1
    manifest = dict(manifest_extra or {})
    manifest["counts"] = {task: dict(sorted(v.items())) for task, v in sorted(counts.items())}
    manifest["total"] = len(ordered)
    manifest_path = output_dir / MANIFEST_FILE
    manifest_path.write_text(canonical_json(manifest) + "\n", encoding="utf-8")
    return benchmark_path, manifest_path


def read_benchmark(path: Path | str) -> list[tuple[Sample, MultiChoiceSample | None]]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            out.append(from_record(json.loads(line)))
    return out


def read_records(path: Path | str) -> list[dict]:
    """Raw benchmark records, for consumers that only need the file schema."""
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh]
