"""End-to-end build: ingest -> update detection -> documents -> samples -> files.

The build is a pure function of (dump, config, seed, cache state): reruns with
identical inputs and a warm cache produce byte-identical benchmark files and
never touch the network. Transient fetch failures skip the affected item and
increment a counter; rerunning resumes them from the cache-backed fetch layer.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path

from . import __version__
from .config import BuildConfig
from .diff import (
    CutoffWindow,
    TimeInterval,
    UpdatedKnowledge,
    make_intervals,
    scan_updates,
    write_updates,
)
from .errors import (
    AssemblyError,
    CacheMissError,
    InsufficientPoolError,
    StageFailure,
    TransientFetchError,
)
from .fetch import CachingHttpClient, FetchPolicy, Transport
from .ingest import build_store, ingest_config_digest
from .samples import (
    MultiChoiceSample,
    Sample,
    add_distractors,
    assemble_gold_sample,
    build_chain,
    build_multichoice,
    emit_benchmark,
)
from .store import MANIFEST_NAME, AliasSet, ClaimStore
from .wiki import (
    ANCHOR_SUBJECT,
    SupportingDocument,
    WikipediaClient,
    build_supporting_document,
    document_for_link,
)

logger = logging.getLogger(__name__)

UPDATES_FILE = "updates.jsonl"


@dataclass
class BuildResult:
    benchmark_path: Path
    manifest_path: Path
    updates_path: Path
    counters: Counter
    n_samples: int


def ensure_store(config: BuildConfig) -> ClaimStore:
    """Open a store matching the config, rebuilding from the dump when it does not."""
    dump_id = config.dump_id or config.dump_path.name
    expected = ingest_config_digest(sorted(config.relations), config.languages)
    manifest_path = Path(config.store_dir) / MANIFEST_NAME
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        if manifest.get("dump_id") == dump_id and manifest.get("config_digest") == expected:
            logger.info("reusing claim store at %s", config.store_dir)
            return ClaimStore.open(config.store_dir)
        logger.info("store is stale (dump or config changed), rebuilding")
    return build_store(
        config.dump_path,
        config.store_dir,
        sorted(config.relations),
        config.languages,
        dump_id=dump_id,
    )


def _interval_for(intervals: list[TimeInterval], update: UpdatedKnowledge) -> TimeInterval | None:
    for interval in intervals:
        if interval.contains(update.update_time):
            return interval
    return None


def _answer_alias_set(sample: Sample) -> AliasSet:
    return AliasSet(sample.answers[0], tuple(sample.answers[1:]), language=sample.language)


def _collect_gold_samples(
    config: BuildConfig,
    store: ClaimStore,
    client: WikipediaClient,
    updates: list[UpdatedKnowledge],
    intervals: list[TimeInterval],
    counters: Counter,
) -> tuple[list[Sample], dict[str, list[SupportingDocument]]]:
    gold: list[Sample] = []
    docs_by_sample: dict[str, list[SupportingDocument]] = {}
    for language in config.languages:
        for update in updates:
            item = f"{update.subject}/{update.relation}/{language}"
            try:
                doc = build_supporting_document(
                    update, store, config.relations, client, language, counters
                )
            except TransientFetchError as exc:
                counters["fetch_transient_failures"] += 1
                logger.warning("skipping %s after fetch failures: %s", item, exc)
                continue
            except CacheMissError as exc:
                raise StageFailure("documents", item, str(exc)) from exc
            if doc is None:
                counters["updates_without_document"] += 1
                continue
            if store.names(update.old_object, language) is None:
                counters["updates_old_object_unnamed"] += 1
                continue
            try:
                sample = assemble_gold_sample(update, [doc], store, config.relations, language)
            except AssemblyError as exc:
                counters["samples_assembly_failed"] += 1
                logger.warning("cannot assemble %s: %s", item, exc)
                continue
            sample = replace(sample, interval=_interval_for(intervals, update))
            gold.append(sample)
            docs_by_sample[sample.id] = [doc]
            counters["samples_single_hop"] += 1

            multi = _try_multi_hop(config, store, client, update, doc, language, counters)
            if multi is not None:
                multi_sample, link_docs = multi
                multi_sample = replace(multi_sample, interval=_interval_for(intervals, update))
                gold.append(multi_sample)
                docs_by_sample[multi_sample.id] = link_docs
                counters["samples_multi_hop"] += 1
    return gold, docs_by_sample


def _try_multi_hop(
    config: BuildConfig,
    store: ClaimStore,
    client: WikipediaClient,
    update: UpdatedKnowledge,
    head_doc: SupportingDocument,
    language: str,
    counters: Counter,
) -> tuple[Sample, list[SupportingDocument]] | None:
    if config.hops < 2:
        return None
    chain = build_chain(update, store, config.relations, config.hops)
    if chain is None:
        counters["updates_without_chain"] += 1
        return None
    since = update.update_time.earliest_instant()
    link_docs = [head_doc]
    for link in chain.links[1:]:
        relation = config.relations[link.relation]
        anchor = link.subject if relation.anchor == ANCHOR_SUBJECT else link.object
        try:
            link_doc = document_for_link(
                client, store, link.subject, link.object, anchor, since, language, counters
            )
        except TransientFetchError as exc:
            counters["fetch_transient_failures"] += 1
            logger.warning("skipping chain link %s/%s: %s", link.subject, link.relation, exc)
            link_doc = None
        except CacheMissError as exc:
            raise StageFailure(
                "documents", f"{link.subject}/{link.relation}/{language}", str(exc)
            ) from exc
        if link_doc is None:
            counters["chains_without_documents"] += 1
            return None
        link_docs.append(link_doc)
    try:
        sample = assemble_gold_sample(chain, link_docs, store, config.relations, language)
    except AssemblyError as exc:
        counters["samples_assembly_failed"] += 1
        logger.warning("cannot assemble chain for %s: %s", update.subject, exc)
        return None
    return sample, link_docs


def _expand_entries(
    config: BuildConfig,
    gold: list[Sample],
    docs_by_sample: dict[str, list[SupportingDocument]],
    counters: Counter,
) -> list[tuple[Sample, MultiChoiceSample | None]]:
    entries: list[tuple[Sample, MultiChoiceSample | None]] = []
    for language in config.languages:
        lang_samples = sorted(
            (s for s in gold if s.language == language), key=lambda s: s.id
        )
        for sample in lang_samples:
            pool = [
                doc
                for other in lang_samples
                if other.id != sample.id
                for doc in docs_by_sample[other.id]
            ]
            answer_pool = [
                (other.answer_relation, _answer_alias_set(other))
                for other in lang_samples
                if other.id != sample.id
            ]
            for n_distractors in config.distractor_counts:
                try:
                    variant = add_distractors(sample, pool, n_distractors, config.seed)
                except InsufficientPoolError as exc:
                    raise StageFailure("distractors", sample.id, str(exc)) from exc
                try:
                    multichoice = build_multichoice(variant, answer_pool, config.seed)
                except (InsufficientPoolError, AssemblyError) as exc:
                    counters["samples_without_multichoice"] += 1
                    logger.warning("no multi-choice options for %s: %s", variant.id, exc)
                    multichoice = None
                entries.append((variant, multichoice))
    return entries


def run_build(config: BuildConfig, transport: Transport | None = None) -> BuildResult:
    """Run every stage and write the benchmark files; see module docstring."""
    counters: Counter = Counter()
    store = ensure_store(config)
    window: CutoffWindow = config.window
    updates = scan_updates(store, window, config.languages, counters)
    logger.info("detected %d updates in [%s, %s)", len(updates),
                window.cutoff.isoformat(), window.current.isoformat())

    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    updates_path = output_dir / UPDATES_FILE
    write_updates(updates, updates_path)

    intervals = make_intervals(window.cutoff, window.current, config.interval_months)
    policy = FetchPolicy(
        cache_dir=config.cache_dir,
        max_requests_per_second=config.rate_per_second,
        max_retries=config.max_retries,
        offline=config.offline,
    )
    client = WikipediaClient(policy, http=CachingHttpClient(policy, transport=transport))

    gold, docs_by_sample = _collect_gold_samples(
        config, store, client, updates, intervals, counters
    )
    logger.info("built %d gold samples (%d single-hop, %d multi-hop)",
                len(gold), counters["samples_single_hop"], counters["samples_multi_hop"])

    entries = _expand_entries(config, gold, docs_by_sample, counters)

    manifest_extra = {
        "dump_id": store.dump_id,
        "config_digest": config.digest(),
        "tool_version": __version__,
        "window": {"cutoff": window.cutoff.isoformat(), "current": window.current.isoformat()},
        "interval_months": config.interval_months,
        "seed": config.seed,
        "languages": list(config.languages),
        "hops": config.hops,
        "distractor_counts": list(config.distractor_counts),
        "counters": {k: counters[k] for k in sorted(counters)},
        "store_counters": store.manifest.get("counters", {}),
    }
    benchmark_path, manifest_path = emit_benchmark(entries, output_dir, manifest_extra)
    logger.info("emitted %d samples to %s", len(entries), benchmark_path)
    for name in sorted(counters):
        logger.info("counter %s = %d", name, counters[name])
    return BuildResult(
        benchmark_path=benchmark_path,
        manifest_path=manifest_path,
        updates_path=updates_path,
        counters=counters,
        n_samples=len(entries),
    )
