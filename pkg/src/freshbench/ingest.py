"""Streaming ingestion of Wikidata-style JSON dumps into a claim store.

Dump format: a top-level JSON array with one serialized entity per line and
optional trailing commas, optionally gzip- or bzip2-compressed. The stream is
processed line by line; peak memory is the entity/claim indexes plus one line,
independent of dump size.

Kept per entity:
  * claims of configured relations whose value is another entity, with start
    and end time qualifiers (P580/P582) mapped to fuzzy dates;
  * labels and aliases in the configured languages;
  * Wikipedia sitelink titles for those languages.

Statement filtering rules: deprecated-rank statements are dropped (retracted
facts); a statement with more than one value for the same time qualifier is
dropped as an ambiguous timeline; non-entity values (strings, quantities,
coordinates) are ignored. Every skip increments a counter surfaced in the
store manifest.
"""

from __future__ import annotations

import bz2
import gzip
import hashlib
import json
import logging
from collections import Counter
from pathlib import Path
from typing import IO, Iterator

from .dates import from_wikidata_time
from .errors import ConfigError, DumpReadError
from .store import AliasSet, Claim, ClaimStore, ClaimStoreWriter, EntityRecord, is_entity_id

logger = logging.getLogger(__name__)

START_TIME_QUALIFIER = "P580"
END_TIME_QUALIFIER = "P582"

_LOG_EVERY = 100_000


def open_dump(path: Path | str) -> IO[bytes]:
    """Open a dump file for binary reading, decompressing by extension."""
    path = Path(path)
    try:
        if path.suffix == ".gz":
            return gzip.open(path, "rb")
        if path.suffix == ".bz2":
            return bz2.open(path, "rb")
        return path.open("rb")
    except OSError as exc:
        raise DumpReadError(f"cannot open dump {path}: {exc}") from exc


def stream_entities(path: Path | str, counters: Counter) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, entity) for each entity line, in file order.

    Malformed lines are counted under ``lines_malformed`` and skipped; failures
    of the source itself (I/O, decompression) are fatal.
    """
    fh = open_dump(path)
    byte_offset = 0
    line_no = 0
    try:
        while True:
            try:
                raw = fh.readline()
            except (EOFError, OSError) as exc:
                raise DumpReadError(
                    f"decompression failed near decompressed byte offset {byte_offset}: {exc}"
                ) from exc
            if not raw:
                return
            line_no += 1
            byte_offset += len(raw)
            stripped = raw.strip()
            if stripped in (b"", b"[", b"]"):
                continue
            stripped = stripped.rstrip(b",")
            try:
                entity = json.loads(stripped)
            except (json.JSONDecodeError, UnicodeDecodeError):
                counters["lines_malformed"] += 1
                continue
            if not isinstance(entity, dict):
                counters["lines_malformed"] += 1
                continue
            yield line_no, entity
    finally:
        fh.close()


def _qualifier_date(statement: dict, qualifier_pid: str, counters: Counter):
    """Extract one fuzzy date from a statement qualifier.

    Returns (date_or_None, ok). ok=False flags the statement as unusable:
    multiple values for the qualifier make the timeline ambiguous.
    """
    qualifiers = statement.get("qualifiers")
    if not isinstance(qualifiers, dict):
        return None, True
    values = qualifiers.get(qualifier_pid)
    if not values:
        return None, True
    if len(values) > 1:
        counters["statements_ambiguous_qualifier"] += 1
        return None, False
    snak = values[0]
    if snak.get("snaktype") != "value":
        return None, True  # "unknown value" / "no value" markers
    payload = snak.get("datavalue", {}).get("value", {})
    if not isinstance(payload, dict) or "time" not in payload:
        counters["times_malformed"] += 1
        return None, True
    parsed = from_wikidata_time(payload["time"], int(payload.get("precision", 0)))
    if parsed is None:
        counters["times_dropped_unusable"] += 1
        return None, True
    return parsed, True


def extract_claims(
    entity: dict,
    relation_filter: set[str],
    counters: Counter,
    source_line: int | None = None,
) -> list[Claim]:
    """Pull entity-valued claims of the configured relations out of one entity."""
    if not relation_filter:
        raise ConfigError(["relation filter must be non-empty"])
    subject = entity.get("id")
    if not is_entity_id(subject):
        return []
    claims = []
    statements_by_pid = entity.get("claims")
    if not isinstance(statements_by_pid, dict):
        if statements_by_pid is not None:
            counters["entities_malformed_claims"] += 1
        return []
    for pid in relation_filter:
        statements = statements_by_pid.get(pid) or []
        if not isinstance(statements, list):
            counters["entities_malformed_claims"] += 1
            continue
        for statement in statements:
            if not isinstance(statement, dict):
                counters["statements_malformed"] += 1
                continue
            if statement.get("rank") == "deprecated":
                counters["statements_deprecated"] += 1
                continue
            mainsnak = statement.get("mainsnak", {})
            if mainsnak.get("snaktype") != "value":
                counters["statements_ignored_novalue"] += 1
                continue
            datavalue = mainsnak.get("datavalue", {})
            if datavalue.get("type") != "wikibase-entityid":
                counters["statements_ignored_non_entity"] += 1
                continue
            object_id = datavalue.get("value", {}).get("id")
            if not is_entity_id(object_id):
                counters["statements_ignored_non_entity"] += 1
                continue
            start, start_ok = _qualifier_date(statement, START_TIME_QUALIFIER, counters)
            end, end_ok = _qualifier_date(statement, END_TIME_QUALIFIER, counters)
            if not (start_ok and end_ok):
                continue
            if start and end and start.earliest() > end.latest():
                counters["statements_inverted_interval"] += 1
                continue
            claims.append(
                Claim(
                    subject=subject,
                    relation=pid,
                    object=object_id,
                    start=start,
                    end=end,
                    source_line=source_line,
                )
            )
            counters["claims_kept"] += 1
    return claims


def extract_names(entity: dict, languages: list[str]) -> EntityRecord:
    """Labels, aliases, and sitelinked Wikipedia titles for the requested languages."""
    if not languages:
        raise ConfigError(["languages must be non-empty"])
    record = EntityRecord(id=entity.get("id", ""))
    labels = entity.get("labels")
    aliases = entity.get("aliases")
    sitelinks = entity.get("sitelinks")
    labels = labels if isinstance(labels, dict) else {}
    aliases = aliases if isinstance(aliases, dict) else {}
    sitelinks = sitelinks if isinstance(sitelinks, dict) else {}
    for lang in languages:
        label = (labels.get(lang) or {}).get("value")
        if label:
            alias_values = tuple(
                a.get("value", "") for a in (aliases.get(lang) or []) if a.get("value")
            )
            record.names[lang] = AliasSet(label, alias_values, language=lang)
        title = (sitelinks.get(f"{lang}wiki") or {}).get("title")
        if title:
            record.wiki_title[lang] = title
    return record


def ingest_config_digest(relations: list[str], languages: list[str]) -> str:
    payload = json.dumps(
        {"relations": sorted(relations), "languages": sorted(languages)},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def build_store(
    dump_path: Path | str,
    store_dir: Path | str,
    relations: list[str],
    languages: list[str],
    dump_id: str | None = None,
) -> ClaimStore:
    """Stream a dump into a claim store directory and return the opened store.

    Re-running with the same dump and configuration produces byte-identical
    store files. Ingest statistics land in the manifest and the log.
    """
    if not relations:
        raise ConfigError(["relation filter must be non-empty"])
    if not languages:
        raise ConfigError(["languages must be non-empty"])
    dump_path = Path(dump_path)
    relation_filter = set(relations)
    counters: Counter = Counter()
    writer = ClaimStoreWriter(store_dir)
    for line_no, entity in stream_entities(dump_path, counters):
        counters["entities_seen"] += 1
        if counters["entities_seen"] % _LOG_EVERY == 0:
            logger.info("ingest: %d entities seen, %d claims kept",
                        counters["entities_seen"], counters["claims_kept"])
        if entity.get("type") not in (None, "item"):
            counters["entities_non_item"] += 1
            continue
        claims = extract_claims(entity, relation_filter, counters, source_line=line_no)
        record = extract_names(entity, languages)
        # Entities with names are kept even without claims: they may be the
        # object side of someone else's claim and supply answer aliases.
        if not record.empty or claims:
            if writer.add_entity(record):
                counters["entities_kept"] += 1
        for claim in claims:
            writer.add_claim(claim)
    writer.finalize(
        dump_id=dump_id or dump_path.name,
        config_digest=ingest_config_digest(relations, languages),
        counters=dict(counters),
    )
    logger.info(
        "ingest done: %d entities seen, %d kept, %d claims, %d malformed lines",
        counters["entities_seen"],
        counters["entities_kept"],
        counters["claims_kept"],
        counters["lines_malformed"],
    )
    return ClaimStore.open(store_dir)
