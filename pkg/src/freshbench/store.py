"""On-disk claim store: record logs plus index files, rebuilt deterministically.

Layout of a store directory:

    claims.jsonl       one kept claim per line, in dump order
    claims.idx.json    "subject|relation" -> list of claim record numbers
    entities.jsonl     one entity record per line (names per language + wiki titles)
    entities.idx.json  entity id -> entity record number
    manifest.json      dump_id, config digest, ingest counters

Everything is serialized with sorted keys and fixed separators so that two
builds from the same dump and config are byte-identical. A loaded store is
immutable and safe for unsynchronized concurrent readers.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .dates import FuzzyDate
from .errors import StoreError

QID_RE = re.compile(r"^Q\d+$")
PID_RE = re.compile(r"^P\d+$")

MANIFEST_NAME = "manifest.json"


def is_entity_id(value) -> bool:
    return isinstance(value, str) and bool(QID_RE.match(value))


def is_relation_id(value) -> bool:
    return isinstance(value, str) and bool(PID_RE.match(value))


def id_sort_key(entity_or_relation_id: str) -> tuple[int, str]:
    """Natural order for Q/P ids: numeric part first, raw string as fallback."""
    digits = entity_or_relation_id[1:]
    return (int(digits) if digits.isdigit() else 0, entity_or_relation_id)


def canonical_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def _alias_key(name: str) -> str:
    # Case and spacing only: accented variants are distinct aliases, not duplicates.
    return " ".join(name.casefold().split())


@dataclass(frozen=True, slots=True)
class AliasSet:
    """Canonical label plus aliases for one entity in one language.

    Aliases are deduplicated against each other and the canonical label
    (case/whitespace-insensitively); the canonical label comes first in names().
    """

    canonical: str
    aliases: tuple[str, ...] = ()
    language: str = "en"

    def __post_init__(self):
        if not self.canonical:
            raise ValueError("canonical label must be non-empty")
        seen = {_alias_key(self.canonical)}
        kept = []
        for alias in self.aliases:
            key = _alias_key(alias)
            if alias and key not in seen:
                seen.add(key)
                kept.append(alias)
        object.__setattr__(self, "aliases", tuple(kept))

    def names(self) -> tuple[str, ...]:
        return (self.canonical, *self.aliases)


@dataclass(frozen=True, slots=True)
class Claim:
    """A (subject, relation, object) triplet with optional validity bounds."""

    subject: str
    relation: str
    object: str
    start: FuzzyDate | None = None
    end: FuzzyDate | None = None
    source_line: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if not is_entity_id(self.subject):
            raise ValueError(f"bad subject id: {self.subject!r}")
        if not is_relation_id(self.relation):
            raise ValueError(f"bad relation id: {self.relation!r}")
        if not is_entity_id(self.object):
            raise ValueError(f"bad object id: {self.object!r}")
        if self.start and self.end and self.start.earliest() > self.end.latest():
            raise ValueError(f"claim interval inverted: {self.start} > {self.end}")

    def key(self) -> tuple[str, str]:
        return (self.subject, self.relation)


@dataclass(slots=True)
class EntityRecord:
    """Names and Wikipedia titles of one entity, keyed by language."""

    id: str
    names: dict[str, AliasSet] = field(default_factory=dict)
    wiki_title: dict[str, str] = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.names and not self.wiki_title


def _claim_to_record(claim: Claim) -> dict:
    return {
        "subject": claim.subject,
        "relation": claim.relation,
        "object": claim.object,
        "start": claim.start.isoformat() if claim.start else None,
        "end": claim.end.isoformat() if claim.end else None,
        "line": claim.source_line,
    }


def _claim_from_record(rec: dict) -> Claim:
    return Claim(
        subject=rec["subject"],
        relation=rec["relation"],
        object=rec["object"],
        start=FuzzyDate.parse(rec["start"]) if rec.get("start") else None,
        end=FuzzyDate.parse(rec["end"]) if rec.get("end") else None,
        source_line=rec.get("line"),
    )


def _entity_to_record(entity: EntityRecord) -> dict:
    return {
        "id": entity.id,
        "names": {
            lang: {"label": a.canonical, "aliases": list(a.aliases)}
            for lang, a in sorted(entity.names.items())
        },
        "titles": dict(sorted(entity.wiki_title.items())),
    }


def _entity_from_record(rec: dict) -> EntityRecord:
    names = {
        lang: AliasSet(payload["label"], tuple(payload["aliases"]), language=lang)
        for lang, payload in rec.get("names", {}).items()
    }
    return EntityRecord(id=rec["id"], names=names, wiki_title=dict(rec.get("titles", {})))


class ClaimStoreWriter:
    """Streams claims and entities to disk; keeps only the indexes in memory."""

    def __init__(self, directory: Path | str):
        self.directory = Path(directory)
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StoreError(f"store location not writable: {self.directory}: {exc}") from exc
        self._claims_fh = (self.directory / "claims.jsonl").open("w", encoding="utf-8")
        self._entities_fh = (self.directory / "entities.jsonl").open("w", encoding="utf-8")
        self._claim_index: dict[str, list[int]] = {}
        self._entity_index: dict[str, int] = {}
        self._n_claims = 0
        self._n_entities = 0

    def add_claim(self, claim: Claim) -> None:
        self._claims_fh.write(canonical_json(_claim_to_record(claim)) + "\n")
        key = f"{claim.subject}|{claim.relation}"
        self._claim_index.setdefault(key, []).append(self._n_claims)
        self._n_claims += 1

    def add_entity(self, entity: EntityRecord) -> bool:
        """Store an entity record; duplicates of an already-stored id are dropped."""
        if entity.id in self._entity_index:
            return False
        self._entities_fh.write(canonical_json(_entity_to_record(entity)) + "\n")
        self._entity_index[entity.id] = self._n_entities
        self._n_entities += 1
        return True

    def has_entity(self, entity_id: str) -> bool:
        return entity_id in self._entity_index

    def finalize(self, dump_id: str, config_digest: str, counters: dict) -> None:
        self._claims_fh.close()
        self._entities_fh.close()
        (self.directory / "claims.idx.json").write_text(
            canonical_json(self._claim_index) + "\n", encoding="utf-8"
        )
        (self.directory / "entities.idx.json").write_text(
            canonical_json(self._entity_index) + "\n", encoding="utf-8"
        )
        manifest = {
            "dump_id": dump_id,
            "config_digest": config_digest,
            "claims": self._n_claims,
            "entities": self._n_entities,
            "counters": {k: counters[k] for k in sorted(counters)},
        }
        (self.directory / MANIFEST_NAME).write_text(
            canonical_json(manifest) + "\n", encoding="utf-8"
        )


class ClaimStore:
    """Read-only view over a store directory, fully loaded at open()."""

    def __init__(self, directory, claims, claim_index, entities, manifest):
        self.directory = Path(directory)
        self._claims: list[Claim] = claims
        self._claim_index: dict[str, list[int]] = claim_index
        self._entities: dict[str, EntityRecord] = entities
        self.manifest = manifest
        self.dump_id: str = manifest.get("dump_id", "")
        self.config_digest: str = manifest.get("config_digest", "")

    @classmethod
    def open(cls, directory: Path | str) -> "ClaimStore":
        directory = Path(directory)
        manifest_path = directory / MANIFEST_NAME
        if not manifest_path.exists():
            raise StoreError(f"not a claim store (no {MANIFEST_NAME}): {directory}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        claims = []
        with (directory / "claims.jsonl").open(encoding="utf-8") as fh:
            for line in fh:
                claims.append(_claim_from_record(json.loads(line)))
        claim_index = json.loads((directory / "claims.idx.json").read_text(encoding="utf-8"))
        entities = {}
        with (directory / "entities.jsonl").open(encoding="utf-8") as fh:
            for line in fh:
                record = _entity_from_record(json.loads(line))
                entities[record.id] = record
        return cls(directory, claims, claim_index, entities, manifest)

    def __len__(self) -> int:
        return len(self._claims)

    def claims_for(self, subject: str, relation: str) -> list[Claim]:
        rows = self._claim_index.get(f"{subject}|{relation}", [])
        return [self._claims[i] for i in rows]

    def iter_keys(self):
        """All (subject, relation) keys in deterministic natural-id order."""
        keys = [tuple(key.split("|", 1)) for key in self._claim_index]
        keys.sort(key=lambda sr: (id_sort_key(sr[0]), id_sort_key(sr[1])))
        return iter(keys)

    def iter_claims(self):
        return iter(self._claims)

    def entity(self, entity_id: str) -> EntityRecord | None:
        return self._entities.get(entity_id)

    def names(self, entity_id: str, language: str) -> AliasSet | None:
        record = self._entities.get(entity_id)
        return record.names.get(language) if record else None

    def title(self, entity_id: str, language: str) -> str | None:
        record = self._entities.get(entity_id)
        return record.wiki_title.get(language) if record else None

    def is_dangling(self, claim: Claim) -> bool:
        """True when the claim's object was filtered out of the dump subset."""
        return claim.object not in self._entities
