"""Supporting documents: post-update Wikipedia revisions whose lead names both entities.

For each knowledge update we pick an anchor page (subject's or object's
article, per relation configuration), list its revisions made at or after the
update's start instant, and walk them in ascending order. The first revision
whose lead section mentions both the subject and the object (by any alias,
word-boundary matched) becomes the supporting document. The earliest
qualifying revision keeps the document close to the knowledge event; the walk
is capped to bound fetching on heavily edited pages.

The MediaWiki Action API is used for both the revision listing and the
plain-text extraction of the full page and its lead section; the exact
endpoint and parameters form the cache key.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone

from .diff import UpdatedKnowledge
from .errors import ConfigError, PageMissingError
from .fetch import CachingHttpClient, FetchPolicy
from .store import AliasSet, ClaimStore
from .textmatch import contains_any

logger = logging.getLogger(__name__)

REVISION_SCAN_CAP = 8
REVISIONS_PAGE_SIZE = 50

ANCHOR_SUBJECT = "subject"
ANCHOR_OBJECT = "object"


@dataclass(frozen=True, slots=True)
class RevisionRef:
    """One revision of a Wikipedia page."""

    page_title: str
    revision_id: int
    timestamp: datetime

    def __post_init__(self):
        if self.revision_id <= 0:
            raise ValueError(f"revision id must be positive: {self.revision_id}")


@dataclass(frozen=True, slots=True)
class SupportingDocument:
    """Article text anchored to a post-update revision."""

    text: str
    summary: str
    revision: RevisionRef
    anchor_entity: str
    language: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("document text must be non-empty")
        if not self.text.startswith(self.summary):
            raise ValueError("summary must be a prefix section of the text")


def parse_api_timestamp(value: str) -> datetime:
    return datetime.fromisoformat(value.replace("Z", "+00:00")).astimezone(timezone.utc)


def format_api_timestamp(value: datetime) -> str:
    return value.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def revisions_params(title: str, since: datetime, limit: int = REVISIONS_PAGE_SIZE) -> dict:
    return {
        "action": "query",
        "format": "json",
        "formatversion": "2",
        "prop": "revisions",
        "titles": title,
        "rvprop": "ids|timestamp",
        "rvdir": "newer",
        "rvstart": format_api_timestamp(since),
        "rvlimit": str(limit),
    }


def extract_params(revision_id: int, intro_only: bool) -> dict:
    params = {
        "action": "query",
        "format": "json",
        "formatversion": "2",
        "prop": "extracts",
        "explaintext": "1",
        "revids": str(revision_id),
    }
    if intro_only:
        params["exintro"] = "1"
    return params


class WikipediaClient:
    """Revision listing and plain-text extraction over the cached HTTP client."""

    def __init__(self, policy: FetchPolicy, http: CachingHttpClient | None = None):
        self.policy = policy
        self.http = http or CachingHttpClient(policy)

    def fetch_revisions(self, title: str, since: datetime, language: str) -> list[RevisionRef]:
        """All revisions of a page at or after ``since``, ascending by timestamp."""
        if not title:
            raise ValueError("page title must be non-empty")
        url = self.policy.endpoint(language)
        params = revisions_params(title, since)
        refs: list[RevisionRef] = []
        while True:
            payload = self.http.get_json(url, params)
            pages = payload.get("query", {}).get("pages", [])
            if not pages or pages[0].get("missing"):
                raise PageMissingError(f"page not found: {title} ({language})")
            for rev in pages[0].get("revisions", []):
                refs.append(
                    RevisionRef(
                        page_title=pages[0].get("title", title),
                        revision_id=int(rev["revid"]),
                        timestamp=parse_api_timestamp(rev["timestamp"]),
                    )
                )
            cont = payload.get("continue", {}).get("rvcontinue")
            if not cont:
                break
            params = dict(params, rvcontinue=cont)
        refs.sort(key=lambda r: (r.timestamp, r.revision_id))
        return refs

    def fetch_extract(self, revision_id: int, language: str, intro_only: bool) -> str:
        url = self.policy.endpoint(language)
        payload = self.http.get_json(url, extract_params(revision_id, intro_only))
        pages = payload.get("query", {}).get("pages", [])
        if not pages or pages[0].get("missing"):
            raise PageMissingError(f"no page for revision {revision_id} ({language})")
        return pages[0].get("extract", "")


def summary_contains(summary: str, names: AliasSet) -> bool:
    """True iff any name of the set occurs in the summary (folded, word-bounded)."""
    return contains_any(summary, names.names())


def choose_anchor(update: UpdatedKnowledge, relation_config) -> str:
    """Subject or object entity id, per the relation's configured anchor side."""
    relation = relation_config.get(update.relation)
    if relation is None:
        raise ConfigError([f"relation {update.relation} missing from configuration"])
    anchor = relation.anchor
    if anchor == ANCHOR_SUBJECT:
        return update.subject
    if anchor == ANCHOR_OBJECT:
        return update.object
    raise ConfigError([f"relation {update.relation}: anchor must be subject or object"])


def document_for_link(
    client: WikipediaClient,
    store: ClaimStore,
    subject: str,
    obj: str,
    anchor: str,
    since: datetime,
    language: str,
    counters: Counter | None = None,
    scan_cap: int = REVISION_SCAN_CAP,
) -> SupportingDocument | None:
    """First post-``since`` revision of the anchor page whose lead names both entities."""
    counters = counters if counters is not None else Counter()
    title = store.title(anchor, language)
    if not title:
        counters["docs_no_sitelink"] += 1
        return None
    subject_names = store.names(subject, language)
    object_names = store.names(obj, language)
    if subject_names is None or object_names is None:
        counters["docs_unnamed_entity"] += 1
        return None
    try:
        revisions = client.fetch_revisions(title, since, language)
    except PageMissingError:
        counters["docs_page_missing"] += 1
        return None
    for revision in revisions[:scan_cap]:
        summary = client.fetch_extract(revision.revision_id, language, intro_only=True)
        if not summary:
            counters["docs_empty_summary"] += 1
            continue
        if not (summary_contains(summary, subject_names) and summary_contains(summary, object_names)):
            counters["docs_summary_rejected"] += 1
            continue
        text = client.fetch_extract(revision.revision_id, language, intro_only=False)
        if not text.startswith(summary):
            counters["docs_summary_not_prefix"] += 1
            continue
        return SupportingDocument(
            text=text,
            summary=summary,
            revision=revision,
            anchor_entity=anchor,
            language=language,
        )
    counters["docs_no_qualifying_revision"] += 1
    return None


def build_supporting_document(
    update: UpdatedKnowledge,
    store: ClaimStore,
    relation_config,
    client: WikipediaClient,
    language: str,
    counters: Counter | None = None,
    scan_cap: int = REVISION_SCAN_CAP,
) -> SupportingDocument | None:
    """Supporting document for an update, or None when no revision qualifies."""
    anchor = choose_anchor(update, relation_config)
    return document_for_link(
        client,
        store,
        subject=update.subject,
        obj=update.object,
        anchor=anchor,
        since=update.update_time.earliest_instant(),
        language=language,
        counters=counters,
        scan_cap=scan_cap,
    )
