"""Shared fixtures: dump builders, a hand-built mini scenario, synthetic samples."""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest
import yaml

from freshbench.dates import FuzzyDate
from freshbench.diff import CutoffWindow, TimeInterval, make_intervals
from freshbench.fetch import DiskCache
from freshbench.samples import PassageMeta, Sample
from freshbench.store import AliasSet
from freshbench.wiki import RevisionRef, SupportingDocument, extract_params, revisions_params

UTC = timezone.utc


# ---------------------------------------------------------------------------
# Wikidata dump builders


def wd_time(iso: str, precision: int = 11) -> dict:
    return {
        "snaktype": "value",
        "datavalue": {"type": "time", "value": {"time": f"+{iso}T00:00:00Z",
                                                "precision": precision}},
    }


def wd_statement(target: str, start=None, end=None, rank: str = "normal",
                 value_type: str = "wikibase-entityid") -> dict:
    if value_type == "wikibase-entityid":
        datavalue = {"type": "wikibase-entityid", "value": {"id": target}}
    else:
        datavalue = {"type": value_type, "value": target}
    statement = {
        "mainsnak": {"snaktype": "value", "datavalue": datavalue},
        "rank": rank,
        "qualifiers": {},
    }
    if start is not None:
        iso, precision = start if isinstance(start, tuple) else (start, 11)
        statement["qualifiers"]["P580"] = [wd_time(iso, precision)]
    if end is not None:
        iso, precision = end if isinstance(end, tuple) else (end, 11)
        statement["qualifiers"]["P582"] = [wd_time(iso, precision)]
    return statement


def wd_entity(qid: str, label: str | None = None, aliases=(), title: str | None = None,
              claims: dict | None = None, lang: str = "en") -> dict:
    entity: dict = {"type": "item", "id": qid, "labels": {}, "aliases": {},
                    "claims": claims or {}, "sitelinks": {}}
    if label:
        entity["labels"][lang] = {"language": lang, "value": label}
    if aliases:
        entity["aliases"][lang] = [{"language": lang, "value": a} for a in aliases]
    if title:
        entity["sitelinks"][f"{lang}wiki"] = {"site": f"{lang}wiki", "title": title}
    return entity


def write_dump(path: Path, entries) -> Path:
    """Write entities (dicts) and raw lines (strs) as an array-wrapped dump."""
    with path.open("w", encoding="utf-8") as fh:
        fh.write("[\n")
        for entry in entries:
            if isinstance(entry, str):
                fh.write(entry + "\n")
            else:
                fh.write(json.dumps(entry, ensure_ascii=False) + ",\n")
        fh.write("]\n")
    return path


# ---------------------------------------------------------------------------
# MediaWiki API response builders


def api_revisions_response(title: str, revisions: list[tuple[int, str]],
                           rvcontinue: str | None = None) -> dict:
    payload = {
        "batchcomplete": True,
        "query": {"pages": [{
            "pageid": 1,
            "ns": 0,
            "title": title,
            "revisions": [{"revid": revid, "timestamp": stamp} for revid, stamp in revisions],
        }]},
    }
    if rvcontinue:
        payload["continue"] = {"rvcontinue": rvcontinue}
    return payload


def api_extract_response(title: str, extract: str) -> dict:
    return {
        "batchcomplete": True,
        "query": {"pages": [{"pageid": 1, "ns": 0, "title": title, "extract": extract}]},
    }


def api_missing_response(title: str) -> dict:
    return {"batchcomplete": True, "query": {"pages": [{"title": title, "missing": True}]}}


class FakeTransport:
    """Canned (url, params) -> (status, body) mapping that records every call."""

    def __init__(self):
        self.responses: dict[tuple, tuple[int, str]] = {}
        self.calls: list[tuple[str, dict]] = []

    @staticmethod
    def _key(url: str, params: dict) -> tuple:
        return (url, tuple(sorted(params.items())))

    def add(self, url: str, params: dict, body, status: int = 200) -> None:
        text = body if isinstance(body, str) else json.dumps(body, ensure_ascii=False)
        self.responses[self._key(url, params)] = (status, text)

    def __call__(self, url: str, params: dict, timeout: float):
        self.calls.append((url, dict(params)))
        key = self._key(url, params)
        if key not in self.responses:
            raise AssertionError(f"unexpected request: {url} {sorted(params.items())}")
        return self.responses[key]


class FakeClock:
    """Monotonic clock advanced by the paired sleep()."""

    def __init__(self):
        self.now = 0.0
        self.sleeps: list[float] = []

    def __call__(self) -> float:
        return self.now

    def sleep(self, seconds: float) -> None:
        self.sleeps.append(seconds)
        self.now += seconds


# ---------------------------------------------------------------------------
# The hand-built mini scenario (one sports shift, one politics shift)

WIKI_EN = "https://en.wikipedia.org/w/api.php"

MESSI_Q, PSG_Q, INTER_Q = "Q615", "Q483020", "Q23905406"
MARTINO_Q, CIOLACU_Q, PM_RO_Q, CHAMBER_Q = "Q372051", "Q16593500", "Q180674", "Q584909"

MESSI_NAMES = ("Lionel Andrés Messi", "Lionel Messi", "Lionel Andres Messi")
INTER_NAMES = ("Inter Miami CF", "Inter Miami", "Club Internacional de Fútbol Miami")
PSG_NAMES = ("Paris Saint-Germain F.C.", "Paris Saint-Germain Football Club",
             "Paris Saint-Germain FC")
MARTINO_NAMES = ("Gerardo Martino", "Tata Martino", "Gerardo Daniel Martino")

MESSI_LEAD = (
    "Lionel Andrés Messi (born 24 June 1987), also known as Leo Messi, is an Argentine "
    "professional footballer who plays as a forward for Major League Soccer club Inter Miami "
    "and captains the Argentina national team."
)
MESSI_FULL = MESSI_LEAD + (
    "\n\n== Club career ==\nMessi joined Inter Miami in July 2023 after two seasons in Paris."
)
MARTINO_LEAD = (
    "Gerardo Daniel Martino (born 20 November 1962), known as Tata Martino, is an Argentine "
    "football coach who is the head coach of Major League Soccer club Inter Miami."
)
MARTINO_FULL = MARTINO_LEAD + (
    "\n\n== Career ==\nMartino previously managed Barcelona and the Argentina national team."
)
CIOLACU_LEAD = (
    "Marcel Ciolacu (born 28 November 1967) is a Romanian politician serving as the "
    "Prime Minister of Romania since June 2023."
)
CIOLACU_FULL = CIOLACU_LEAD + (
    "\n\n== Political career ==\nCiolacu previously served as President of the Chamber "
    "of Deputies."
)

MESSI_REV = (1165000001, "2023-07-16T10:00:00Z")
MARTINO_REV = (1165000002, "2023-07-20T08:00:00Z")
CIOLACU_REV = (1165000003, "2023-06-16T12:00:00Z")


def mini_dump_entities() -> list[dict]:
    return [
        wd_entity(
            MESSI_Q, MESSI_NAMES[0], MESSI_NAMES[1:], "Lionel Messi",
            claims={"P54": [
                wd_statement(PSG_Q, start="2021-08-10", end="2023-06-30"),
                wd_statement(INTER_Q, start="2023-07-15"),
            ]},
        ),
        wd_entity(PSG_Q, PSG_NAMES[0], PSG_NAMES[1:], "Paris Saint-Germain F.C."),
        wd_entity(
            INTER_Q, INTER_NAMES[0], INTER_NAMES[1:], "Inter Miami CF",
            claims={"P286": [wd_statement(MARTINO_Q, start="2023-06-28")]},
        ),
        wd_entity(MARTINO_Q, MARTINO_NAMES[0], MARTINO_NAMES[1:], "Gerardo Martino"),
        wd_entity(
            CIOLACU_Q, "Marcel Ciolacu", (), "Marcel Ciolacu",
            claims={"P39": [
                wd_statement(CHAMBER_Q, start="2021-11-23", end="2023-06-14"),
                wd_statement(PM_RO_Q, start="2023-06-15"),
            ]},
        ),
        wd_entity(PM_RO_Q, "Prime Minister of Romania", (), "Prime Minister of Romania"),
        wd_entity(CHAMBER_Q, "President of the Chamber of Deputies", (),
                  "President of the Chamber of Deputies"),
        # coordinate-only entity: its statements are ignored by the relation filter
        wd_entity("Q99999", "Somewhere", (), "Somewhere",
                  claims={"P625": [wd_statement("0,0", value_type="globecoordinate")]}),
    ]


def add_language(entity: dict, lang: str, label: str, aliases=(), title: str | None = None):
    entity["labels"][lang] = {"language": lang, "value": label}
    if aliases:
        entity["aliases"][lang] = [{"language": lang, "value": a} for a in aliases]
    if title:
        entity["sitelinks"][f"{lang}wiki"] = {"site": f"{lang}wiki", "title": title}
    return entity


WIKI_DE = "https://de.wikipedia.org/w/api.php"

MESSI_LEAD_DE = (
    "Lionel Andrés Messi (geboren am 24. Juni 1987) ist ein argentinischer Fußballspieler, "
    "der als Stürmer für den Major-League-Soccer-Klub Inter Miami spielt."
)
MESSI_FULL_DE = MESSI_LEAD_DE + "\n\n== Karriere ==\nMessi wechselte 2023 zu Inter Miami."
MESSI_REV_DE = (1265000001, "2023-07-17T09:00:00Z")


def multilingual_dump_entities() -> list[dict]:
    entities = mini_dump_entities()
    by_id = {e["id"]: e for e in entities}
    add_language(by_id[MESSI_Q], "de", "Lionel Andrés Messi", ("Lionel Messi",),
                 title="Lionel Messi")
    add_language(by_id[PSG_Q], "de", "Paris Saint-Germain", title="Paris Saint-Germain")
    add_language(by_id[INTER_Q], "de", "Inter Miami CF", ("Inter Miami",),
                 title="Inter Miami CF")
    # Martino and the politics entities stay English-only: the German multi-hop
    # chain and the German politics sample must be skipped with counters.
    return entities


def warm_multilingual_cache(cache_dir: Path) -> None:
    warm_mini_cache(cache_dir)
    cache = DiskCache(cache_dir)

    def put(params: dict, body: dict) -> None:
        cache.put(WIKI_DE, params, json.dumps(body, ensure_ascii=False))

    put(revisions_params("Lionel Messi", datetime(2023, 7, 15, tzinfo=UTC)),
        api_revisions_response("Lionel Messi", [MESSI_REV_DE]))
    put(extract_params(MESSI_REV_DE[0], intro_only=True),
        api_extract_response("Lionel Messi", MESSI_LEAD_DE))
    put(extract_params(MESSI_REV_DE[0], intro_only=False),
        api_extract_response("Lionel Messi", MESSI_FULL_DE))


MINI_CONFIG = {
    "paths": {"dump": "mini_dump.json", "store": "store", "cache": "cache", "output": "out"},
    "languages": ["en"],
    "window": {"cutoff": "2023-01-01", "current": "2024-08-01"},
    "interval_months": 3,
    "seed": 7,
    "hops": 2,
    "distractors": [0],
    "articles": {"en": ["a", "an", "the"]},
    "relations": {
        "P54": {
            "name": "member of sports team", "anchor": "subject", "hop": True,
            "templates": {"en": {
                "question": "What sports team is {} a member of?",
                "nominal": "the sports team that {} is a member of",
            }},
        },
        "P286": {
            "name": "head coach", "anchor": "object", "hop": True,
            "templates": {"en": {
                "question": "Who is the coach of {}?",
                "nominal": "the coach of {}",
            }},
        },
        "P39": {
            "name": "position held", "anchor": "subject", "hop": True,
            "templates": {"en": {
                "question": "What is the position held by {}?",
                "nominal": "the position held by {}",
            }},
        },
    },
}


def warm_mini_cache(cache_dir: Path) -> None:
    """Record the API responses the mini scenario needs, keyed as the client keys them."""
    cache = DiskCache(cache_dir)

    def put(params: dict, body: dict) -> None:
        cache.put(WIKI_EN, params, json.dumps(body, ensure_ascii=False))

    put(revisions_params("Lionel Messi", datetime(2023, 7, 15, tzinfo=UTC)),
        api_revisions_response("Lionel Messi", [MESSI_REV]))
    put(extract_params(MESSI_REV[0], intro_only=True),
        api_extract_response("Lionel Messi", MESSI_LEAD))
    put(extract_params(MESSI_REV[0], intro_only=False),
        api_extract_response("Lionel Messi", MESSI_FULL))

    put(revisions_params("Gerardo Martino", datetime(2023, 7, 15, tzinfo=UTC)),
        api_revisions_response("Gerardo Martino", [MARTINO_REV]))
    put(extract_params(MARTINO_REV[0], intro_only=True),
        api_extract_response("Gerardo Martino", MARTINO_LEAD))
    put(extract_params(MARTINO_REV[0], intro_only=False),
        api_extract_response("Gerardo Martino", MARTINO_FULL))

    put(revisions_params("Marcel Ciolacu", datetime(2023, 6, 15, tzinfo=UTC)),
        api_revisions_response("Marcel Ciolacu", [CIOLACU_REV]))
    put(extract_params(CIOLACU_REV[0], intro_only=True),
        api_extract_response("Marcel Ciolacu", CIOLACU_LEAD))
    put(extract_params(CIOLACU_REV[0], intro_only=False),
        api_extract_response("Marcel Ciolacu", CIOLACU_FULL))


DE_TEMPLATES = {
    "P54": {"question": "Bei welchem Sportverein ist {} Mitglied?",
            "nominal": "der Sportverein, bei dem {} Mitglied ist"},
    "P286": {"question": "Wer ist der Trainer von {}?",
             "nominal": "der Trainer von {}"},
    "P39": {"question": "Welches Amt hat {} inne?",
            "nominal": "das Amt von {}"},
}


def multilingual_config() -> dict:
    import copy

    config = copy.deepcopy(MINI_CONFIG)
    config["languages"] = ["en", "de"]
    config["articles"] = {"en": ["a", "an", "the"], "de": []}
    for pid, templates in DE_TEMPLATES.items():
        config["relations"][pid]["templates"]["de"] = dict(templates)
    return config


@dataclass
class MiniWorkspace:
    root: Path
    dump_path: Path
    config_path: Path
    store_dir: Path
    cache_dir: Path
    output_dir: Path


@pytest.fixture
def mini_workspace(tmp_path) -> MiniWorkspace:
    dump_path = write_dump(tmp_path / "mini_dump.json", mini_dump_entities())
    config_path = tmp_path / "config.yaml"
    config_path.write_text(yaml.safe_dump(MINI_CONFIG), encoding="utf-8")
    cache_dir = tmp_path / "cache"
    warm_mini_cache(cache_dir)
    return MiniWorkspace(
        root=tmp_path,
        dump_path=dump_path,
        config_path=config_path,
        store_dir=tmp_path / "store",
        cache_dir=cache_dir,
        output_dir=tmp_path / "out",
    )


@pytest.fixture
def multilingual_workspace(tmp_path) -> MiniWorkspace:
    dump_path = write_dump(tmp_path / "mini_dump.json", multilingual_dump_entities())
    config_path = tmp_path / "config.yaml"
    config_path.write_text(yaml.safe_dump(multilingual_config()), encoding="utf-8")
    cache_dir = tmp_path / "cache"
    warm_multilingual_cache(cache_dir)
    return MiniWorkspace(
        root=tmp_path,
        dump_path=dump_path,
        config_path=config_path,
        store_dir=tmp_path / "store",
        cache_dir=cache_dir,
        output_dir=tmp_path / "out",
    )


# ---------------------------------------------------------------------------
# Synthetic factory fixtures (no network, no store)

SYNTH_WINDOW = CutoffWindow(cutoff=FuzzyDate.parse("2023-05-01"),
                            current=FuzzyDate.parse("2024-08-01"))

# Late enough to postdate every synthetic update, so any document can pad any sample.
SYNTH_DOC_STAMP = datetime(2024, 7, 30, tzinfo=UTC)


def synth_gold_sample(i: int, multi_hop: bool, intervals: list[TimeInterval]) -> Sample:
    update_time = FuzzyDate.from_date(
        (datetime(2023, 5, 1, tzinfo=UTC) + timedelta(days=(i * 9) % 450)).date()
    )
    subject = AliasSet(f"Subject {i}", (f"Subject {i} Jr",), language="en")
    answer = AliasSet(f"Answer Entity {i}", (f"AE {i}",), language="en")
    old = AliasSet(f"Old Answer {i}", (), language="en")
    task = "multi_hop" if multi_hop else "single_hop"
    hops = 2 if multi_hop else 1
    texts = tuple(
        f"Gold article {j} for item {i}. It names Subject {i} and Answer Entity {i}."
        for j in range(hops)
    )
    passages = tuple(
        PassageMeta(page_title=f"Gold page {i}.{j}", revision_id=100000 + i * 10 + j,
                    timestamp=SYNTH_DOC_STAMP, gold=True)
        for j in range(hops)
    )
    interval = next(iv for iv in intervals if iv.contains(update_time))
    return Sample(
        id=f"{'m' if multi_hop else 's'}{i:04d}",
        task=task,
        language="en",
        question=f"What is fact {i} about Subject {i}?",
        context=texts,
        passages=passages,
        answers=answer.names(),
        subject_names=subject,
        object_names=answer if not multi_hop else AliasSet(f"Mid Entity {i}", (), language="en"),
        old_object_names=old,
        relation="P54" if i % 2 == 0 else "P39",
        answer_relation="P286" if multi_hop else ("P54" if i % 2 == 0 else "P39"),
        subject_id=f"Q{700000 + i}",
        object_id=f"Q{710000 + i}",
        old_object_id=f"Q{720000 + i}",
        update_time=update_time,
        hops=hops,
        gold_positions=tuple(range(hops)),
        distractor_count=0,
        interval=interval,
    )


def sample_documents(sample: Sample) -> list[SupportingDocument]:
    """Reconstruct a sample's gold documents (the distractor pool currency)."""
    return [
        SupportingDocument(
            text=text,
            summary=text,
            revision=RevisionRef(page_title=p.page_title, revision_id=p.revision_id,
                                 timestamp=p.timestamp),
            anchor_entity=sample.subject_id,
            language=sample.language,
        )
        for text, p in zip(sample.context, sample.passages)
    ]


@pytest.fixture
def synth_fixture():
    """50 gold samples (40 single-hop, 10 multi-hop) plus their document pool."""
    intervals = make_intervals(SYNTH_WINDOW.cutoff, SYNTH_WINDOW.current, 3)
    samples = [synth_gold_sample(i, multi_hop=(i % 5 == 4), intervals=intervals)
               for i in range(50)]
    docs = {s.id: sample_documents(s) for s in samples}
    return samples, docs, intervals, SYNTH_WINDOW
