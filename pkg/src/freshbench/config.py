"""Declarative configuration: relations with templates, languages, windows, seeds, paths.

One file drives the whole pipeline; validation collects every violation with a
field path rather than stopping at the first. The shipped default covers a
representative set of relations over sports, politics, and entertainment.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .dates import FuzzyDate
from .diff import CutoffWindow
from .errors import ConfigError

ANCHOR_SIDES = ("subject", "object")


@dataclass(frozen=True)
class TemplatePair:
    """Interrogative and optional noun-phrase template for one relation and language."""

    question: str
    nominal: str | None = None


@dataclass(frozen=True)
class RelationConfig:
    pid: str
    name: str
    anchor: str
    hop: bool
    templates: dict[str, TemplatePair] = field(default_factory=dict)


@dataclass(frozen=True)
class EndpointDefaults:
    """Model endpoint defaults; CLI flags override them."""

    base_url: str = ""
    model: str = ""
    auth_env: str | None = None
    temperature: float = 0.0
    max_output_tokens: int = 64


@dataclass
class BuildConfig:
    dump_path: Path
    store_dir: Path
    cache_dir: Path
    output_dir: Path
    languages: list[str]
    window: CutoffWindow
    interval_months: int
    seed: int
    hops: int
    distractor_counts: list[int]
    relations: dict[str, RelationConfig]
    articles: dict[str, list[str]] = field(default_factory=lambda: {"en": ["a", "an", "the"]})
    rate_per_second: float = 2.0
    max_retries: int = 3
    offline: bool = False
    dump_id: str | None = None
    endpoint: EndpointDefaults = field(default_factory=EndpointDefaults)

    def digest(self) -> str:
        """Stable digest of everything that shapes the benchmark content."""
        payload = {
            "languages": self.languages,
            "window": [self.window.cutoff.isoformat(), self.window.current.isoformat()],
            "interval_months": self.interval_months,
            "seed": self.seed,
            "hops": self.hops,
            "distractor_counts": self.distractor_counts,
            "relations": {
                pid: {
                    "anchor": rc.anchor,
                    "hop": rc.hop,
                    "templates": {
                        lang: [tp.question, tp.nominal] for lang, tp in sorted(rc.templates.items())
                    },
                }
                for pid, rc in sorted(self.relations.items())
            },
        }
        blob = json.dumps(payload, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def default_config_text() -> str:
    return resources.files("freshbench.data").joinpath("default_config.yaml").read_text(
        encoding="utf-8"
    )


def _placeholder_ok(template: str) -> bool:
    return template.count("{}") == 1


def _parse_relation(pid: str, raw: dict, languages: list[str], problems: list[str]) -> RelationConfig:
    where = f"relations.{pid}"
    anchor = raw.get("anchor")
    if anchor not in ANCHOR_SIDES:
        problems.append(f"{where}.anchor: must be one of {ANCHOR_SIDES}, got {anchor!r}")
        anchor = "subject"
    hop = bool(raw.get("hop", False))
    templates: dict[str, TemplatePair] = {}
    for lang, entry in (raw.get("templates") or {}).items():
        t_where = f"{where}.templates.{lang}"
        question = (entry or {}).get("question")
        nominal = (entry or {}).get("nominal")
        if not question:
            problems.append(f"{t_where}.question: required")
            continue
        if not _placeholder_ok(question):
            problems.append(f"{t_where}.question: needs exactly one '{{}}' placeholder")
            continue
        if nominal is not None and not _placeholder_ok(nominal):
            problems.append(f"{t_where}.nominal: needs exactly one '{{}}' placeholder")
            continue
        templates[lang] = TemplatePair(question=question, nominal=nominal)
    for lang in languages:
        if lang not in templates:
            problems.append(f"{where}.templates: missing language {lang}")
        elif hop and templates[lang].nominal is None:
            problems.append(f"{where}.templates.{lang}.nominal: required for hop-eligible relations")
    return RelationConfig(pid=pid, name=str(raw.get("name", pid)), anchor=anchor, hop=hop,
                          templates=templates)


def _parse_date(raw, where: str, problems: list[str]) -> FuzzyDate | None:
    try:
        return FuzzyDate.parse(str(raw))
    except (ValueError, TypeError):
        problems.append(f"{where}: not a date (expected YYYY[-MM[-DD]]), got {raw!r}")
        return None


def load_config(path: Path | str) -> BuildConfig:
    """Parse and validate a config file; raises ConfigError listing all violations."""
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"config file not found: {path}"])
    raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    return parse_config(raw, base_dir=path.parent)


def parse_config(raw: dict, base_dir: Path | str = ".") -> BuildConfig:
    base_dir = Path(base_dir)
    problems: list[str] = []

    languages = raw.get("languages") or []
    if not languages:
        problems.append("languages: must list at least one language code")
    languages = [str(lang) for lang in languages]

    window_raw = raw.get("window") or {}
    cutoff = _parse_date(window_raw.get("cutoff"), "window.cutoff", problems)
    current = _parse_date(window_raw.get("current"), "window.current", problems)
    window = None
    if cutoff and current:
        if cutoff.earliest() >= current.earliest():
            problems.append("window: cutoff must precede current")
        else:
            window = CutoffWindow(cutoff=cutoff, current=current)

    interval_months = raw.get("interval_months", 3)
    if not isinstance(interval_months, int) or interval_months < 1:
        problems.append(f"interval_months: must be a positive integer, got {interval_months!r}")

    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        problems.append(f"seed: must be an integer, got {seed!r}")
        seed = 0

    hops = raw.get("hops", 2)
    if not isinstance(hops, int) or hops < 2:
        problems.append(f"hops: must be an integer >= 2, got {hops!r}")
        hops = 2

    distractor_counts = raw.get("distractors", [0])
    if not isinstance(distractor_counts, list) or any(
        not isinstance(n, int) or n < 0 for n in distractor_counts
    ):
        problems.append(f"distractors: must be a list of integers >= 0, got {distractor_counts!r}")
        distractor_counts = [0]
    if 0 not in distractor_counts:
        distractor_counts = [0, *distractor_counts]

    relations_raw = raw.get("relations") or {}
    if not relations_raw:
        problems.append("relations: at least one relation required")
    relations = {}
    for pid, entry in relations_raw.items():
        if not str(pid).startswith("P") or not str(pid)[1:].isdigit():
            problems.append(f"relations.{pid}: not a P-number relation id")
            continue
        relations[str(pid)] = _parse_relation(str(pid), entry or {}, languages, problems)

    paths_raw = raw.get("paths") or {}
    missing = [k for k in ("dump", "store", "cache", "output") if not paths_raw.get(k)]
    for key in missing:
        problems.append(f"paths.{key}: required")

    articles = {
        str(lang): [str(a) for a in arts]
        for lang, arts in (raw.get("articles") or {"en": ["a", "an", "the"]}).items()
    }

    endpoint_raw = raw.get("endpoint") or {}
    endpoint = EndpointDefaults(
        base_url=str(endpoint_raw.get("base_url", "")),
        model=str(endpoint_raw.get("model", "")),
        auth_env=endpoint_raw.get("auth_env"),
        temperature=float(endpoint_raw.get("temperature", 0.0)),
        max_output_tokens=int(endpoint_raw.get("max_output_tokens", 64)),
    )

    fetch_raw = raw.get("fetch") or {}
    rate = float(fetch_raw.get("rate_per_second", 2.0))
    if rate <= 0:
        problems.append(f"fetch.rate_per_second: must be positive, got {rate}")
        rate = 2.0

    if problems:
        raise ConfigError(problems)

    def _resolve(key: str) -> Path:
        p = Path(paths_raw[key])
        return p if p.is_absolute() else base_dir / p

    return BuildConfig(
        dump_path=_resolve("dump"),
        store_dir=_resolve("store"),
        cache_dir=_resolve("cache"),
        output_dir=_resolve("output"),
        languages=languages,
        window=window,  # type: ignore[arg-type]
        interval_months=interval_months,
        seed=seed,
        hops=hops,
        distractor_counts=sorted(set(distractor_counts)),
        relations=relations,
        articles=articles,
        rate_per_second=rate,
        max_retries=int(fetch_raw.get("max_retries", 3)),
        offline=bool(fetch_raw.get("offline", False)),
        dump_id=raw.get("dump_id"),
        endpoint=endpoint,
    )
