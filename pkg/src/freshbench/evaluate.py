"""Prompt rendering and model querying with live, record, and replay transports.

Prompts instruct the model to answer from the provided article(s); the
templates are fixed byte-for-byte and golden-file tested. Querying goes
through a chat-completions endpoint; record mode persists prompt-digest ->
output transcripts, replay mode serves answers from a transcript without any
network and (unless lenient) fails hard on a miss. Transport failures that
survive retries mark the sample unanswered: scored zero, counted separately.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import requests

from .dates import FuzzyDate
from .diff import TimeInterval
from .errors import ConfigError, TranscriptMissError
from .metrics import exact_match, parse_choice, token_f1

logger = logging.getLogger(__name__)

FORMAT_GENERATION = "generation"
FORMAT_MULTI_CHOICE = "multi_choice"

MODE_LIVE = "live"
MODE_RECORD = "record"
MODE_REPLAY = "replay"

GENERATION_HEADER = (
    "You are given an article and a question. Answer the question based on the given article "
    "as concisely as you can, using a single phrase or sentence if possible. "
    "Do not provide any explanation."
)

MULTI_CHOICE_HEADER = (
    "You are given an article, a question, and four options. Select one option to answer the "
    "question based on the given article. Only give the option (A, B, C, or D), "
    "and do not output any other words."
)

UNPARSED_KIND = "unparsed"

# transport(url, headers, payload, timeout) -> (status_code, body_text)
ModelTransport = Callable[[str, dict, dict, float], tuple[int, str]]


def prompt_context(record: Mapping) -> str:
    """Passages joined by blank lines; multi-passage contexts keep their prefixes."""
    context = record["context"]
    if isinstance(context, str):
        return context
    return "\n\n".join(context)


def render_prompt(record: Mapping, fmt: str) -> str:
    """Instantiate the fixed prompt template for one benchmark record."""
    context = prompt_context(record)
    question = record["question"]
    if fmt == FORMAT_GENERATION:
        return f"{GENERATION_HEADER}\n\nArticle: {context}\n\nQuestion: {question}\n\nAnswer:"
    if fmt == FORMAT_MULTI_CHOICE:
        options = record.get("options")
        if not options or len(options) != 4:
            raise ValueError(f"record {record.get('id')}: multi-choice needs 4 options")
        lines = "\n".join(f"{label}. {text}" for label, text in zip("ABCD", options))
        return (
            f"{MULTI_CHOICE_HEADER}\n\nArticle: {context}\n\n"
            f"Question: {question}\n{lines}\n\nAnswer:"
        )
    raise ValueError(f"unknown format: {fmt}")


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


@dataclass
class ModelEndpoint:
    """Where and how to query a model, or which transcript to replay."""

    base_url: str = ""
    model: str = ""
    auth_env: str | None = None
    temperature: float = 0.0
    max_output_tokens: int = 64
    mode: str = MODE_LIVE
    transcript_path: Path | None = None
    timeout: float = 60.0
    max_retries: int = 2
    backoff: tuple[float, ...] = (0.5, 1.0)
    lenient_replay: bool = False

    def __post_init__(self):
        if self.mode not in (MODE_LIVE, MODE_RECORD, MODE_REPLAY):
            raise ConfigError([f"endpoint mode must be live/record/replay, got {self.mode!r}"])
        if self.mode in (MODE_RECORD, MODE_REPLAY):
            if self.transcript_path is None:
                raise ConfigError([f"{self.mode} mode requires a transcript path"])
            self.transcript_path = Path(self.transcript_path)
        if self.mode == MODE_REPLAY and not Path(self.transcript_path).exists():
            raise ConfigError([f"replay transcript not found: {self.transcript_path}"])
        if self.mode in (MODE_LIVE, MODE_RECORD) and not self.base_url:
            raise ConfigError([f"{self.mode} mode requires a base_url"])


def _requests_model_transport(url: str, headers: dict, payload: dict, timeout: float):
    response = requests.post(url, headers=headers, json=payload, timeout=timeout)
    return response.status_code, response.text


class ModelClient:
    """One completion per prompt over a chat-completions endpoint or a transcript."""

    def __init__(
        self,
        endpoint: ModelEndpoint,
        transport: ModelTransport | None = None,
        sleep=time.sleep,
    ):
        self.endpoint = endpoint
        self._transport = transport or _requests_model_transport
        self._sleep = sleep
        self._transcript: dict[str, str] = {}
        self.unanswered = 0
        if endpoint.mode in (MODE_RECORD, MODE_REPLAY) and Path(endpoint.transcript_path).exists():
            self._load_transcript(endpoint.transcript_path)

    def _load_transcript(self, path: Path) -> None:
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                entry = json.loads(line)
                self._transcript[entry["digest"]] = entry["output"]

    def query(self, prompt: str) -> str | None:
        """Model output for one prompt; None when the model could not be reached."""
        digest = prompt_digest(prompt)
        if self.endpoint.mode == MODE_REPLAY:
            if digest in self._transcript:
                return self._transcript[digest]
            if self.endpoint.lenient_replay:
                self.unanswered += 1
                return None
            raise TranscriptMissError(f"transcript has no entry for prompt digest {digest}")
        if self.endpoint.mode == MODE_RECORD and digest in self._transcript:
            return self._transcript[digest]
        output = self._query_live(prompt)
        if output is None:
            self.unanswered += 1
            return None
        if self.endpoint.mode == MODE_RECORD:
            self._transcript[digest] = output
            with Path(self.endpoint.transcript_path).open("a", encoding="utf-8") as fh:
                fh.write(json.dumps({"digest": digest, "output": output},
                                    ensure_ascii=False, sort_keys=True) + "\n")
        return output

    def _query_live(self, prompt: str) -> str | None:
        url = self.endpoint.base_url.rstrip("/") + "/chat/completions"
        headers = {"Content-Type": "application/json"}
        if self.endpoint.auth_env:
            token = os.environ.get(self.endpoint.auth_env, "")
            if token:
                headers["Authorization"] = f"Bearer {token}"
        payload = {
            "model": self.endpoint.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.endpoint.temperature,
            "max_tokens": self.endpoint.max_output_tokens,
        }
        for attempt in range(self.endpoint.max_retries + 1):
            if attempt:
                pause = self.endpoint.backoff[min(attempt - 1, len(self.endpoint.backoff) - 1)]
                self._sleep(pause)
            try:
                status, body = self._transport(url, headers, payload, self.endpoint.timeout)
            except requests.RequestException as exc:
                logger.debug("model query attempt %d failed: %s", attempt, exc)
                continue
            if status != 200:
                logger.debug("model query attempt %d got status %d", attempt, status)
                continue
            try:
                parsed = json.loads(body)
                return parsed["choices"][0]["message"]["content"]
            except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
                logger.debug("model response unparseable: %s", exc)
                continue
        return None


@dataclass(frozen=True)
class EvalRecord:
    """One scored model response."""

    sample_id: str
    format: str
    raw_output: str | None
    prediction: str | None
    em: int | None
    f1: float | None
    acc: int | None
    correct_label: str | None
    option_kind: str | None
    unanswered: bool
    interval: TimeInterval | None

    def __post_init__(self):
        if self.em is not None and self.em not in (0, 1):
            raise ValueError("EM must be 0 or 1")
        if self.f1 is not None and not 0.0 <= self.f1 <= 1.0:
            raise ValueError("F1 must be within [0, 1]")
        if (self.option_kind is not None) != (self.format == FORMAT_MULTI_CHOICE):
            raise ValueError("option kind present iff multi-choice")


def _record_interval(record: Mapping) -> TimeInterval | None:
    interval = record.get("interval")
    if not interval:
        return None
    return TimeInterval(
        begin=FuzzyDate.parse(interval["begin"]), end=FuzzyDate.parse(interval["end"])
    )


def score_generation_output(
    record: Mapping, raw_output: str | None, articles: Sequence[str]
) -> EvalRecord:
    answers = record["answer"]
    if raw_output is None:
        em, f1, prediction = 0, 0.0, None
    else:
        em = exact_match(raw_output, answers, articles)
        f1 = token_f1(raw_output, answers, articles)
        prediction = raw_output.strip()
    return EvalRecord(
        sample_id=record["id"],
        format=FORMAT_GENERATION,
        raw_output=raw_output,
        prediction=prediction,
        em=em,
        f1=f1,
        acc=None,
        correct_label=None,
        option_kind=None,
        unanswered=raw_output is None,
        interval=_record_interval(record),
    )


def score_multichoice_output(record: Mapping, raw_output: str | None) -> EvalRecord:
    if not record.get("options"):
        raise ValueError(f"record {record.get('id')}: no multi-choice options")
    label = parse_choice(raw_output) if raw_output is not None else None
    correct_label = record["answer_multichoice"]
    if label is None:
        kind = UNPARSED_KIND
    else:
        kind = record["option_kinds"][ord(label) - ord("A")]
    return EvalRecord(
        sample_id=record["id"],
        format=FORMAT_MULTI_CHOICE,
        raw_output=raw_output,
        prediction=label,
        em=None,
        f1=None,
        acc=int(label == correct_label),
        correct_label=correct_label,
        option_kind=kind,
        unanswered=raw_output is None,
        interval=_record_interval(record),
    )


def evaluate_benchmark(
    records: Sequence[Mapping],
    client: ModelClient,
    fmt: str,
    articles: Sequence[str] = ("a", "an", "the"),
) -> list[EvalRecord]:
    """Query and score every benchmark record, ordered by sample id."""
    out = []
    for record in sorted(records, key=lambda r: r["id"]):
        prompt = render_prompt(record, fmt)
        raw_output = client.query(prompt)
        if fmt == FORMAT_GENERATION:
            out.append(score_generation_output(record, raw_output, articles))
        else:
            out.append(score_multichoice_output(record, raw_output))
    return out


def write_eval_records(records: Sequence[EvalRecord], path: Path | str) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in records:
            payload = {
                "sample_id": r.sample_id,
                "format": r.format,
                "raw_output": r.raw_output,
                "prediction": r.prediction,
                "em": r.em,
                "f1": r.f1,
                "acc": r.acc,
                "correct_label": r.correct_label,
                "option_kind": r.option_kind,
                "unanswered": r.unanswered,
                "interval": (
                    {"begin": r.interval.begin.isoformat(), "end": r.interval.end.isoformat()}
                    if r.interval
                    else None
                ),
            }
            fh.write(json.dumps(payload, ensure_ascii=False, sort_keys=True) + "\n")


def read_eval_records(path: Path | str) -> list[EvalRecord]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            interval = None
            if rec.get("interval"):
                interval = TimeInterval(
                    begin=FuzzyDate.parse(rec["interval"]["begin"]),
                    end=FuzzyDate.parse(rec["interval"]["end"]),
                )
            out.append(
                EvalRecord(
                    sample_id=rec["sample_id"],
                    format=rec["format"],
                    raw_output=rec["raw_output"],
                    prediction=rec["prediction"],
                    em=rec["em"],
                    f1=rec["f1"],
                    acc=rec["acc"],
                    correct_label=rec.get("correct_label"),
                    option_kind=rec["option_kind"],
                    unanswered=rec["unanswered"],
                    interval=interval,
                )
            )
    return out
