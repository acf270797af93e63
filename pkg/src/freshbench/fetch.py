"""Rate-limited HTTP fetching through a mandatory on-disk cache.

Every request is keyed by a digest of (url, sorted params); responses are
stored one file per digest with an append-only manifest for audit. Offline
mode never touches the transport: a miss raises CacheMissError naming the
request. Retries cover connection errors and retryable status codes with a
fixed backoff schedule; exhaustion raises TransientFetchError so callers can
skip the item and resume on a later run.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import requests

from .errors import CacheMissError, TransientFetchError

logger = logging.getLogger(__name__)

RETRYABLE_STATUS_CODES = {429, 500, 502, 503, 504}

# transport(url, params, timeout) -> (status_code, body_text)
Transport = Callable[[str, dict, float], tuple[int, str]]


@dataclass
class FetchPolicy:
    """Fetching behavior: endpoint template, politeness, retries, cache location."""

    cache_dir: Path
    base_url: str = "https://{lang}.wikipedia.org/w/api.php"
    max_requests_per_second: float = 2.0
    max_retries: int = 3
    backoff: tuple[float, ...] = (0.5, 1.0, 2.0)
    timeout: float = 30.0
    offline: bool = False
    user_agent: str = "freshbench/0.1 (knowledge-update benchmark builder)"

    def __post_init__(self):
        if self.max_requests_per_second <= 0:
            raise ValueError("max_requests_per_second must be positive")
        self.cache_dir = Path(self.cache_dir)

    def endpoint(self, language: str) -> str:
        return self.base_url.format(lang=language)


def request_digest(url: str, params: dict) -> str:
    payload = json.dumps({"url": url, "params": params}, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class DiskCache:
    """One file per request digest plus an append-only audit manifest."""

    def __init__(self, directory: Path | str):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._manifest = self.directory / "manifest.jsonl"

    def _path(self, digest: str) -> Path:
        return self.directory / f"{digest}.json"

    def get(self, url: str, params: dict) -> str | None:
        path = self._path(request_digest(url, params))
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))["body"]

    def put(self, url: str, params: dict, body: str) -> str:
        digest = request_digest(url, params)
        path = self._path(digest)
        entry = {"url": url, "params": params, "body": body}
        path.write_text(json.dumps(entry, ensure_ascii=False, sort_keys=True), encoding="utf-8")
        with self._manifest.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps({"digest": digest, "url": url, "params": params},
                                sort_keys=True, ensure_ascii=False) + "\n")
        return digest


class RateLimiter:
    """Spaces calls so the instantaneous rate never exceeds the configured one."""

    def __init__(self, max_per_second: float, clock=time.monotonic, sleep=time.sleep):
        self._interval = 1.0 / max_per_second
        self._clock = clock
        self._sleep = sleep
        self._next_allowed = 0.0

    def acquire(self) -> None:
        now = self._clock()
        if now < self._next_allowed:
            self._sleep(self._next_allowed - now)
            now = self._next_allowed
        self._next_allowed = now + self._interval


def _requests_transport(user_agent: str) -> Transport:
    session = requests.Session()
    session.headers["User-Agent"] = user_agent

    def transport(url: str, params: dict, timeout: float) -> tuple[int, str]:
        response = session.get(url, params=params, timeout=timeout)
        return response.status_code, response.text

    return transport


@dataclass
class FetchStats:
    cache_hits: int = 0
    network_calls: int = 0
    retries: int = 0


class CachingHttpClient:
    """Cache-first GET client with rate limiting and bounded retries."""

    def __init__(
        self,
        policy: FetchPolicy,
        transport: Transport | None = None,
        clock=time.monotonic,
        sleep=time.sleep,
    ):
        self.policy = policy
        self.cache = DiskCache(policy.cache_dir)
        self._transport = transport or _requests_transport(policy.user_agent)
        self._limiter = RateLimiter(policy.max_requests_per_second, clock, sleep)
        self._sleep = sleep
        self.stats = FetchStats()

    def get_json(self, url: str, params: dict) -> dict:
        cached = self.cache.get(url, params)
        if cached is not None:
            self.stats.cache_hits += 1
            return json.loads(cached)
        if self.policy.offline:
            raise CacheMissError(f"offline mode, uncached request: {url} {sorted(params.items())}")
        body = self._fetch_with_retries(url, params)
        self.cache.put(url, params, body)
        return json.loads(body)

    def _fetch_with_retries(self, url: str, params: dict) -> str:
        last_reason = "no attempt made"
        for attempt in range(self.policy.max_retries + 1):
            if attempt:
                self.stats.retries += 1
                backoff = self.policy.backoff[min(attempt - 1, len(self.policy.backoff) - 1)]
                self._sleep(backoff)
            self._limiter.acquire()
            self.stats.network_calls += 1
            try:
                status, body = self._transport(url, params, self.policy.timeout)
            except requests.RequestException as exc:
                last_reason = f"transport error: {exc}"
                logger.debug("fetch attempt %d failed: %s", attempt, last_reason)
                continue
            if status in RETRYABLE_STATUS_CODES:
                last_reason = f"status {status}"
                logger.debug("fetch attempt %d got retryable %s", attempt, last_reason)
                continue
            if status != 200:
                raise TransientFetchError(f"GET {url} returned status {status}")
            return body
        raise TransientFetchError(f"GET {url} failed after retries: {last_reason}")
