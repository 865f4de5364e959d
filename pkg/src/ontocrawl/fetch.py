"""Fetcher contract and the live HTTP implementation.

A fetcher maps an absolute URL (plus an optional form-encoded POST body) to a
:class:`PageDocument`. HTTP-level failures come back as documents with their
status; only transport failures raise :class:`FetchError`.
"""

from __future__ import annotations

import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Protocol, runtime_checkable
from urllib.parse import urldefrag, urljoin, urlsplit, urlunsplit

USER_AGENT = "ontocrawl/0.1"


class FetchError(Exception):
    def __init__(self, url: str, reason: str):
        self.url = url
        self.reason = reason
        super().__init__(f"cannot fetch {url}: {reason}")


class MalformedURLError(ValueError):
    pass


@dataclass(frozen=True)
class PageDocument:
    url: str
    status: int
    body: str = ""

    def __post_init__(self) -> None:
        require_absolute(self.url)

    @property
    def ok(self) -> bool:
        return self.status < 400


@runtime_checkable
class Fetcher(Protocol):
    def fetch(self, url: str, data: bytes | None = None) -> PageDocument: ...


def is_absolute(url: str) -> bool:
    parts = urlsplit(url)
    return bool(parts.scheme) and bool(parts.netloc) and " " not in url


def require_absolute(url: str) -> str:
    if not isinstance(url, str) or not is_absolute(url):
        raise MalformedURLError(f"not an absolute URL: {url!r}")
    return url


def resolve_url(base: str, ref: str) -> str:
    """``urljoin`` that also works for schemes urllib does not know (``sim://``)."""
    scheme = urlsplit(base).scheme
    if scheme in ("http", "https"):
        return urldefrag(urljoin(base, ref))[0]
    ref_parts = urlsplit(ref)
    if ref_parts.scheme:
        return urldefrag(ref)[0]
    proxy = urlunsplit(("http",) + tuple(urlsplit(base))[1:])
    joined = urlsplit(urldefrag(urljoin(proxy, ref))[0])
    return urlunsplit((scheme,) + tuple(joined)[1:])


def host_of(url: str) -> str:
    return urlsplit(url).netloc


def fetch_page(fetcher: Fetcher, url: str, data: bytes | None = None) -> PageDocument:
    require_absolute(url)
    return fetcher.fetch(url, data)


class HttpFetcher:
    """Live fetcher over urllib."""

    def __init__(self, timeout: float = 10.0, user_agent: str = USER_AGENT):
        self.timeout = timeout
        self.user_agent = user_agent

    def fetch(self, url: str, data: bytes | None = None) -> PageDocument:
        headers = {"User-Agent": self.user_agent}
        if data is not None:
            headers["Content-Type"] = "application/x-www-form-urlencoded"
        request = urllib.request.Request(url, data=data, headers=headers)
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                charset = resp.headers.get_content_charset() or "utf-8"
                return PageDocument(resp.geturl(), resp.status, resp.read().decode(charset, "replace"))
        except urllib.error.HTTPError as exc:
            body = exc.read().decode("utf-8", "replace") if exc.fp else ""
            return PageDocument(url, exc.code, body)
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise FetchError(url, str(getattr(exc, "reason", exc))) from exc


class PoliteFetcher:
    """Wraps a fetcher with a per-host delay and at most one request in flight per host."""

    def __init__(self, inner: Fetcher, delay: float = 0.0, clock=time.monotonic, sleep=time.sleep):
        self.inner = inner
        self.delay = delay
        self._clock = clock
        self._sleep = sleep
        self._guard = threading.Lock()
        self._host_locks: dict[str, threading.Lock] = {}
        self._last: dict[str, float] = {}
        self.calls = 0

    def fetch(self, url: str, data: bytes | None = None) -> PageDocument:
        host = host_of(url)
        with self._guard:
            lock = self._host_locks.setdefault(host, threading.Lock())
        with lock:
            if self.delay > 0 and host in self._last:
                wait = self._last[host] + self.delay - self._clock()
                if wait > 0:
                    self._sleep(wait)
            try:
                return self.inner.fetch(url, data)
            finally:
                self._last[host] = self._clock()
                with self._guard:
                    self.calls += 1

    def search(self, keyword: str) -> list[str]:
        search = getattr(self.inner, "search", None)
        return search(keyword) if search else []
