"""Chat-completion transports: a live HTTP backend and record/replay.

The live backend speaks a minimal chat-completion wire format: one user
message in, one choice out, temperature pinned to 0 for determinism.
Replay serves responses from a cassette file keyed by a content hash of the
prompt, which makes every planner run bit-reproducible and survives fixture
edits that leave prompts unchanged.

Cassette format: a flat sequence of length-prefixed UTF-8 records::

    <byte length>\\n<prompt sha256 hex>\\n
    <byte length>\\n<prompt>\\n
    <byte length>\\n<response>\\n

Only prompts and responses are ever written; credentials never reach disk.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field

import requests

from .errors import BiteplanError

ENDPOINT_ENV = "FLAIR_LLM_ENDPOINT"
MODEL_ENV = "FLAIR_LLM_MODEL"
KEY_ENV = "FLAIR_LLM_KEY"

# Safe reply served on a cassette miss in non-strict mode: the sequencer
# reads it as "no bite", ending the episode instead of crashing it.
NO_BITE_FALLBACK = "Next bite as list: []"


class TransportError(BiteplanError):
    """Live completion failed: network, HTTP status, or bad payload."""


class CassetteMissError(BiteplanError):
    """Strict replay saw a prompt that is not in the cassette."""

    def __init__(self, prompt_hash: str):
        super().__init__(f"cassette has no entry for prompt hash {prompt_hash}")
        self.prompt_hash = prompt_hash


class CassetteFormatError(BiteplanError):
    """Cassette file is corrupt; the message names the failing entry."""


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def append_cassette(path, prompt: str, response: str) -> None:
    """Append one (hash, prompt, response) record to a cassette file."""
    chunks = []
    for text in (prompt_hash(prompt), prompt, response):
        data = text.encode("utf-8")
        chunks.append(f"{len(data)}\n".encode("ascii"))
        chunks.append(data)
        chunks.append(b"\n")
    with open(path, "ab") as fh:
        fh.write(b"".join(chunks))


def read_cassette(path) -> dict[str, tuple[str, str]]:
    """Load a cassette into a hash -> (prompt, response) mapping."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise CassetteFormatError(f"cannot read cassette {path}: {exc}") from exc
    entries: dict[str, tuple[str, str]] = {}
    pos = 0
    index = 0
    while pos < len(blob):
        fields = []
        for _ in range(3):
            newline = blob.find(b"\n", pos)
            if newline < 0:
                raise CassetteFormatError(f"entry {index}: truncated length prefix")
            try:
                length = int(blob[pos:newline])
            except ValueError:
                raise CassetteFormatError(
                    f"entry {index}: bad length prefix {blob[pos:newline]!r}"
                ) from None
            start = newline + 1
            end = start + length
            if end >= len(blob) + 1 or blob[end : end + 1] != b"\n":
                raise CassetteFormatError(f"entry {index}: truncated payload")
            try:
                fields.append(blob[start:end].decode("utf-8"))
            except UnicodeDecodeError as exc:
                raise CassetteFormatError(f"entry {index}: bad UTF-8: {exc}") from exc
            pos = end + 1
        digest, prompt, response = fields
        if digest != prompt_hash(prompt):
            raise CassetteFormatError(f"entry {index}: hash does not match prompt")
        entries[digest] = (prompt, response)
        index += 1
    return entries


@dataclass
class LiveTransport:
    """Single-shot chat-completion client; credentials come from the env."""

    endpoint: str | None = None
    model: str | None = None
    api_key: str | None = None
    timeout_s: float = 60.0

    def __post_init__(self):
        self.endpoint = self.endpoint or os.environ.get(ENDPOINT_ENV)
        self.model = self.model or os.environ.get(MODEL_ENV, "gpt-4")
        if self.api_key is None:
            self.api_key = os.environ.get(KEY_ENV)
        if not self.endpoint:
            raise TransportError(
                f"no endpoint configured (flag or {ENDPOINT_ENV})"
            )

    def complete(self, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        try:
            resp = requests.post(
                self.endpoint, json=payload, headers=headers, timeout=self.timeout_s
            )
        except requests.RequestException as exc:
            raise TransportError(f"completion request failed: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(
                f"completion returned HTTP {resp.status_code}: {resp.text[:200]}"
            )
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion payload: {exc}") from exc
        if not isinstance(text, str):
            raise TransportError("completion content is not text")
        return text


@dataclass
class ReplayTransport:
    """Serve stored responses keyed by prompt hash.

    In strict mode a miss raises CassetteMissError; otherwise the no-bite
    fallback (or a caller-supplied text) is returned.
    """

    cassette_path: str
    strict: bool = True
    fallback_response: str = NO_BITE_FALLBACK
    _entries: dict = field(init=False, repr=False)

    def __post_init__(self):
        self._entries = read_cassette(self.cassette_path)

    def complete(self, prompt: str) -> str:
        digest = prompt_hash(prompt)
        entry = self._entries.get(digest)
        if entry is None:
            if self.strict:
                raise CassetteMissError(digest)
            return self.fallback_response
        return entry[1]


_record_lock = threading.Lock()


def complete(transport, prompt: str) -> str:
    """Run one completion through any transport."""
    if not prompt:
        raise ValueError("prompt must be non-empty")
    return transport.complete(prompt)


def record(transport, cassette_path, prompt: str) -> str:
    """Complete via the transport and append the exchange to a cassette."""
    response = complete(transport, prompt)
    with _record_lock:
        append_cassette(cassette_path, prompt, response)
    return response
