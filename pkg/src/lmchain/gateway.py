"""Generation backends, prompt rendering and answer extraction.

Two backends share one ``generate`` call:

* :class:`OllamaBackend` posts to an HTTP generate endpoint;
* :class:`MockBackend` replays a tab-separated script keyed by
  (model name, document id) with scripted latencies.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .corpus import Document
from .dates import CanonicalDate, extract_candidates

__all__ = [
    "DEFAULT_PROMPT",
    "PLACEHOLDER",
    "BackendError",
    "BackendTimeout",
    "ConfigError",
    "GenerationOptions",
    "GenerationResult",
    "MockBackend",
    "ModelSpec",
    "OllamaBackend",
    "PromptTemplate",
    "extract_answer",
    "render_prompt",
    "strip_thinking",
]

logger = logging.getLogger(__name__)

PLACEHOLDER = "_"
DEFAULT_PROMPT = (
    "TEXT: _. QUESTION: What is the patient's date of birth? "
    "The date must be in DD/MM/YYYY format. "
    "Return 'I do not know' if the date of birth is not written in the TEXT."
)
DEFAULT_URL = "http://localhost:11434"
DEFAULT_ENDPOINT = "/api/generate"
DEFAULT_TIMEOUT = 600.0


class ConfigError(ValueError):
    pass


class BackendError(RuntimeError):
    def __init__(self, model: str, cause: str, document_id: str | None = None):
        self.model = model
        self.cause = cause
        self.document_id = document_id
        where = f" (document {document_id!r})" if document_id else ""
        super().__init__(f"model {model!r}{where}: {cause}")


class BackendTimeout(BackendError):
    pass


@dataclass(frozen=True)
class GenerationOptions:
    temperature: float = 0.0
    random_seed: int = 0
    repeat_last_n: int = 0

    def to_wire(self) -> dict:
        return {
            "temperature": self.temperature,
            "seed": self.random_seed,
            "repeat_last_n": self.repeat_last_n,
        }


@dataclass(frozen=True)
class ModelSpec:
    name: str
    options: GenerationOptions = field(default_factory=GenerationOptions)

    def __post_init__(self) -> None:
        if not self.name:
            raise ConfigError("model name must be non-empty")


@dataclass(frozen=True)
class GenerationResult:
    raw_text: str
    elapsed_seconds: float
    backend: str

    def __post_init__(self) -> None:
        if not self.elapsed_seconds > 0:
            raise ValueError(f"elapsed_seconds must be positive, got {self.elapsed_seconds}")


@dataclass(frozen=True)
class PromptTemplate:
    template: str = DEFAULT_PROMPT
    placeholder: str = PLACEHOLDER

    def __post_init__(self) -> None:
        count = self.template.count(self.placeholder)
        if count != 1:
            raise ConfigError(
                f"prompt template must contain exactly one {self.placeholder!r} placeholder, found {count}"
            )


def render_prompt(template: PromptTemplate, document: Document) -> str:
    # re-check in case a caller bypassed the constructor
    if template.template.count(template.placeholder) != 1:
        raise ConfigError("prompt template must contain exactly one placeholder")
    head, tail = template.template.split(template.placeholder)
    return head + document.text + tail


def strip_thinking(raw_text: str, open_marker: str = "<think>", close_marker: str = "</think>") -> str:
    """Remove delimited reasoning blocks.

    An opener without a closer hides everything after it. A closer with no
    opener before it hides everything before it (some servers drop the opening
    marker from the returned text).
    """
    out = []
    pos = 0
    first_close = raw_text.find(close_marker)
    first_open = raw_text.find(open_marker)
    if first_close != -1 and (first_open == -1 or first_close < first_open):
        pos = first_close + len(close_marker)
    while True:
        start = raw_text.find(open_marker, pos)
        if start == -1:
            out.append(raw_text[pos:])
            break
        out.append(raw_text[pos:start])
        end = raw_text.find(close_marker, start + len(open_marker))
        if end == -1:
            break
        pos = end + len(close_marker)
    return "".join(out)


def extract_answer(
    raw_text: str, open_marker: str = "<think>", close_marker: str = "</think>"
) -> CanonicalDate | None:
    """First date in a model response, ignoring any thinking blocks."""
    visible = strip_thinking(raw_text, open_marker, close_marker)
    matches = extract_candidates(visible).matches
    return matches[0].date if matches else None


class _Backend:
    name = "backend"

    def __init__(self, max_in_flight: int = 1):
        if max_in_flight < 1:
            raise ConfigError("max_in_flight must be at least 1")
        self.max_in_flight = max_in_flight
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def generate(self, model: ModelSpec, prompt: str, document_id: str | None = None) -> GenerationResult:
        with self._slots:
            return self._generate(model, prompt, document_id)

    def _generate(self, model, prompt, document_id):  # pragma: no cover
        raise NotImplementedError

    def check_models(self, models) -> None:
        """Raise ConfigError if any model cannot be served. No-op by default."""


class OllamaBackend(_Backend):
    """Client for an ollama-style ``/api/generate`` endpoint."""

    name = "ollama"

    def __init__(
        self,
        base_url: str = DEFAULT_URL,
        endpoint: str = DEFAULT_ENDPOINT,
        timeout: float = DEFAULT_TIMEOUT,
        max_in_flight: int = 1,
        session: requests.Session | None = None,
    ):
        super().__init__(max_in_flight)
        if timeout <= 0:
            raise ConfigError("timeout must be positive")
        self.url = base_url.rstrip("/") + "/" + endpoint.lstrip("/")
        self.timeout = timeout
        self.session = session or requests.Session()

    def _generate(self, model, prompt, document_id):
        payload = {
            "model": model.name,
            "prompt": prompt,
            "stream": False,
            "options": model.options.to_wire(),
        }
        start = time.perf_counter()
        try:
            resp = self.session.post(self.url, json=payload, timeout=self.timeout)
        except requests.Timeout as exc:
            raise BackendTimeout(model.name, f"timed out after {self.timeout}s ({exc})", document_id) from exc
        except requests.RequestException as exc:
            raise BackendError(model.name, f"request to {self.url} failed: {exc}", document_id) from exc
        elapsed = time.perf_counter() - start

        if resp.status_code != 200:
            raise BackendError(model.name, f"HTTP {resp.status_code}: {resp.text[:200]}", document_id)
        try:
            body = resp.json()
            text = body["response"]
        except (ValueError, KeyError, TypeError) as exc:
            raise BackendError(model.name, f"malformed response body: {exc!r}", document_id) from exc
        if not isinstance(text, str):
            raise BackendError(model.name, "malformed response body: 'response' is not a string", document_id)
        logger.debug("%s answered %s in %.3fs", model.name, document_id, elapsed)
        return GenerationResult(text, max(elapsed, 1e-9), self.name)


class MockBackend(_Backend):
    """Replays scripted responses; latency comes from the script, not the clock."""

    name = "mock"

    def __init__(self, script: dict[tuple[str, str], tuple[str, float]], max_in_flight: int = 1):
        super().__init__(max_in_flight)
        for key, (_, latency) in script.items():
            if not latency > 0:
                raise ConfigError(f"mock latency for {key} must be positive")
        self.script = dict(script)
        self.calls: list[tuple[str, str | None]] = []
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path, max_in_flight: int = 1) -> MockBackend:
        path = Path(path)
        script = {}
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t", 3)
            if len(parts) != 4:
                raise ConfigError(f"{path}:{lineno}: expected 4 tab-separated fields")
            model, doc_id, latency, response = parts
            try:
                seconds = float(latency)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: bad latency {latency!r}") from None
            script[(model, doc_id)] = (response, seconds)
        return cls(script, max_in_flight)

    @staticmethod
    def dump(script: dict[tuple[str, str], tuple[str, float]], path) -> None:
        lines = []
        for (model, doc_id), (response, latency) in script.items():
            if "\n" in response or "\r" in response:
                raise ConfigError("mock responses cannot contain newlines")
            lines.append(f"{model}\t{doc_id}\t{latency!r}\t{response}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @property
    def models(self) -> set[str]:
        return {model for model, _ in self.script}

    def check_models(self, models) -> None:
        for model in models:
            name = model.name if isinstance(model, ModelSpec) else model
            if name not in self.models:
                raise ConfigError(f"model {name!r} has no entries in the mock script")

    def _generate(self, model, prompt, document_id):
        with self._lock:
            self.calls.append((model.name, document_id))
        try:
            text, latency = self.script[(model.name, document_id)]
        except KeyError:
            raise BackendError(model.name, "no scripted response", document_id) from None
        return GenerationResult(text, latency, self.name)

