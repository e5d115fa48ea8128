"""Document corpora and the manifest format that indexes them.

A manifest is a plain text file with one ``id,path[,target]`` record per line.
``path`` is relative to the manifest's directory and ``target`` is the
expert-assigned date of birth in DD/MM/YYYY form. Blank lines and lines that
start with ``#`` are skipped.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .dates import CanonicalDate, parse_strict_ddmmyyyy

__all__ = ["Document", "Corpus", "CorpusError", "load_corpus", "normalize_text"]

logger = logging.getLogger(__name__)


class CorpusError(ValueError):
    """Raised when a manifest or one of its records cannot be loaded."""


def normalize_text(raw: str) -> str:
    """Strip every line and drop the ones left empty."""
    lines = (line.strip() for line in raw.splitlines())
    return "\n".join(line for line in lines if line)


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    target: CanonicalDate | None = None
    char_count: int = field(init=False)

    def __post_init__(self) -> None:
        # len() of a str counts code points, not encoded bytes
        object.__setattr__(self, "char_count", len(self.text))

    @classmethod
    def from_raw(cls, id: str, raw: str, target: CanonicalDate | None = None) -> Document:
        return cls(id=id, text=normalize_text(raw), target=target)


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]
    source_path: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "documents", tuple(self.documents))
        seen: set[str] = set()
        for doc in self.documents:
            if doc.id in seen:
                raise CorpusError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def get(self, doc_id: str) -> Document:
        for doc in self.documents:
            if doc.id == doc_id:
                return doc
        raise KeyError(doc_id)

    @property
    def ids(self) -> list[str]:
        return [doc.id for doc in self.documents]

    def subset(self, doc_ids) -> Corpus:
        """Documents whose id is in ``doc_ids``, kept in corpus order."""
        wanted = set(doc_ids)
        return Corpus(tuple(d for d in self.documents if d.id in wanted), self.source_path)


def _parse_record(line: str, lineno: int, base: Path) -> Document:
    parts = [p.strip() for p in line.split(",")]
    if len(parts) == 2:
        doc_id, rel_path, target_text = parts[0], parts[1], ""
    elif len(parts) == 3:
        doc_id, rel_path, target_text = parts
    else:
        raise CorpusError(f"line {lineno}: expected 'id,path[,target]', got {line!r}")
    if not doc_id or not rel_path:
        raise CorpusError(f"line {lineno}: empty id or path")

    target = None
    if target_text:
        target = parse_strict_ddmmyyyy(target_text)
        if target is None:
            raise CorpusError(f"record {doc_id!r}: invalid target date {target_text!r}")

    path = base / rel_path
    try:
        raw = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise CorpusError(f"record {doc_id!r}: text file not found: {path}") from None
    except UnicodeDecodeError as exc:
        raise CorpusError(f"record {doc_id!r}: {path} is not valid UTF-8 ({exc})") from None
    return Document.from_raw(doc_id, raw, target)


def load_corpus(manifest_path) -> Corpus:
    manifest_path = Path(manifest_path)
    try:
        lines = manifest_path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise CorpusError(f"manifest not found: {manifest_path}") from None

    base = manifest_path.parent
    documents = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        documents.append(_parse_record(stripped, lineno, base))
    logger.debug("loaded %d documents from %s", len(documents), manifest_path)
    return Corpus(tuple(documents), str(manifest_path))
