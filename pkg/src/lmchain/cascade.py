"""The language model chain: a cascade of models gated by candidate answers.

Every document is first mined for candidate dates. The head model answers all
documents; a document is *resolved* when the date in its answer is one of its
own candidates. Unresolved documents go to the next model, and so on until the
chain runs out of models or every document is resolved.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .corpus import Corpus, Document
from .dates import CandidateSet, CanonicalDate, extract_candidates
from .gateway import (
    BackendError,
    ConfigError,
    GenerationOptions,
    ModelSpec,
    PromptTemplate,
    extract_answer,
    render_prompt,
)

__all__ = [
    "ChainConfig",
    "ChainRunError",
    "PredictionRecord",
    "StageTrace",
    "load_chain_config",
    "merge",
    "run_chain",
    "run_chain_recursive",
    "save_chain_config",
    "validate_response",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChainConfig:
    id: str
    models: tuple[ModelSpec, ...]
    prompt: PromptTemplate = field(default_factory=PromptTemplate)

    def __post_init__(self) -> None:
        object.__setattr__(self, "models", tuple(self.models))
        if not self.models:
            raise ConfigError(f"chain {self.id!r} has no models")

    @classmethod
    def of(cls, id: str, *names: str, prompt: PromptTemplate | None = None) -> ChainConfig:
        return cls(id, tuple(ModelSpec(n) for n in names), prompt or PromptTemplate())

    @property
    def model_names(self) -> list[str]:
        return [m.name for m in self.models]


@dataclass(frozen=True)
class PredictionRecord:
    document_id: str
    stage_index: int | None = None
    model_name: str | None = None
    raw_response: str | None = None
    answer: CanonicalDate | None = None
    in_document: bool = False
    matches_target: bool | None = None
    elapsed_seconds_total: float = 0.0

    def __post_init__(self) -> None:
        if self.in_document and self.answer is None:
            raise ValueError("in_document requires an answer")
        if (self.stage_index is not None) != self.in_document:
            raise ValueError("stage_index is set exactly for resolved documents")

    @property
    def resolved(self) -> bool:
        return self.stage_index is not None

    def to_json(self) -> dict:
        return {
            "document_id": self.document_id,
            "stage_index": self.stage_index,
            "model_name": self.model_name,
            "raw_response": self.raw_response,
            "answer": self.answer.render() if self.answer else None,
            "in_document": self.in_document,
            "matches_target": self.matches_target,
            "elapsed_seconds_total": self.elapsed_seconds_total,
        }

    @classmethod
    def from_json(cls, data: dict) -> PredictionRecord:
        data = dict(data)
        if data.get("answer"):
            data["answer"] = CanonicalDate.parse(data["answer"])
        return cls(**data)


@dataclass(frozen=True)
class StageTrace:
    """What one model in the chain saw and decided.

    ``per_document_answer`` holds the (document id, answer) pair for every
    document the stage examined, so per-stage confusion matrices can be
    rebuilt later.
    """

    stage_index: int
    model_name: str
    documents_in: int
    resolved: int
    unresolved: int
    per_document_latency: tuple[tuple[str, float], ...] = ()
    per_document_answer: tuple[tuple[str, CanonicalDate | None], ...] = ()
    per_document_response: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if self.documents_in != self.resolved + self.unresolved:
            raise ValueError("documents_in must equal resolved + unresolved")

    @property
    def document_ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.per_document_latency]

    def to_json(self) -> dict:
        return {
            "stage_index": self.stage_index,
            "model_name": self.model_name,
            "documents_in": self.documents_in,
            "resolved": self.resolved,
            "unresolved": self.unresolved,
            "per_document_latency": [list(p) for p in self.per_document_latency],
            "per_document_answer": [
                [doc_id, a.render() if a else None] for doc_id, a in self.per_document_answer
            ],
            "per_document_response": [list(p) for p in self.per_document_response],
        }

    @classmethod
    def from_json(cls, data: dict) -> StageTrace:
        return cls(
            stage_index=data["stage_index"],
            model_name=data["model_name"],
            documents_in=data["documents_in"],
            resolved=data["resolved"],
            unresolved=data["unresolved"],
            per_document_latency=tuple((d, float(s)) for d, s in data["per_document_latency"]),
            per_document_answer=tuple(
                (d, CanonicalDate.parse(a) if a else None) for d, a in data.get("per_document_answer", [])
            ),
            per_document_response=tuple((d, r) for d, r in data.get("per_document_response", [])),
        )


class ChainRunError(RuntimeError):
    """A backend failure inside a chain run, with the work done so far."""

    def __init__(self, stage_index, model_name, document_id, cause, records, traces):
        self.stage_index = stage_index
        self.model_name = model_name
        self.document_id = document_id
        self.cause = cause
        self.records = records
        self.traces = traces
        super().__init__(
            f"stage {stage_index} ({model_name}) failed on document {document_id!r}: {cause}"
        )


def validate_response(answer: CanonicalDate | None, candidates: CandidateSet) -> bool:
    return answer is not None and answer in candidates.distinct_dates


def merge(resolved, later, order=None) -> list[PredictionRecord]:
    """Union of two disjoint record lists.

    ``order`` is the corpus id order; without it, ``resolved`` comes first.
    """
    ids = [r.document_id for r in resolved]
    overlap = set(ids) & {r.document_id for r in later}
    if overlap:
        raise ValueError(f"records overlap on ids {sorted(overlap)}")
    combined = [*resolved, *later]
    if order is None:
        return combined
    rank = {doc_id: i for i, doc_id in enumerate(order)}
    return sorted(combined, key=lambda r: rank[r.document_id])


@dataclass
class _Attempt:
    document: Document
    raw_text: str
    seconds: float
    answer: CanonicalDate | None
    valid: bool


def _target_flag(doc: Document, answer: CanonicalDate | None) -> bool | None:
    if doc.target is None:
        return None
    return answer is not None and answer == doc.target


def _query_stage(backend, model, prompt, docs, candidates, concurrency):
    def ask(doc: Document) -> _Attempt:
        try:
            result = backend.generate(model, render_prompt(prompt, doc), document_id=doc.id)
        except BackendError as exc:
            exc.document_id = exc.document_id or doc.id
            raise
        answer = extract_answer(result.raw_text)
        return _Attempt(doc, result.raw_text, result.elapsed_seconds, answer,
                        validate_response(answer, candidates[doc.id]))

    if concurrency <= 1 or len(docs) <= 1:
        return [ask(doc) for doc in docs]
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        # map() yields in submission order, so output stays in corpus order
        return list(pool.map(ask, docs))


def run_chain(
    corpus: Corpus,
    chain: ChainConfig,
    backend,
    concurrency: int = 1,
) -> tuple[list[PredictionRecord], list[StageTrace]]:
    """Run ``chain`` over every document in ``corpus``.

    Returns one record per document, in corpus order, and one trace per stage
    that was actually queried.
    """
    candidates = {doc.id: extract_candidates(doc.text) for doc in corpus}
    elapsed = {doc.id: 0.0 for doc in corpus}
    last: dict[str, _Attempt] = {}
    resolved: list[PredictionRecord] = []
    traces: list[StageTrace] = []
    pending = list(corpus)

    for stage_index, model in enumerate(chain.models):
        if stage_index > 0 and not pending:
            break
        try:
            attempts = _query_stage(backend, model, chain.prompt, pending, candidates, concurrency)
        except BackendError as exc:
            raise ChainRunError(stage_index, model.name, exc.document_id, exc,
                                merge(resolved, [], corpus.ids), traces) from exc

        still_pending = []
        for att in attempts:
            doc = att.document
            elapsed[doc.id] += att.seconds
            last[doc.id] = att
            if att.valid:
                resolved.append(PredictionRecord(
                    document_id=doc.id,
                    stage_index=stage_index,
                    model_name=model.name,
                    raw_response=att.raw_text,
                    answer=att.answer,
                    in_document=True,
                    matches_target=_target_flag(doc, att.answer),
                    elapsed_seconds_total=elapsed[doc.id],
                ))
            else:
                still_pending.append(doc)

        traces.append(StageTrace(
            stage_index=stage_index,
            model_name=model.name,
            documents_in=len(attempts),
            resolved=len(attempts) - len(still_pending),
            unresolved=len(still_pending),
            per_document_latency=tuple((a.document.id, a.seconds) for a in attempts),
            per_document_answer=tuple((a.document.id, a.answer) for a in attempts),
            per_document_response=tuple((a.document.id, a.raw_text) for a in attempts),
        ))
        logger.info("stage %d (%s): %d in, %d resolved", stage_index, model.name,
                    len(attempts), len(attempts) - len(still_pending))
        pending = still_pending

    leftovers = []
    for doc in pending:
        att = last[doc.id]
        leftovers.append(PredictionRecord(
            document_id=doc.id,
            model_name=chain.models[len(traces) - 1].name,
            raw_response=att.raw_text,
            answer=att.answer,
            in_document=False,
            matches_target=_target_flag(doc, att.answer),
            elapsed_seconds_total=elapsed[doc.id],
        ))
    return merge(resolved, leftovers, corpus.ids), traces


def run_chain_recursive(corpus: Corpus, chain: ChainConfig, backend) -> list[PredictionRecord]:
    """Direct recursive form: pop a model, predict, recurse on the failures.

    Kept as an executable reference for :func:`run_chain`; it produces no
    stage traces and runs sequentially.
    """
    candidates = {doc.id: extract_candidates(doc.text) for doc in corpus}
    order = corpus.ids

    def lmc(docs, models, stage_index, spent):
        if not models:
            return []
        model, rest = models[0], models[1:]
        predictions = {}
        for doc in docs:
            result = backend.generate(model, render_prompt(chain.prompt, doc), document_id=doc.id)
            answer = extract_answer(result.raw_text)
            spent = {**spent, doc.id: spent.get(doc.id, 0.0) + result.elapsed_seconds}
            ok = validate_response(answer, candidates[doc.id])
            predictions[doc.id] = PredictionRecord(
                document_id=doc.id,
                stage_index=stage_index if ok else None,
                model_name=model.name,
                raw_response=result.raw_text,
                answer=answer,
                in_document=ok,
                matches_target=_target_flag(doc, answer),
                elapsed_seconds_total=spent[doc.id],
            )
        wrong = [doc for doc in docs if not predictions[doc.id].in_document]
        if not wrong or not rest:
            return list(predictions.values())
        later = lmc(wrong, rest, stage_index + 1, spent)
        kept = [p for p in predictions.values() if p.in_document]
        return merge(kept, later, order)

    if not corpus.documents:
        return []
    return merge(lmc(list(corpus), list(chain.models), 0, {}), [], order)


def _model_from_json(entry, defaults: GenerationOptions) -> ModelSpec:
    if isinstance(entry, str):
        return ModelSpec(entry, defaults)
    if not isinstance(entry, dict) or "name" not in entry:
        raise ConfigError(f"bad model entry {entry!r}")
    opts = entry.get("options", {})
    unknown = set(opts) - {"temperature", "random_seed", "repeat_last_n"}
    if unknown:
        raise ConfigError(f"unknown generation options {sorted(unknown)}")
    return ModelSpec(entry["name"], replace(defaults, **opts))


def load_chain_config(path) -> ChainConfig:
    """Read a JSON chain file.

    Format::

        {"id": "chain_2",
         "models": ["llama3.2:1b", {"name": "qwen3:4b", "options": {"temperature": 0}}],
         "options": {...},          # optional defaults for every model
         "prompt": "TEXT: _. ..."}  # optional
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"chain file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict) or "models" not in data:
        raise ConfigError(f"{path}: expected an object with a 'models' list")
    try:
        defaults = GenerationOptions(**data.get("options", {}))
    except TypeError as exc:
        raise ConfigError(f"{path}: bad options ({exc})") from None
    models = tuple(_model_from_json(m, defaults) for m in data["models"])
    prompt = PromptTemplate(data["prompt"]) if data.get("prompt") else PromptTemplate()
    return ChainConfig(str(data.get("id", path.stem)), models, prompt)


def save_chain_config(chain: ChainConfig, path) -> None:
    data = {
        "id": chain.id,
        "models": [
            {"name": m.name, "options": {
                "temperature": m.options.temperature,
                "random_seed": m.options.random_seed,
                "repeat_last_n": m.options.repeat_last_n,
            }}
            for m in chain.models
        ],
    }
    if chain.prompt != PromptTemplate():
        data["prompt"] = chain.prompt.template
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
