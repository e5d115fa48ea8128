"""Command line entry point.

Subcommands::

    lmchain bench   --manifest M (--backend-url U | --mock-script S) --models a b ...
    lmchain chain   --manifest M (--backend-url U | --mock-script S) --chain C
    lmchain propose --reports out/report.csv --k 3
    lmchain extract (--backend-url U | --mock-script S) --chain C --text letter.txt
    lmchain report  --manifest M --predictions out/predictions.jsonl [--stage-trace T]

``LMCHAIN_BACKEND_URL`` and ``LMCHAIN_TIMEOUT`` supply defaults for the
matching flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path

from .cascade import (
    ChainConfig,
    ChainRunError,
    PredictionRecord,
    StageTrace,
    load_chain_config,
    run_chain,
    save_chain_config,
)
from .chain_builder import FitError, benchmarks_from_report, propose_chains
from .corpus import Corpus, CorpusError, Document, load_corpus
from .evaluation import MODES, build_report, read_report_table, report_table, stage_table
from .gateway import (
    DEFAULT_TIMEOUT,
    DEFAULT_URL,
    BackendError,
    ConfigError,
    MockBackend,
    ModelSpec,
    OllamaBackend,
    PromptTemplate,
)

logger = logging.getLogger("lmchain")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_UNRESOLVED = 3

ENV_URL = "LMCHAIN_BACKEND_URL"
ENV_TIMEOUT = "LMCHAIN_TIMEOUT"
NOT_FOUND = "NOT FOUND"
FAILURE_MARKER = "FAILED"


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    corpus_manifest: Path | None
    backend_url: str | None
    mock_script: Path | None
    prompt_override: str | None
    concurrency_limit: int
    timeout_seconds: float
    output_dir: Path

    def __post_init__(self) -> None:
        if (self.backend_url is None) == (self.mock_script is None):
            raise UsageError("select exactly one backend: --backend-url or --mock-script")
        if self.concurrency_limit < 1:
            raise UsageError("--concurrency must be a positive integer")
        if not self.timeout_seconds > 0:
            raise UsageError("--timeout must be positive")

    def make_backend(self):
        if self.mock_script is not None:
            try:
                return MockBackend.from_file(self.mock_script, self.concurrency_limit)
            except FileNotFoundError:
                raise ConfigError(f"mock script not found: {self.mock_script}") from None
        return OllamaBackend(self.backend_url, timeout=self.timeout_seconds,
                             max_in_flight=self.concurrency_limit)

    def prompt(self) -> PromptTemplate | None:
        if self.prompt_override is None:
            return None
        return PromptTemplate(self.prompt_override)


def _config_from_args(args) -> RunConfig:
    timeout = args.timeout
    if timeout is None:
        env = os.environ.get(ENV_TIMEOUT)
        try:
            timeout = float(env) if env else DEFAULT_TIMEOUT
        except ValueError:
            raise UsageError(f"{ENV_TIMEOUT} must be a number, got {env!r}") from None
    url = args.backend_url
    if url is None and args.mock_script is None:
        url = os.environ.get(ENV_URL) or DEFAULT_URL
    prompt = None
    if args.prompt_file:
        try:
            prompt = Path(args.prompt_file).read_text(encoding="utf-8").strip()
        except FileNotFoundError:
            raise UsageError(f"prompt file not found: {args.prompt_file}") from None
    return RunConfig(
        corpus_manifest=Path(args.manifest) if args.manifest else None,
        backend_url=url,
        mock_script=Path(args.mock_script) if args.mock_script else None,
        prompt_override=prompt,
        concurrency_limit=args.concurrency,
        timeout_seconds=timeout,
        output_dir=Path(args.out),
    )


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name)


def _write_jsonl(path: Path, items) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(item.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def _read_jsonl(path: Path, cls):
    with open(path, encoding="utf-8") as fh:
        return [cls.from_json(json.loads(line)) for line in fh if line.strip()]


def _require_corpus(cfg: RunConfig) -> Corpus:
    if cfg.corpus_manifest is None:
        raise UsageError("--manifest is required")
    return load_corpus(cfg.corpus_manifest)


def _mark_failed(out: Path, message: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / FAILURE_MARKER).write_text(message + "\n", encoding="utf-8")


def _write_reports(out: Path, subject_runs) -> None:
    reports = []
    for subject, records, corpus, traces in subject_runs:
        for mode in MODES:
            reports.append(build_report(subject, records, corpus, mode, traces))
    (out / "report.csv").write_text(report_table(reports), encoding="utf-8")
    if any(r.per_stage for r in reports):
        (out / "stage_report.csv").write_text(stage_table(reports), encoding="utf-8")


def cmd_bench(args) -> int:
    models = [m for entry in args.models or [] for m in entry.split(",") if m]
    if not models:
        raise UsageError("--models needs at least one model name")
    cfg = _config_from_args(args)
    corpus = _require_corpus(cfg)
    prompt = cfg.prompt() or PromptTemplate()
    backend = cfg.make_backend()
    backend.check_models(models)

    out = cfg.output_dir
    (out / "predictions").mkdir(parents=True, exist_ok=True)
    done = []
    for name in models:
        chain = ChainConfig(name, (ModelSpec(name),), prompt)
        try:
            records, _ = run_chain(corpus, chain, backend, cfg.concurrency_limit)
        except ChainRunError as exc:
            _write_jsonl(out / "predictions" / f"{_safe_name(name)}.partial.jsonl", exc.records)
            if done:
                _write_reports(out, done)
            _mark_failed(out, str(exc))
            raise
        _write_jsonl(out / "predictions" / f"{_safe_name(name)}.jsonl", records)
        done.append((name, records, corpus, None))
    _write_reports(out, done)
    print(f"benchmarked {len(models)} model(s) on {len(corpus)} document(s); report in {out / 'report.csv'}")
    return EXIT_OK


def _load_chain(args, cfg: RunConfig) -> ChainConfig:
    if not args.chain:
        raise UsageError("--chain is required")
    chain = load_chain_config(args.chain)
    override = cfg.prompt()
    if override is not None:
        chain = ChainConfig(chain.id, chain.models, override)
    return chain


def cmd_chain(args) -> int:
    cfg = _config_from_args(args)
    corpus = _require_corpus(cfg)
    chain = _load_chain(args, cfg)
    backend = cfg.make_backend()
    backend.check_models(chain.models)

    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    try:
        records, traces = run_chain(corpus, chain, backend, cfg.concurrency_limit)
    except ChainRunError as exc:
        _write_jsonl(out / "predictions.partial.jsonl", exc.records)
        _write_jsonl(out / "stage_trace.partial.jsonl", exc.traces)
        _mark_failed(out, str(exc))
        raise
    _write_jsonl(out / "predictions.jsonl", records)
    _write_jsonl(out / "stage_trace.jsonl", traces)
    _write_reports(out, [(chain.id, records, corpus, traces)])
    for t in traces:
        print(f"stage {t.stage_index} {t.model_name}: {t.documents_in} in, "
              f"{t.resolved} resolved, {t.unresolved} unresolved")
    return EXIT_OK


def cmd_propose(args) -> int:
    if args.k is None or args.k < 2:
        raise UsageError("--k must be an integer >= 2")
    if not args.reports:
        raise UsageError("--reports is required")
    try:
        rows = read_report_table(args.reports)
    except FileNotFoundError:
        raise UsageError(f"report table not found: {args.reports}") from None
    benchmarks = benchmarks_from_report(rows)
    proposals = propose_chains(benchmarks, args.k, args.mode)

    out = Path(args.out)
    (out / "proposals").mkdir(parents=True, exist_ok=True)
    for p in proposals:
        save_chain_config(p.chain, out / "proposals" / f"{p.chain.id}.json")
        print(f"{p.chain.id}: {' -> '.join(p.chain.model_names)}\n    {p.rationale}")
    lines = ["rank,model,residual"]
    lines += [f"{i},{name},{res:.6f}" for i, (name, res) in enumerate(proposals[0].residuals, start=1)]
    (out / "residuals.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_extract(args) -> int:
    cfg = _config_from_args(args)
    chain = _load_chain(args, cfg)
    if not args.text:
        raise UsageError("--text is required")
    path = Path(args.text)
    try:
        raw = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise UsageError(f"text file not found: {path}") from None
    backend = cfg.make_backend()
    backend.check_models(chain.models)

    corpus = Corpus((Document.from_raw(path.stem, raw),), str(path))
    records, _ = run_chain(corpus, chain, backend, 1)
    rec = records[0]
    if rec.resolved:
        print(f"date_of_birth: {rec.answer.render()}")
        print(f"stage: {rec.stage_index} ({rec.model_name})")
    else:
        print(f"date_of_birth: {NOT_FOUND}")
        print("stage: none")
    print(f"elapsed_seconds: {rec.elapsed_seconds_total:.3f}")
    return EXIT_OK if rec.resolved else EXIT_UNRESOLVED


def cmd_report(args) -> int:
    if not args.manifest:
        raise UsageError("--manifest is required")
    if not args.predictions:
        raise UsageError("--predictions is required")
    corpus = load_corpus(args.manifest)
    records = _read_jsonl(Path(args.predictions), PredictionRecord)
    traces = _read_jsonl(Path(args.stage_trace), StageTrace) if args.stage_trace else None
    subject = args.subject or Path(args.predictions).stem
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_reports(out, [(subject, records, corpus, traces)])
    sys.stdout.write((out / "report.csv").read_text(encoding="utf-8"))
    return EXIT_OK


def _run_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", help="corpus manifest (id,path[,target] per line)")
    backend = common.add_mutually_exclusive_group()
    backend.add_argument("--backend-url", help=f"generate endpoint base URL (env {ENV_URL})")
    backend.add_argument("--mock-script", help="tab-separated mock response script")
    common.add_argument("--prompt-file", help="prompt template with a single '_' placeholder")
    common.add_argument("--concurrency", type=int, default=1, help="max in-flight requests")
    common.add_argument("--timeout", type=float, help=f"request timeout in seconds (env {ENV_TIMEOUT})")
    common.add_argument("--out", default="lmchain-out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _run_options()
    parser = argparse.ArgumentParser(prog="lmchain", description="Language model chains for date extraction.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", parents=[common], help="run each model on its own")
    p.add_argument("--models", nargs="+", help="model names (space or comma separated)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("chain", parents=[common], help="run a model chain over a corpus")
    p.add_argument("--chain", help="chain configuration file (JSON)")
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("propose", parents=[common], help="propose chains from a bench report")
    p.add_argument("--reports", help="report.csv written by 'bench'")
    p.add_argument("--k", type=int, help="chain length")
    p.add_argument("--mode", choices=MODES, default="in_document")
    p.set_defaults(func=cmd_propose)

    p = sub.add_parser("extract", parents=[common], help="extract the DOB from one text file")
    p.add_argument("--chain", help="chain configuration file (JSON)")
    p.add_argument("--text", help="plain-text document")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("report", parents=[common], help="re-score stored predictions")
    p.add_argument("--predictions", help="predictions .jsonl")
    p.add_argument("--stage-trace", help="stage trace .jsonl for per-stage rows")
    p.add_argument("--subject", help="subject name for the report rows")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"lmchain: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, CorpusError, FitError, ValueError) as exc:
        print(f"lmchain: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (BackendError, ChainRunError) as exc:
        print(f"lmchain: backend error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
