"""Propose chains from single-model benchmarks.

Models are placed on a speed/accuracy plane (mean TPS against F1). A line is
anchored at (0, best F1) and its slope fitted by least squares; models lying
furthest above that line are fast for their accuracy and make good chain
members.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cascade import ChainConfig
from .gateway import ModelSpec, PromptTemplate

__all__ = [
    "ChainProposal",
    "CorrelationLine",
    "FitError",
    "ModelBenchmark",
    "benchmarks_from_report",
    "fit_correlation",
    "propose_chains",
    "rank_by_residual",
]

# residuals are compared at this precision so float noise cannot reorder ties
_RESIDUAL_DIGITS = 9


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class ModelBenchmark:
    model: ModelSpec
    mean_tps: float
    f1_in_document: float
    f1_matches_target: float

    def __post_init__(self) -> None:
        if self.mean_tps < 0:
            raise ValueError("mean_tps must be non-negative")
        for f1 in (self.f1_in_document, self.f1_matches_target):
            if not 0 <= f1 <= 100:
                raise ValueError(f"F1 {f1} outside [0, 100]")

    @property
    def name(self) -> str:
        return self.model.name

    def f1(self, mode: str) -> float:
        if mode == "in_document":
            return self.f1_in_document
        if mode == "matches_target":
            return self.f1_matches_target
        raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class CorrelationLine:
    anchor_y: float
    slope: float
    pearson_r: float

    def __call__(self, tps: float) -> float:
        return self.anchor_y + self.slope * tps


@dataclass(frozen=True)
class ChainProposal:
    chain: ChainConfig
    rationale: str
    residuals: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        if len(self.chain.models) < 2:
            raise ValueError("a proposed chain needs at least two models")


def fit_correlation(benchmarks, mode: str = "in_document") -> CorrelationLine:
    """Anchored least-squares line of F1 on mean TPS, plus Pearson's r."""
    benchmarks = list(benchmarks)
    if len(benchmarks) < 2:
        raise FitError("need at least two benchmarks to fit a line")
    x = np.array([b.mean_tps for b in benchmarks], dtype=float)
    y = np.array([b.f1(mode) for b in benchmarks], dtype=float)
    if np.ptp(x) == 0:
        raise FitError("mean TPS has zero variance")

    anchor = float(y.max())
    # minimise sum((y - anchor - slope*x)^2) with the intercept pinned
    slope = float(np.dot(x, y - anchor) / np.dot(x, x))
    if np.ptp(y) == 0:
        r = 0.0
    else:
        r = float(np.clip(np.corrcoef(x, y)[0, 1], -1.0, 1.0))
    return CorrelationLine(anchor, slope, r)


def rank_by_residual(benchmarks, line: CorrelationLine, mode: str = "in_document"):
    """(model name, residual) pairs, highest residual first.

    Ties go to the faster model, then to the alphabetically first name.
    """
    scored = [(b, b.f1(mode) - line(b.mean_tps)) for b in benchmarks]
    scored.sort(key=lambda p: (-round(p[1], _RESIDUAL_DIGITS), -p[0].mean_tps, p[0].name))
    return [(b.name, res) for b, res in scored]


def _fastest_first(benchmarks):
    return sorted(benchmarks, key=lambda b: (-b.mean_tps, b.name))


def propose_chains(benchmarks, k: int, mode: str = "in_document",
                   prompt: PromptTemplate | None = None) -> list[ChainProposal]:
    """Chains built from the ``k`` models furthest above the fitted line.

    For k >= 3: the full top-k chain (fastest model first), its (k-1)-model
    prefix, and that prefix reversed. For k == 2: the pair in both orders.
    """
    benchmarks = list(benchmarks)
    if k < 2:
        raise ValueError("chain length k must be at least 2")
    if k > len(benchmarks):
        raise FitError(f"k={k} exceeds the {len(benchmarks)} available benchmarks")
    prompt = prompt or PromptTemplate()

    line = fit_correlation(benchmarks, mode)
    ranking = rank_by_residual(benchmarks, line, mode)
    residuals = tuple(ranking)
    by_name = {b.name: b for b in benchmarks}
    top = _fastest_first([by_name[name] for name, _ in ranking[:k]])
    names = ", ".join(b.name for b in top)
    fit_note = f"line anchored at F1={line.anchor_y:.1f}, slope {line.slope:.4g}, r={line.pearson_r:.3f}"

    def make(chain_id, members, why):
        chain = ChainConfig(chain_id, tuple(b.model for b in members), prompt)
        return ChainProposal(chain, f"{why} ({fit_note})", residuals)

    proposals = [make(f"top{k}", top,
                      f"the {k} models furthest above the speed/accuracy line, fastest first: {names}")]
    if k == 2:
        proposals.append(make("top2_reversed", top[::-1], "the same pair in reverse order"))
    else:
        prefix = top[:-1]
        proposals.append(make(f"top{k}_prefix", prefix,
                              f"the first {k - 1} models of top{k}, dropping the slowest"))
        proposals.append(make(f"top{k}_prefix_reversed", prefix[::-1],
                              f"top{k}_prefix in reverse order, to measure order sensitivity"))
    return proposals


def benchmarks_from_report(rows, options=None) -> list[ModelBenchmark]:
    """Collect one benchmark per subject from parsed report-table rows.

    Each subject needs a row in both modes; mean TPS is taken from the
    ``in_document`` row.
    """
    grouped: dict[str, dict[str, dict]] = {}
    for row in rows:
        grouped.setdefault(row["subject"], {})[row["mode"]] = row
    out = []
    for subject, modes in grouped.items():
        if set(modes) != {"in_document", "matches_target"}:
            raise ValueError(f"subject {subject!r} needs rows for both scoring modes")
        tps = modes["in_document"]["tps_mean"]
        if tps is None:
            raise ValueError(f"subject {subject!r} has no TPS statistics")
        spec = ModelSpec(subject, options) if options else ModelSpec(subject)
        out.append(ModelBenchmark(spec, tps, modes["in_document"]["f1"], modes["matches_target"]["f1"]))
    return out
