import random

import pytest

from lmchain.chain_builder import (
    CorrelationLine,
    FitError,
    ModelBenchmark,
    benchmarks_from_report,
    fit_correlation,
    propose_chains,
    rank_by_residual,
)
from lmchain.gateway import ModelSpec
from lmchain.synthetic import sample_benchmarks

from oracles import anchored_slope_closed_form, pearson_closed_form


def bench(name, tps, f1, f1_target=None):
    return ModelBenchmark(ModelSpec(name), tps, f1, f1 if f1_target is None else f1_target)


def random_benchmarks(rng, n=None):
    n = n or rng.randint(2, 12)
    tps = rng.sample(range(1, 2000), n)
    return [bench(f"m{i}", float(t), round(rng.uniform(30, 95), 1), round(rng.uniform(30, 95), 1))
            for i, t in enumerate(tps)]


def test_collinear_points_recover_slope():
    xs = [0.0, 150.0, 400.0, 900.0, 1500.0]
    bs = [bench(f"m{i}", x, 90 - 0.01 * x) for i, x in enumerate(xs)]
    line = fit_correlation(bs)
    assert line.anchor_y == 90
    assert line.slope == pytest.approx(-0.01, abs=1e-9)
    assert line.pearson_r == pytest.approx(-1.0, abs=1e-12)
    assert all(abs(r) < 1e-9 for _, r in rank_by_residual(bs, line))


def test_equal_f1_gives_flat_line_and_zero_r():
    line = fit_correlation([bench("a", 10, 80), bench("b", 20, 80)])
    assert line == CorrelationLine(80, 0.0, 0.0)


def test_fit_errors():
    with pytest.raises(FitError):
        fit_correlation([bench("a", 10, 80)])
    with pytest.raises(FitError):
        fit_correlation([bench("a", 10, 80), bench("b", 10, 70)])


@pytest.mark.parametrize("seed", range(20))
def test_fit_matches_closed_form(seed):
    rng = random.Random(seed)
    bs = random_benchmarks(rng, 12)
    for mode in ("in_document", "matches_target"):
        xs = [b.mean_tps for b in bs]
        ys = [b.f1(mode) for b in bs]
        line = fit_correlation(bs, mode)
        assert line.slope == pytest.approx(anchored_slope_closed_form(xs, ys), abs=1e-9)
        assert line.pearson_r == pytest.approx(pearson_closed_form(xs, ys), abs=1e-9)


@pytest.mark.parametrize("seed", range(20))
def test_slope_is_scale_covariant(seed):
    rng = random.Random(100 + seed)
    bs = random_benchmarks(rng)
    s = rng.uniform(0.1, 10)
    scaled = [bench(b.name, b.mean_tps * s, b.f1_in_document) for b in bs]
    a, b = fit_correlation(bs), fit_correlation(scaled)
    assert b.slope == pytest.approx(a.slope / s, rel=1e-9)
    assert b.pearson_r == pytest.approx(a.pearson_r, abs=1e-9)


def test_ties_break_by_speed_then_name():
    bs = [bench("b", 100, 90 - 1.0), bench("a", 100, 90 - 1.0), bench("c", 0, 90), bench("d", 50, 90 - 0.5)]
    line = fit_correlation(bs)
    assert [n for n, _ in rank_by_residual(bs, line)] == ["a", "b", "d", "c"]


def test_single_outlier_ranks_first():
    bs = [bench(f"m{i}", 100.0 * i, 90 - 0.02 * 100 * i) for i in range(6)]
    bs[3] = bench("star", 300.0, 95.0 - 0.02 * 300)
    line = fit_correlation(bs)
    assert rank_by_residual(bs, line)[0][0] == "star"


def test_sample_benchmarks_selection_and_proposals():
    bs = sample_benchmarks()
    line = fit_correlation(bs)
    top3 = [n for n, _ in rank_by_residual(bs, line)[:3]]
    assert set(top3) == {"llama3.2:1b", "qwen3:0.6b", "qwen3:4b"}
    proposals = propose_chains(bs, 3)
    assert [p.chain.model_names for p in proposals] == [
        ["llama3.2:1b", "qwen3:0.6b", "qwen3:4b"],
        ["llama3.2:1b", "qwen3:0.6b"],
        ["qwen3:0.6b", "llama3.2:1b"],
    ]
    assert all(p.rationale and len(p.residuals) == 12 for p in proposals)


def test_k2_gives_both_orderings():
    bs = [bench("slow", 10, 90), bench("fast", 500, 70)]
    assert [p.chain.model_names for p in propose_chains(bs, 2)] == [["fast", "slow"], ["slow", "fast"]]


def test_propose_precondition_errors():
    bs = [bench("slow", 10, 90), bench("fast", 500, 70)]
    with pytest.raises(FitError):
        propose_chains(bs, 3)
    with pytest.raises(ValueError):
        propose_chains(bs, 1)


@pytest.mark.parametrize("seed", range(50))
def test_uniform_f1_shift_keeps_ordering(seed):
    rng = random.Random(1000 + seed)
    bs = random_benchmarks(rng)
    c = rng.uniform(-20, 4)
    shifted = [bench(b.name, b.mean_tps, b.f1_in_document + c) for b in bs]
    a, b = fit_correlation(bs), fit_correlation(shifted)
    assert b.anchor_y == pytest.approx(a.anchor_y + c)
    assert [n for n, _ in rank_by_residual(bs, a)] == [n for n, _ in rank_by_residual(shifted, b)]


def test_benchmarks_from_report_rows():
    rows = [
        {"subject": "a", "mode": "in_document", "f1": 80.0, "tps_mean": 12.5},
        {"subject": "a", "mode": "matches_target", "f1": 70.0, "tps_mean": 12.5},
    ]
    (b,) = benchmarks_from_report(rows)
    assert (b.name, b.mean_tps, b.f1_in_document, b.f1_matches_target) == ("a", 12.5, 80.0, 70.0)
    with pytest.raises(ValueError):
        benchmarks_from_report(rows[:1])
