from __future__ import annotations

import json

import pytest

from immlab.experiments import (
    exp_color_paths,
    exp_color_tail_trend,
    exp_decompose_roundtrip,
    exp_full_rank,
    exp_product_rank,
    exp_simple_rank,
    exp_size_table,
    frequency_verdict,
    make_coloring,
)
from immlab.generators import ThresholdUnsatisfiable


def test_full_rank_small():
    rep = exp_full_rank(9, 100, seed=1)
    assert rep.passed and rep.aggregates["full"] == 100
    assert exp_full_rank(1, 5).passed
    assert exp_full_rank(9, 50, seed=1, route="transfer").records == exp_full_rank(9, 50, seed=1).records


def test_reports_are_deterministic():
    a = exp_product_rank(5, 3, 40, seed=4, density=0.5)
    b = exp_product_rank(5, 3, 40, seed=4, density=0.5)
    assert a.dumps(with_timestamp=False) == b.dumps(with_timestamp=False)
    assert "timestamp" in json.loads(a.dumps())
    assert a.to_csv().splitlines()[0].startswith("trial")


def test_product_rank_hard_checks():
    rep = exp_product_rank(6, 4, 60, seed=2, density=0.5)
    assert rep.verdict("rank <= 2^((|Y|+|Z|-ell)/2)").passed
    assert rep.verdict("rank multiplicativity").passed
    assert exp_product_rank(3, 1, 10).verdict("rank multiplicativity").passed


def test_simple_rank():
    rep = exp_simple_rank(6, 2, 60, seed=3, threshold=14, density=0.5)
    assert rep.verdict("rank <= 2^(r' + (|Y|+|Z|-|U_rho|)/2)").passed
    with pytest.raises(ThresholdUnsatisfiable):
        exp_simple_rank(4, 1, 5)


def test_layer_coloring_sees_every_color():
    rep = exp_color_paths(10, "layer", 200, seed=5)
    assert rep.verdict("|C_pi| = d").passed
    chi, _ = make_coloring("layer", 10)
    assert chi.t == 10


def test_fresh_edge_coloring_runs():
    rep = exp_color_paths(9, "fresh-edge", 200, seed=5, t=5)
    assert rep.verdict("new-color indicator = 1/4").n > 0


def test_tail_trend_small():
    rep = exp_color_tail_trend((8, 16, 32), trials=400, seed=1)
    tails = rep.aggregates
    assert rep.verdicts and tails


def test_decompose_roundtrip_d8():
    rep = exp_decompose_roundtrip(8, 2, 2, seed=0, rho_trials=20)
    assert rep.passed, [v for v in rep.verdicts if not v.passed]


def test_size_table_report():
    rep = exp_size_table([4, 8, 16], [1, 2, 3, 4])
    assert rep.passed
    assert rep.aggregates["csv"].startswith("d,delta,formula_size")


def test_frequency_verdict_band():
    assert frequency_verdict("x", 5000, 10_000, 0.5).passed
    assert not frequency_verdict("x", 5300, 10_000, 0.5).passed
