import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsllab.construct import ConstructSpec, build_gsl_graph
from gsllab.csbm import CsbmConfig, generate_csbm
from gsllab.errors import ValidationError
from gsllab.mi import label_entropy
from gsllab.theory import (DPI_SLACK, check_dpi, check_fano, fano_bound, summarize_fano)

from conftest import random_graph


def test_fano_examples():
    assert fano_bound(0.0, 2) == 1.0
    assert fano_bound(0.0, 5) == pytest.approx(0.4307, abs=1e-4)
    assert fano_bound(math.log(5), 5) == 1.0
    with pytest.raises(ValidationError):
        fano_bound(0.1, 1)
    with pytest.raises(ValidationError):
        fano_bound(-0.1, 3)


@settings(max_examples=200)
@given(a=st.floats(0, 5), b=st.floats(0, 5), c=st.integers(2, 50))
def test_fano_monotone(a, b, c):
    lo, hi = min(a, b), max(a, b)
    assert fano_bound(lo, c) <= fano_bound(hi, c)
    assert fano_bound(lo, c + 1) <= fano_bound(lo, c)
    assert 0.0 < fano_bound(lo, c) <= 1.0


def test_fano_check_and_summary():
    ok = check_fano(0.0, 5, 0.5)
    bad = check_fano(0.0, 5, 0.6)
    assert not ok.violated and bad.violated
    assert bad.bound == pytest.approx(math.log(2) / math.log(5))
    s = summarize_fano([ok] * 49 + [bad])
    assert s.violation_rate == 0.02 and s.ok
    assert not summarize_fano([ok] * 48 + [bad] * 2 + [bad]).ok


def test_fano_with_label_entropy_is_vacuous():
    y = np.arange(100) % 5
    assert fano_bound(label_entropy(y), 5) == 1.0


def test_dpi_one_hot_bases():
    g = random_graph(0, n=90, p=0.08)
    y = np.arange(90) % 3
    b = np.eye(3)[y]
    i_b, _, gap = check_dpi(g, b, y)
    assert i_b == pytest.approx(label_entropy(y), abs=0.05)
    assert gap >= -DPI_SLACK


def test_dpi_constant_bases():
    g = random_graph(1, n=60)
    y = np.arange(60) % 3
    for agg in ("mean", "sym-norm"):
        assert check_dpi(g, np.ones((60, 2)), y, agg) == (0.0, 0.0, 0.0)


def test_dpi_unknown_aggregation():
    g = random_graph(1, n=30)
    with pytest.raises(ValidationError):
        check_dpi(g, np.ones((30, 2)), np.arange(30) % 3, "max")


@pytest.mark.parametrize("h", [0.0, 0.5, 1.0])
def test_dpi_on_csbm_knn(h):
    gaps = []
    for seed in range(3):
        g = generate_csbm(CsbmConfig(num_nodes=600, homophily=h), seed)
        g_new = build_gsl_graph(g.features, ConstructSpec("knn", k=5))
        gaps.append(check_dpi(g_new, g.features, g.labels, "sym-norm")[2])
    assert np.mean(gaps) >= -DPI_SLACK
