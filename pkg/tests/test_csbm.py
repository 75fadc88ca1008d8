import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsllab.csbm import CsbmConfig, class_means, generate_csbm
from gsllab.errors import ValidationError
from gsllab.graph import build_graph, edge_homophily

SMALL = CsbmConfig(num_nodes=200, feature_dim=4, num_classes=4)


@pytest.mark.parametrize("bad", [
    dict(homophily=1.5), dict(homophily=-0.1), dict(degree_min=0),
    dict(degree_min=5, degree_max=3), dict(num_nodes=3, num_classes=5), dict(class_std=0.0),
])
def test_config_validation(bad):
    with pytest.raises(ValidationError):
        generate_csbm(CsbmConfig(**bad), seed=0)


@pytest.mark.parametrize("seed", range(3))
def test_full_homophily_is_exact(seed):
    g = generate_csbm(CsbmConfig(num_nodes=300, homophily=1.0), seed)
    assert edge_homophily(g) == 1.0


def test_zero_homophily_has_no_intra_edges():
    g = generate_csbm(CsbmConfig(num_nodes=300, homophily=0.0), 0)
    assert edge_homophily(g) == 0.0


def test_mid_homophily_over_seeds():
    vals = [edge_homophily(generate_csbm(CsbmConfig(homophily=0.5), s)) for s in range(10)]
    assert 0.45 <= np.mean(vals) <= 0.55


def test_deterministic():
    a = generate_csbm(SMALL, 7)
    b = generate_csbm(SMALL, 7)
    assert a.same_as(b)
    assert not a.same_as(generate_csbm(SMALL, 8))


def test_labels_balanced():
    g = generate_csbm(CsbmConfig(num_nodes=103, num_classes=5), 0)
    counts = np.bincount(g.labels, minlength=5)
    assert counts.max() - counts.min() <= 1


def test_round_trips_through_build_graph():
    g = generate_csbm(CsbmConfig(), 0)
    again = build_graph(g.edges(), g.num_nodes, g.features, g.labels, g.num_classes)
    assert again.same_as(g)


def test_class_means_within_sampling_error():
    cfg = CsbmConfig(num_nodes=5000, feature_dim=6, num_classes=5)
    g = generate_csbm(cfg, 3)
    mu = class_means(cfg, np.random.default_rng(3))  # first draw from the same stream
    tol = 3 * cfg.class_std / np.sqrt(cfg.num_nodes / cfg.num_classes)
    for k in range(cfg.num_classes):
        emp = g.features[g.labels == k].mean(axis=0)
        assert np.all(np.abs(emp - mu[k]) <= tol)
    np.testing.assert_allclose(np.linalg.norm(mu, axis=1), cfg.class_mean_scale)


def test_drop_rate_small_at_default():
    _, stats = generate_csbm(CsbmConfig(), 0, return_stats=True)
    assert stats.drop_rate < 0.01


def test_degree_floor():
    cfg = CsbmConfig(num_nodes=300)
    g, stats = generate_csbm(cfg, 1, return_stats=True)
    assert g.degrees().min() >= cfg.degree_min - stats.dropped


def test_tiny_classes_drop_instead_of_failing():
    cfg = CsbmConfig(num_nodes=4, num_classes=2, homophily=1.0, degree_min=3, degree_max=3)
    g, stats = generate_csbm(cfg, 0, return_stats=True)
    assert g.num_edges == 2
    assert stats.dropped == stats.proposals - 2


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), h=st.floats(0, 1), c=st.integers(1, 6))
def test_generated_graphs_are_well_formed(seed, h, c):
    cfg = CsbmConfig(num_nodes=60, feature_dim=3, num_classes=c, homophily=h)
    g = generate_csbm(cfg, seed)
    a = g.adjacency
    assert (a != a.T).nnz == 0
    assert a.diagonal().sum() == 0
    assert set(np.unique(a.data)) <= {1.0}
    assert g.features.shape == (60, 3)
    assert np.all((g.labels >= 0) & (g.labels < c))
