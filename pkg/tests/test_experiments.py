import math

import numpy as np
import pytest

from gsllab.csbm import CsbmConfig, generate_csbm
from gsllab.errors import ValidationError
from gsllab.experiments import (ABLATION_HEADER, RESULTS_HEADER, AblationGrid, SweepConfig,
                                ablation_from_csv, ablation_to_csv, cell_means, derive_seed,
                                dpi_sweep, records_from_csv, records_to_csv, run_ablation,
                                run_synthetic_sweep, timing_benchmark, timing_to_csv)
from gsllab.nn import DataSplit, ModelSpec, TrainConfig, train

TINY = SweepConfig(h_grid=(0.0, 1.0), seeds=2, csbm=CsbmConfig(num_nodes=120),
                   classifier=ModelSpec("mlp", hidden=16), train=TrainConfig(epochs=20))


@pytest.fixture(scope="module")
def tiny_records():
    return run_synthetic_sweep(TINY)


def test_derive_seed_stable_and_distinct():
    assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
    assert len({derive_seed(0, i, j) for i in range(10) for j in range(10)}) == 100


def test_sweep_config_validation_and_dict_round_trip():
    with pytest.raises(ValidationError):
        SweepConfig(h_grid=())
    with pytest.raises(ValidationError):
        SweepConfig(seeds=0)
    with pytest.raises(ValidationError, match="bogus"):
        SweepConfig.from_dict({"bogus": 1})
    assert SweepConfig.from_dict(TINY.to_dict()) == TINY
    assert len(SweepConfig().h_grid) == 11


def test_record_count(tiny_records):
    assert len(tiny_records) == 2 * 2 * len(TINY.bases) * 3
    keys = {(r.h, r.seed, r.bases, r.representation) for r in tiny_records}
    assert len(keys) == len(tiny_records)
    assert not any(r.failed for r in tiny_records)


def test_records_consistent(tiny_records):
    for r in tiny_records:
        assert 0.0 <= r.accuracy <= 1.0
        assert r.mi_nats >= 0.0
        assert r.fano_bound == pytest.approx(min(1.0, (r.mi_nats + math.log(2)) / math.log(5)))
        assert r.wall_ms == 0.0


def test_csv_round_trip(tiny_records):
    text = records_to_csv(tiny_records)
    assert text.splitlines()[0] == ",".join(RESULTS_HEADER)
    back = records_from_csv(text)
    assert back == tiny_records
    with pytest.raises(ValidationError):
        records_from_csv("a,b\n")


def test_sweep_failures_are_recorded():
    cfg = SweepConfig(h_grid=(0.5,), seeds=1, csbm=CsbmConfig(num_nodes=120),
                      bases=("raw", "mlp"), construct="cos-graph:0.0001",
                      train=TrainConfig(epochs=2))
    recs = run_synthetic_sweep(cfg)
    assert len(recs) == 6
    assert all(r.failed and math.isnan(r.mi_nats) for r in recs)


def test_cell_means(tiny_records):
    means = cell_means(tiny_records)
    assert set(means) == {(b, h, r) for b in TINY.bases for h in TINY.h_grid
                          for r in ("B", "H", "Hprime")}
    raw_b = [r for r in tiny_records if r.bases == "raw" and r.h == 0.0 and r.representation == "B"]
    assert means[("raw", 0.0, "B")][0] == pytest.approx(np.mean([r.mi_nats for r in raw_b]))


def test_propagation_gains_at_full_homophily(tiny_records):
    means = cell_means(tiny_records)
    assert means[("raw", 1.0, "H")][0] > means[("raw", 1.0, "B")][0]


def test_dpi_sweep_rows():
    rows = dpi_sweep(TINY)
    assert len(rows) == 2 * 2 * 2
    assert {r.aggregation for r in rows} == {"mean", "sym-norm"}
    for r in rows:
        assert r.mean_gap == pytest.approx(r.mean_i_b - r.mean_i_b_prime)
        assert r.min_gap <= r.mean_gap + 1e-12


GRID = AblationGrid(models=("gcn",), constructs=("cos-graph:1", "knn:3"), seeds=2,
                    hidden=8, train=TrainConfig(epochs=15))


@pytest.fixture(scope="module")
def ablation_setup():
    g = generate_csbm(CsbmConfig(num_nodes=100, homophily=0.3), 0)
    split = DataSplit.random(100, 0)
    return g, split, run_ablation(g, split, GRID)


def test_ablation_row_structure(ablation_setup):
    _, _, rows = ablation_setup
    assert len(rows) == 2 + 2 * 4
    assert rows[0].model == "mlp" and rows[0].construct == "None"
    assert rows[1].model == "gcn" and rows[1].fusion == "-"
    sharing = {(r.fusion, r.param_sharing) for r in rows[2:]}
    assert sharing == {("only-new", "-"), ("early", "-"), ("late-shared", "shared"),
                       ("late-separate", "separate")}
    ranks = sorted(r.rank for r in rows)
    assert sum(ranks) == pytest.approx(len(rows) * (len(rows) + 1) / 2)


def test_ablation_baseline_recovers_plain_training(ablation_setup):
    g, split, rows = ablation_setup
    accs = []
    for s in range(GRID.seeds):
        cfg = TrainConfig(epochs=15, seed=derive_seed(GRID.global_seed, s, 13))
        _, rep = train(ModelSpec("gcn", hidden=8), g.features, [g], g.labels, split, cfg)
        accs.append(rep.best_test_acc)
    assert rows[1].mean_acc == np.mean(accs)
    assert rows[1].std_acc == np.std(accs)


def test_ablation_deterministic_and_csv(ablation_setup):
    g, split, rows = ablation_setup
    again = run_ablation(g, split, GRID)
    text = ablation_to_csv(rows)
    assert text == ablation_to_csv(again)
    assert text.splitlines()[0] == ",".join(ABLATION_HEADER)
    assert ablation_from_csv(text) == rows


def test_ablation_records_cell_failures():
    g = generate_csbm(CsbmConfig(num_nodes=60), 0)
    grid = AblationGrid(models=("gcn",), constructs=("cos-graph:0.00001",),
                        fusions=("only-new",), seeds=1, hidden=4, train=TrainConfig(epochs=3))
    rows = run_ablation(g, None, grid)
    assert len(rows) == 3
    assert rows[2].error and math.isnan(rows[2].mean_acc)
    assert not rows[0].error and rows[0].rank in (1.0, 1.5, 2.0)


def test_ablation_grid_from_dict():
    grid = AblationGrid.from_dict({"models": ["sgc:2"], "train": {"epochs": 5}})
    assert grid.models == ("sgc:2",)
    assert grid.train.epochs == 5
    with pytest.raises(ValidationError):
        AblationGrid.from_dict({"model": ["gcn"]})


def test_timing_table_shape():
    rows = timing_benchmark([50, 100], feature_dim=4, reps=1)
    assert [r[0] for r in rows] == [50, 100]
    assert math.isnan(rows[0][4]) and rows[1][4] > 0
    assert len(timing_to_csv(rows).splitlines()) == 3
    with pytest.raises(ValidationError):
        timing_benchmark([100, 50])
