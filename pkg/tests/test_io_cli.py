import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from gsllab.cli import main
from gsllab.csbm import CsbmConfig, generate_csbm
from gsllab.errors import ValidationError
from gsllab.graph import build_graph
from gsllab.io import (class_block_density, load_bundle, load_matrix, render_sorted_adjacency,
                       save_bundle, save_matrix)
from gsllab.nn import DataSplit

from conftest import random_graph


def digest(root):
    h = hashlib.sha256()
    for p in sorted(root.iterdir()):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()


def test_bundle_round_trip(tmp_path):
    g = random_graph(0, n=30)
    split = DataSplit.random(30, 0)
    save_bundle(g, split, tmp_path)
    g2, s2 = load_bundle(tmp_path)
    assert g2.same_as(g)
    for role in ("train", "val", "test"):
        assert np.array_equal(getattr(s2, role), getattr(split, role))


def test_bundle_without_split(tmp_path):
    g = random_graph(1)
    save_bundle(g, DataSplit.random(g.num_nodes, 0), tmp_path)
    save_bundle(g, None, tmp_path)
    assert load_bundle(tmp_path)[1] is None


def test_bundle_bytes_deterministic(tmp_path):
    g = generate_csbm(CsbmConfig(num_nodes=200), 4)
    save_bundle(g, None, tmp_path / "a")
    save_bundle(g, None, tmp_path / "b")
    assert digest(tmp_path / "a") == digest(tmp_path / "b")


def test_csbm_bundle_loads_identically_in_another_process(tmp_path):
    g = generate_csbm(CsbmConfig(), 0)
    save_bundle(g, None, tmp_path)
    code = ("import sys, hashlib; from gsllab.io import load_bundle; g, _ = load_bundle(sys.argv[1]);"
            "h = hashlib.sha256(); [h.update(a.tobytes()) for a in (g.adjacency.indptr,"
            " g.adjacency.indices, g.adjacency.data, g.features, g.labels)]; print(h.hexdigest())")
    out = subprocess.run([sys.executable, "-c", code, str(tmp_path)], capture_output=True,
                         text=True, check=True).stdout.strip()
    h = hashlib.sha256()
    for a in (g.adjacency.indptr, g.adjacency.indices, g.adjacency.data, g.features, g.labels):
        h.update(np.ascontiguousarray(a).tobytes())
    assert out == h.hexdigest()


def write_bundle(root, n=3, edges="0,1\n", features=None, labels=None, c=2):
    root.mkdir(exist_ok=True)
    (root / "meta.json").write_text(json.dumps(
        {"name": "t", "num_nodes": n, "num_classes": c, "feature_dim": 1}))
    (root / "edges.csv").write_text(edges)
    (root / "features.csv").write_text(features or "".join(f"{i}\n" for i in range(n)))
    (root / "labels.csv").write_text(labels or "".join(f"{i % c}\n" for i in range(n)))


@pytest.mark.parametrize("kwargs, message", [
    (dict(edges="0,1\n0,0\n"), "edges.csv:2: self-loop"),
    (dict(features="0\n1\n2\n3\n"), "4 rows"),
    (dict(labels="0\nx\n1\n"), "labels.csv:2"),
    (dict(labels="0\n5\n1\n"), "labels.csv:2"),
    (dict(edges="0,9\n"), "edges.csv:1"),
])
def test_bundle_errors(tmp_path, kwargs, message):
    write_bundle(tmp_path / "b", **kwargs)
    with pytest.raises(ValidationError, match=message):
        load_bundle(tmp_path / "b")


def test_missing_file(tmp_path):
    write_bundle(tmp_path / "b")
    (tmp_path / "b" / "labels.csv").unlink()
    with pytest.raises(ValidationError, match="missing"):
        load_bundle(tmp_path / "b")


def test_matrix_round_trip_is_lossless(tmp_path):
    m = np.random.default_rng(0).standard_normal((7, 3)) * 1e-7
    save_matrix(m, tmp_path / "m.csv")
    assert np.array_equal(load_matrix(tmp_path / "m.csv"), m)


def test_class_density_intra_only():
    g = build_graph([(0, 1), (2, 3)], 4, labels=[0, 0, 1, 1], num_classes=2)
    d = class_block_density(g)
    assert d[0, 1] == d[1, 0] == 0.0
    assert d[0, 0] == d[1, 1] == 1.0


def test_class_density_dominance():
    hi = class_block_density(generate_csbm(CsbmConfig(homophily=1.0), 0))
    lo = class_block_density(generate_csbm(CsbmConfig(homophily=0.0), 0))
    off = ~np.eye(5, dtype=bool)
    assert np.diag(hi).min() > hi[off].max()
    assert np.diag(lo).max() < lo[off].min()


def test_pgm_header_and_body(tmp_path):
    g = build_graph([(0, 2)], 3, labels=[1, 0, 1], num_classes=2)
    render_sorted_adjacency(g, tmp_path / "a.pgm")
    lines = (tmp_path / "a.pgm").read_text().splitlines()
    assert lines[:3] == ["P2", "3 3", "1"]
    # sorted order is [1, 0, 2]; the edge 0-2 lands at (1, 2)
    assert lines[3:] == ["0 0 0", "0 0 1", "0 1 0"]


# ---- CLI ---------------------------------------------------------------------

@pytest.fixture
def bundle(tmp_path):
    out = tmp_path / "g"
    assert main(["generate", "--nodes", "120", "--homophily", "0.8", "--seed", "1",
                 "--out", str(out)]) == 0
    return out


def test_cli_generate_is_byte_identical(tmp_path, bundle):
    other = tmp_path / "g2"
    main(["generate", "--nodes", "120", "--homophily", "0.8", "--seed", "1", "--out", str(other)])
    assert digest(bundle) == digest(other)


def test_cli_homophily(bundle, capsys):
    assert main(["homophily", str(bundle)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("edge_homophily 0.")
    assert "node_homophily" in out


def test_cli_pipeline(tmp_path, bundle, capsys):
    bases = tmp_path / "b.csv"
    assert main(["bases", str(bundle), "--kind", "agg:1", "--out", str(bases)]) == 0
    assert load_matrix(bases).shape == (120, 10)
    gsl = tmp_path / "gsl"
    assert main(["rewire", str(bundle), "--bases-file", str(bases), "--method", "cos-node:1",
                 "--out", str(gsl)]) == 0
    assert main(["mi", str(bundle), "--bases-file", str(bases), "--k", "3"]) == 0
    capsys.readouterr()
    assert main(["train", str(bundle), "--model", "sgc:2", "--fusion", "late-separate",
                 "--gsl", str(gsl), "--epochs", "5"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert 0.0 <= report["best_test_acc"] <= 1.0
    assert main(["viz", str(bundle), "--mode", "class", "--out", str(tmp_path / "d.csv")]) == 0
    assert load_matrix(tmp_path / "d.csv").shape == (5, 5)


def test_cli_sweep_and_verify(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"h_grid": [0.5], "seeds": 1, "csbm": {"num_nodes": 100},
                               "bases": ["raw"], "train": {"epochs": 5}}))
    out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["sweep", "--config", str(cfg), "--out", str(out2), "--workers", "2"]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert len(out1.read_text().splitlines()) == 4
    assert main(["verify", "--theorem", "fano", "--config", str(cfg)]) == 0
    assert main(["verify", "--theorem", "dpi", "--config", str(cfg)]) == 0


def test_cli_ablate(tmp_path, bundle):
    cfg = tmp_path / "grid.json"
    cfg.write_text(json.dumps({"models": ["gcn"], "constructs": ["knn:3"],
                               "fusions": ["early"], "seeds": 1, "hidden": 4,
                               "train": {"epochs": 3}}))
    out = tmp_path / "t.csv"
    assert main(["ablate", str(bundle), "--config", str(cfg), "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == \
        "model,bases,construct,fusion,param_sharing,mean_acc,std_acc,rank"


def test_cli_bench(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["bench", "--sizes", "40,80", "--reps", "1", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 3


@pytest.mark.parametrize("argv", [
    ["generate", "--homophily", "2", "--out", "x"],
    ["homophily", "/nonexistent/bundle"],
    ["train"],
    ["frobnicate"],
    ["sweep", "--config", "/nonexistent.json", "--out", "x"],
])
def test_cli_validation_exit_code(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as exc:
        sys.exit(main(argv))
    assert exc.value.code == 1


def test_cli_runtime_exit_code(tmp_path, bundle):
    # the output directory is a file, so writing fails with an OS error
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["bases", str(bundle), "--out", str(blocker / "b.csv")]) == 2


def test_cli_failed_verify_exit_code(tmp_path, monkeypatch):
    import gsllab.cli as cli
    from gsllab.experiments import DpiRow
    monkeypatch.setattr(cli, "dpi_sweep", lambda cfg: [DpiRow(0.5, "raw", "mean", 0.1, 0.5,
                                                              -0.4, -0.4)])
    assert main(["verify", "--theorem", "dpi"]) == 2


def test_console_script_runs():
    res = subprocess.run([sys.executable, "-m", "gsllab.cli", "--help"], capture_output=True,
                         text=True)
    assert res.returncode == 0 and "generate" in res.stdout
