import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from lges import cli
from lges.errors import InternalConsistencyError
from lges.graph import complete, from_text, is_cpdag, mec_equal
from lges.io import read_graph, write_csv

METRIC_COLUMNS = ["algorithm", "insert", "p", "density", "n", "seed", "status", "shd", "f1",
                  "precision", "recall", "excess", "missing", "wrong", "score_evals"]


@pytest.fixture()
def sim(tmp_path):
    out = tmp_path / "sim"
    assert cli.main(["simulate", "--p", "5", "--n", "3000", "--seed", "2", "--target", "X0",
                     "--out", str(out)]) == 0
    return out


def test_independent_columns_give_empty_graph(tmp_path, capsys):
    rng = np.random.default_rng(0)
    write_csv(tmp_path / "d.csv", ["a", "b"], rng.standard_normal((2000, 2)))
    assert cli.main(["discover", str(tmp_path / "d.csv"), "--out", str(tmp_path / "o")]) == 0
    g, names = read_graph(tmp_path / "o" / "graph.txt")
    assert names == ["a", "b"] and g.num_edges() == 0


def test_discover_outputs_round_trip(sim, tmp_path, capsys):
    out = tmp_path / "d"
    assert cli.main(["discover", str(sim / "data.csv"), "--truth", str(sim / "truth.txt"),
                     "--algorithm", "lges", "--insert", "conservative", "--out", str(out)]) == 0
    printed, names = from_text(capsys.readouterr().out)
    g, _ = read_graph(out / "graph.txt")
    assert is_cpdag(g) and mec_equal(g, complete(g)) and g == printed
    run = json.loads((out / "run.json").read_text())
    assert run["seed"] == 0 and run["config"]["insert"] == "conservative"
    assert run["inputs"]["data"].startswith("sha256:") and "metrics" in run
    steps = [json.loads(line) for line in (out / "trace.log").read_text().splitlines()]
    assert len(steps) == run["steps"]


def test_discover_is_reproducible(sim, tmp_path, capsys):
    for name in ("a", "b"):
        cli.main(["discover", str(sim / "data.csv"), "--out", str(tmp_path / name)])
    assert (tmp_path / "a" / "graph.txt").read_bytes() == (tmp_path / "b" / "graph.txt").read_bytes()


def test_oracle_mode_recovers_truth(sim, tmp_path, capsys):
    out = tmp_path / "o"
    assert cli.main(["discover", "--score", "oracle", "--truth", str(sim / "truth.txt"),
                     "--algorithm", "ges", "--out", str(out)]) == 0
    assert json.loads((out / "run.json").read_text())["metrics"]["shd"] == 0


def test_knowledge_modes(sim, tmp_path, capsys):
    (tmp_path / "k.txt").write_text("require X0 -> X1\nforbid X2 -- X3\n")
    for flag, mode in (("--prioritize-knowledge", "prioritize"), ("--init-from-knowledge", "initialize")):
        out = tmp_path / mode
        assert cli.main(["discover", str(sim / "data.csv"), "--knowledge", str(tmp_path / "k.txt"),
                         flag, "--out", str(out)]) == 0
        run = json.loads((out / "run.json").read_text())
        assert run["config"]["knowledge_mode"] == mode


@pytest.mark.parametrize("content,needle", [
    ("a,b\n1,2\n3\n", "line 3"),
    ("a,b\n1,x\n", "line 2"),
    ("a,a\n1,2\n", "duplicate"),
])
def test_bad_csv_exit_code(tmp_path, capsys, content, needle):
    (tmp_path / "d.csv").write_text(content)
    assert cli.main(["discover", str(tmp_path / "d.csv"), "--out", str(tmp_path / "o")]) == 2
    assert needle in capsys.readouterr().err


def test_bad_knowledge_and_missing_file(sim, tmp_path, capsys):
    (tmp_path / "k.txt").write_text("require X0 -> Q\n")
    assert cli.main(["discover", str(sim / "data.csv"), "--knowledge", str(tmp_path / "k.txt"),
                     "--out", str(tmp_path / "o")]) == 2
    assert "line 1" in capsys.readouterr().err
    assert cli.main(["discover", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o")]) == 2
    assert cli.main(["discover", "--score", "oracle", "--out", str(tmp_path / "o")]) == 2


def test_internal_error_exit_code(sim, tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise InternalConsistencyError("broken invariant")
    monkeypatch.setattr(cli, "run", boom)
    assert cli.main(["discover", str(sim / "data.csv"), "--out", str(tmp_path / "o")]) == 3
    assert "broken invariant" in capsys.readouterr().err


def test_iorient_observational_only_is_identity(sim, tmp_path, capsys):
    cli.main(["discover", str(sim / "data.csv"), "--out", str(tmp_path / "d")])
    (tmp_path / "obs.json").write_text(json.dumps([{"targets": [], "data": str(sim / "data.csv")}]))
    assert cli.main(["iorient", str(tmp_path / "d" / "graph.txt"), str(tmp_path / "obs.json"),
                     "--out", str(tmp_path / "i")]) == 0
    assert (tmp_path / "i" / "graph.txt").read_text() == (tmp_path / "d" / "graph.txt").read_text()


def test_iorient_full_coverage_oracle(sim, tmp_path, capsys):
    truth, names = read_graph(sim / "truth.txt")
    cli.main(["discover", "--score", "oracle", "--truth", str(sim / "truth.txt"), "--out", str(tmp_path / "d")])
    entries = [{"targets": []}] + [{"targets": [n]} for n in names]
    (tmp_path / "m.json").write_text(json.dumps(entries))
    assert cli.main(["iorient", str(tmp_path / "d" / "graph.txt"), str(tmp_path / "m.json"),
                     "--truth", str(sim / "truth.txt"), "--out", str(tmp_path / "i")]) == 0
    g, _ = read_graph(tmp_path / "i" / "graph.txt")
    assert g == truth
    assert (tmp_path / "i" / "orientation.tsv").exists()


def test_iorient_chain_gains_an_orientation(tmp_path, capsys):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((4000, 2))
    x[:, 1] += x[:, 0]
    xi = rng.standard_normal((4000, 2))
    xi[:, 1] += xi[:, 0]
    write_csv(tmp_path / "obs.csv", ["X", "Y"], x)
    write_csv(tmp_path / "ix.csv", ["X", "Y"], xi)
    (tmp_path / "g.txt").write_text("# nodes: X Y\nX -- Y\n")
    (tmp_path / "m.json").write_text(json.dumps(
        [{"targets": [], "data": "obs.csv"}, {"targets": ["X"], "data": "ix.csv"}]))
    assert cli.main(["iorient", str(tmp_path / "g.txt"), str(tmp_path / "m.json"), "--out", str(tmp_path / "i")]) == 0
    assert "X -> Y" in (tmp_path / "i" / "graph.txt").read_text()


def test_iorient_unknown_target(tmp_path, capsys):
    write_csv(tmp_path / "obs.csv", ["X", "Y"], np.eye(3)[:, :2] + np.arange(3)[:, None])
    (tmp_path / "g.txt").write_text("# nodes: X Y\nX -- Y\n")
    (tmp_path / "m.json").write_text(json.dumps([{"targets": ["W"], "data": "obs.csv"}]))
    assert cli.main(["iorient", str(tmp_path / "g.txt"), str(tmp_path / "m.json"), "--out", str(tmp_path / "i")]) == 2


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_benchmark_rows_and_determinism(tmp_path, capsys):
    args = ["benchmark", "--p", "8", "--n", "1000", "--seeds", "0", "--algorithms", "ges", "lges:conservative"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    a, b = _rows(tmp_path / "a" / "results.csv"), _rows(tmp_path / "b" / "results.csv")
    assert len(a) == 2 and [r["algorithm"] for r in a] == ["ges", "lges"]
    assert all(r["status"] == "ok" for r in a)
    assert [[r[c] for c in METRIC_COLUMNS] for r in a] == [[r[c] for c in METRIC_COLUMNS] for r in b]


def test_benchmark_bad_algorithm(tmp_path, capsys):
    assert cli.main(["benchmark", "--p", "5", "--algorithms", "pc", "--out", str(tmp_path)]) == 2


def test_metrics_command(sim, capsys):
    assert cli.main(["metrics", str(sim / "truth.txt"), str(sim / "truth.txt")]) == 0
    assert json.loads(capsys.readouterr().out)["shd"] == 0


def test_simulate_outputs(sim):
    manifest = json.loads((sim / "manifest.json").read_text())
    assert manifest[1] == {"targets": ["X0"], "data": "int0.csv"}
    params = json.loads((sim / "params.json").read_text())
    assert params["p"] == 5 and len(params["weights"]) == 5


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "lges.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "lges" in out.stdout
