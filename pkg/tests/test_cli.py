import csv
import io
import json
import subprocess
import sys

import pytest

from trcolor.cli import expand_sweep, main
from trcolor.graph import (
    complete_multipartite,
    cycle,
    disjoint_union,
    is_independent_set,
    load_graph,
    random_regular,
    verify_partial_coloring,
    write_graph,
)


@pytest.fixture
def graphs(tmp_path):
    paths = {}
    for name, g in {
        "k3": complete_multipartite(3, 1),
        "k4": complete_multipartite(4, 1),
        "c4": cycle(4),
        "k333": complete_multipartite(3, 3),
        "k55": complete_multipartite(2, 5),
        "tri3": disjoint_union([complete_multipartite(3, 1)] * 3),
        "rr18": random_regular(18, 3, 3),
    }.items():
        p = tmp_path / f"{name}.txt"
        write_graph(g, p)
        paths[name] = str(p)
    return paths


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


class TestGenerate:
    def test_multipartite(self, tmp_path, capsys):
        out = tmp_path / "g.txt"
        assert run(capsys, "generate", "multipartite", "--m", "5", "--out", str(out))[0] == 0
        assert load_graph(str(out)).n == 15
        meta = json.loads(out.with_suffix(".json").read_text())
        assert meta["family"] == "multipartite" and meta["n"] == 15

    def test_union_sidecar(self, tmp_path, capsys):
        out = tmp_path / "u.txt"
        run(capsys, "generate", "union", "--m", "4", "--copies", "2", "--out", str(out))
        meta = json.loads(out.with_suffix(".json").read_text())
        assert meta["n"] == 24 and meta["spectrum"]["threshold_rank"]["0.1"] == 2

    def test_perturbed(self, tmp_path, capsys):
        out = tmp_path / "p.txt"
        assert run(capsys, "generate", "perturbed", "--m", "5", "--delta", "0.1", "--seed", "7",
                   "--out", str(out))[0] == 0
        g = load_graph(str(out))
        meta = json.loads(out.with_suffix(".json").read_text())
        assert g.n == 15 and g.degree == 10
        partial = [0 if u in meta["perturbed_subset"] else c for u, c in enumerate(meta["reference_coloring"])]
        assert verify_partial_coloring(g, partial).valid

    def test_stdout(self, capsys):
        code, out = run(capsys, "generate", "multipartite", "--m", "1")
        assert code == 0 and out.splitlines()[0] == "3 3"

    def test_bad_params(self, capsys):
        code, out = run(capsys, "generate", "multipartite", "--m", "0")
        assert code == 1 and "error" in json.loads(out)


class TestAnalyze:
    @pytest.mark.parametrize("name,eps,r", [("k3", "0.1", 1), ("tri3", "0.01", 3), ("c4", "0.5", 1)])
    def test_threshold_rank(self, graphs, capsys, name, eps, r):
        code, out = run(capsys, "analyze", graphs[name], "--eps", eps)
        assert code == 0 and json.loads(out)["threshold_rank_eps"] == r

    def test_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("3 2\n0 1\n")
        code, out = run(capsys, "analyze", str(bad))
        assert code == 1 and json.loads(out)["message"]

    def test_missing_file(self, capsys):
        assert run(capsys, "analyze", "/nonexistent/graph.txt")[0] == 1


class TestSolve:
    def test_color_k333(self, graphs, capsys):
        code, out = run(capsys, "color", graphs["k333"], "--mode", "exact", "--eps", "0.1")
        rep = json.loads(out)
        assert code == 0 and rep["achieved"] == 9 and rep["valid"]

    def test_mis_k55(self, graphs, capsys):
        code, out = run(capsys, "mis", graphs["k55"], "--mode", "exact", "--eps", "0.2")
        assert code == 0 and len(json.loads(out)["independent_set"]) == 5

    def test_k4_infeasible(self, graphs, capsys):
        code, out = run(capsys, "color", graphs["k4"])
        err = json.loads(out)
        assert code == 1 and err["error"] == "InfeasibleError"

    def test_mis_k3_sdp_infeasible(self, graphs, capsys):
        code, out = run(capsys, "mis", graphs["k3"], "--mode", "sdp")
        err = json.loads(out)
        assert code == 1 and err["error"] == "RelaxationInfeasibleError" and "report" in err

    def test_target_missed(self, graphs, capsys):
        code, out = run(capsys, "color", graphs["rr18"], "--mode", "exact", "--eps", "0.01",
                        "--rounds", "2", "--samples", "1")
        rep = json.loads(out)
        assert code == 2 and rep["valid"] and not rep["guarantee_met"]
        assert "per_edge_M_stats" in rep["diagnostics"]

    @pytest.mark.parametrize("argv", [
        ["color", "{k3}", "--bogus"],
        ["color", "{k3}", "--eps", "1.5"],
        ["color", "{k3}", "--mode", "magic"],
        ["mis", "{k3}", "--delta", "0.5"],
        ["color", "{k3}", "--samples", "0"],
        ["frobnicate"],
    ])
    def test_usage_errors(self, graphs, capsys, argv):
        code, out = run(capsys, *[a.format(**graphs) for a in argv])
        err = json.loads(out)
        assert code == 1 and set(err) >= {"error", "message"}

    @pytest.mark.parametrize("fmt", ["json", "csv", "text"])
    def test_deterministic(self, graphs, capsys, fmt):
        argv = ["color", graphs["k333"], "--mode", "sdp", "--eps", "0.2", "--format", fmt]
        assert run(capsys, *argv)[1] == run(capsys, *argv)[1]

    def test_csv(self, graphs, capsys):
        out = run(capsys, "mis", graphs["c4"], "--format", "csv")[1]
        row = next(csv.DictReader(io.StringIO(out)))
        assert row["achieved"] == "2" and row["valid"] == "True"

    def test_reverify_from_disk(self, graphs, tmp_path, capsys):
        for name in ("k333", "rr18"):
            out = tmp_path / f"{name}.json"
            run(capsys, "color", graphs[name], "--mode", "exact", "--rounds", "3", "--out", str(out))
            rep = json.loads(out.read_text())
            verdict = verify_partial_coloring(load_graph(graphs[name]), rep["coloring"])
            assert verdict.valid and verdict.colored_count == rep["achieved"]
        out = tmp_path / "mis.json"
        run(capsys, "mis", graphs["k55"], "--out", str(out))
        rep = json.loads(out.read_text())
        assert is_independent_set(load_graph(graphs["k55"]), rep["independent_set"])


class TestLemmaCheck:
    def test_four_color(self, capsys):
        code, out = run(capsys, "lemma-check", "four-color")
        res = json.loads(out)
        assert code == 0 and res["details"]["correlation"] == 0.0

    def test_pinsker(self, capsys):
        code, out = run(capsys, "lemma-check", "pinsker", "--trials", "10000")
        assert code == 0 and json.loads(out)["failures"] == 0

    def test_corr_lb_reports_violation(self, capsys):
        code, out = run(capsys, "lemma-check", "corr-lb", "--trials", "20000")
        res = json.loads(out)
        assert code == 1 and res["violation"] is not None
        assert res["details"]["proven_bound_failures"] == 0


class TestBench:
    def test_multipartite_sweep(self, capsys):
        code, out = run(capsys, "bench", "--sweep", '{"m": [2, 3, 4, 5], "mode": "exact"}', "--no-timing")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and len(rows) == 4
        assert all(r["coverage_fraction"] == "1.000000" and r["valid"] == "True" for r in rows)
        assert list(rows[0]) == ["family", "n", "r", "eps", "delta", "mode", "coverage_fraction", "valid",
                                 "wall_ms", "seed"]

    def test_union_eps_sweep_parallel(self, capsys, tmp_path):
        spec = tmp_path / "sweep.json"
        spec.write_text(json.dumps({"family": "union", "m": 2, "eps": [0.1, 0.2, 0.4], "mode": "sdp"}))
        code, out = run(capsys, "bench", "--sweep", str(spec), "--jobs", "2", "--no-timing")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and [r["eps"] for r in rows] == ["0.1", "0.2", "0.4"]
        assert all(r["valid"] == "True" for r in rows)

    def test_empty(self, capsys):
        code, out = run(capsys, "bench", "--sweep", "[]")
        assert code == 0 and out.strip().count("\n") == 0 and out.startswith("family,")

    def test_row_errors_are_recorded(self, capsys):
        code, out = run(capsys, "bench", "--sweep", '{"parts": 4, "m": 1, "mode": "exact"}')
        row = next(csv.DictReader(io.StringIO(out)))
        assert code == 0 and row["valid"] == "error:InfeasibleError"

    def test_byte_identical(self, capsys):
        argv = ["bench", "--sweep", '{"m": [2, 3], "seed": [0, 1]}', "--no-timing"]
        assert run(capsys, *argv)[1] == run(capsys, *argv)[1]

    def test_unknown_key(self, capsys):
        assert run(capsys, "bench", "--sweep", '{"colour": 3}')[0] == 1

    def test_expand_order(self):
        rows = expand_sweep({"m": [2, 3], "eps": [0.1, 0.2]})
        assert [(r["m"], r["eps"]) for r in rows] == [(2, 0.1), (2, 0.2), (3, 0.1), (3, 0.2)]


def test_console_script(graphs):
    proc = subprocess.run([sys.executable, "-m", "trcolor.cli", "analyze", graphs["k3"]],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["threshold_rank_eps"] == 1
