import io
import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import CHAIN_TEXT, COLLIDER_TEXT, TOY_EVIDENCE_TEXT, TOY_TEXT
from lazyar import derivatives, propagation, varprop
from lazyar.cli import format_table_row, main
from lazyar.jointree import compile_network
from lazyar.model import parse_evidence, parse_network


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    lines = [line.split("\t", 1) for line in out.getvalue().splitlines() if not line.startswith("#")]
    return code, {k: json.loads(v) if not k == "row" else v for k, v in lines}


@pytest.fixture
def toy_files(write):
    return write("toy.json", TOY_TEXT), write("ev.json", TOY_EVIDENCE_TEXT)


class TestCompile:
    def test_toy(self, toy_files):
        code, out = run("compile", toy_files[0])
        assert code == 0
        assert [out[k] for k in ("variables", "cliques", "max_clique_size", "total_clique_size")] == [2, 1, 4, 4]
        assert out["clique 0"] == ["X", "Y"]

    def test_chain(self, write):
        code, out = run("compile", write("chain.json", CHAIN_TEXT))
        assert [out[k] for k in ("variables", "cliques", "max_clique_size", "total_clique_size")] == [3, 2, 4, 8]
        assert len([k for k in out if k.startswith("separator")]) == 1

    def test_row_layout(self):
        row = format_table_row(
            "Barley", {"variables": 48, "cliques": 36, "max_clique_size": 7257600, "total_clique_size": 17140796}
        )
        assert row == "Barley\t48\t36\t7,257,600\t17,140,796"

    def test_missing_file(self, tmp_path):
        code, _ = run("compile", str(tmp_path / "nope.json"))
        assert code == 2

    def test_bad_network(self, write):
        code, _ = run("compile", write("bad.json", '{"variables": ['))
        assert code == 2


class TestQuery:
    def test_prob_evidence(self, toy_files):
        code, out = run("query", *toy_files, "--prob-evidence")
        assert code == 0
        assert out["P(e)"] == pytest.approx(0.41, abs=1e-15)

    def test_marginal(self, toy_files):
        code, out = run("query", *toy_files, "--marginal", "X")
        np.testing.assert_allclose(out["P(X|e)"], [0.6585366, 0.3414634], atol=1e-7)

    def test_retract(self, toy_files):
        code, out = run("query", *toy_files, "--mode", "clarp", "--retract", "Y", "--prob-evidence", "--d-theta", "X")
        assert code == 0
        assert out["P(e')"] == pytest.approx(1.0, abs=1e-15)
        np.testing.assert_allclose(out["dP(e')/dtheta(X)[X]"], [1.0, 1.0], atol=1e-15)

    def test_retract_marginal(self, toy_files):
        code, out = run("query", *toy_files, "--mode", "clarp", "--retract", "Y", "--marginal", "X")
        np.testing.assert_allclose(out["P(X|e')"], [0.3, 0.7], atol=1e-15)

    def test_retract_requires_clarp(self, toy_files):
        code, _ = run("query", *toy_files, "--retract", "Y")
        assert code == 1

    def test_retract_unobserved(self, toy_files):
        code, _ = run("query", *toy_files, "--mode", "clarp", "--retract", "X")
        assert code == 2

    def test_usage_error(self, toy_files):
        with pytest.raises(SystemExit) as e:
            main(["query", toy_files[0], "--mode", "hugin"], out=io.StringIO())
        assert e.value.code == 1

    def test_unknown_variable(self, toy_files):
        code, _ = run("query", *toy_files, "--marginal", "Q")
        assert code == 2

    def test_zero_probability(self, write):
        doc = json.loads(TOY_TEXT)
        doc["cpds"][1]["table"] = [0.0, 1.0, 0.0, 1.0]
        net = write("zero.json", json.dumps(doc))
        code, _ = run("query", net, write("e.json", TOY_EVIDENCE_TEXT), "--marginal", "X")
        assert code == 3

    def test_outputs_equal_library_calls(self, write):
        """The CLI adds no arithmetic: each line equals the library value exactly."""
        net_path = write("chain.json", CHAIN_TEXT)
        ev_path = write("e.json", '{"Z": "z1"}')
        net = parse_network(CHAIN_TEXT)
        ev = parse_evidence('{"Z": "z1"}', net)
        tree = compile_network(net)
        propagation.propagate(tree, ev, "all-evidence")
        a, c = tree.separators[0].endpoints
        code, out = run(
            "query", net_path, ev_path, "--mode", "all-evidence", "--prob-evidence", "--marginal", "Y",
            "--joint", "X,Z", "--d-theta", "Y", "--d-f", "X", "--d-separator", f"{a}:{c}",
            "--d-multi", f"{tree.assignment[1]}:cpd:Y,f:X",
        )
        assert code == 0
        assert out["P(e)"] == propagation.prob_evidence(tree)
        assert out["P(Y|e)"] == propagation.marginal(tree, 1).tolist()
        assert out["P(X,Z,e)"] == varprop.joint_over(tree, [0, 2]).table.tolist()
        assert out["dP(e)/dtheta(Y)[X,Y]"] == derivatives.d_theta(tree, 1).values.tolist()
        assert out["dP(e)/df(X)"] == derivatives.d_f(tree, 0).values.tolist()
        key = next(k for k in out if k.startswith("dP(e)/dsep"))
        assert out[key] == derivatives.d_separator(tree, a, c).values.tolist()
        q = derivatives.DerivativeQuery(tree.assignment[1], [derivatives.cpd(1), derivatives.evidence(0)])
        key = next(k for k in out if k.startswith("dP(e)/d("))
        assert out[key] == derivatives.d_multi(tree, q).values.tolist()

    def test_grouped_retraction(self, write):
        code, out = run(
            "query", write("c.json", COLLIDER_TEXT), write("e.json", '{"A": "a1", "B": "b2"}'),
            "--mode", "clarp", "--retract", "A,B", "--prob-evidence",
        )
        assert code == 0 and out["P(e')"] == pytest.approx(1.0, abs=1e-15)

    def test_bad_d_multi(self, toy_files):
        code, _ = run("query", *toy_files, "--d-multi", "0")
        assert code == 1


class TestBench:
    def test_small(self):
        argv = ["bench", "--variables", "12", "--max-evidence", "3", "--sets", "3", "--seed", "4"]
        code, out = run(*argv)
        assert code == 0
        assert list(out) == ["n=0", "n=1", "n=2", "n=3"]
        row0 = out["n=0"]["largest"]
        # no evidence: the three schemes send the same messages
        assert row0["larp"] == row0["all-evidence"] == row0["clarp"]
        assert all(out[k]["clarp>=others"] for k in out)
        _, again = run(*argv)
        assert [again[k]["largest"] for k in again] == [out[k]["largest"] for k in out]


def test_module_entry_point(tmp_path):
    p = tmp_path / "toy.json"
    p.write_text(TOY_TEXT)
    r = subprocess.run([sys.executable, "-m", "lazyar", "compile", str(p)], capture_output=True, text=True)
    assert r.returncode == 0
    assert "max_clique_size\t4" in r.stdout
