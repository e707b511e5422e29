from __future__ import annotations

import io
import json
import subprocess
import sys

import pytest

from dlgraph.cli import EXIT_BUDGET, EXIT_FALSE, EXIT_INPUT, EXIT_OK, EXIT_USAGE, main
from dlgraph.io import fixture_path, parse_witness, read_graph, read_taxonomy, serialize_graph
from dlgraph.subsumption import RelationSpec, check_witness

from support import G


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def structured(*argv):
    code, out, err = run(*argv, "--format", "structured")
    return code, json.loads(out) if out else None


@pytest.fixture
def graph_file(tmp_path):
    def write(g, name="g.json"):
        path = tmp_path / name
        path.write_text(serialize_graph(g))
        return str(path)

    return write


@pytest.fixture
def manifests(tmp_path, graph_file):
    def make(name, items):
        entries = []
        for i, (g, label) in enumerate(items):
            entries.append({"graph": graph_file(g, f"{name}_{i}.json").rsplit("/", 1)[1], "label": label})
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(entries))
        return str(path)

    return make


class TestSubsumes:
    def test_fig1_with_taxonomy(self):
        code, out, _ = run("subsumes", "fig1-g1", "fig1-g2", "--relation", "po", "--taxonomy", "fig1-tax", "--emit-witness")
        assert code == EXIT_OK
        assert "v1->w2" in out and "v2->w3" in out and "v3->w4" in out

    def test_fig1_plain_fails(self):
        assert run("subsumes", "fig1-g1", "fig1-g2")[0] == EXIT_FALSE

    def test_fig3_with_oi(self):
        assert run("subsumes", "fig3-g1", "fig3-g2", "--relation", "plain", "--oi")[0] == EXIT_FALSE
        assert run("subsumes", "fig3-g1", "fig3-g2", "--relation", "plain")[0] == EXIT_OK

    @pytest.mark.parametrize("relation", ["plain", "trans"])
    def test_emitted_witness_rechecks(self, relation):
        pair = ("fig2_g1", "fig2_g2") if relation == "trans" else ("fig4_g1", "fig4_g2")
        code, doc = structured("subsumes", *pair, "--relation", relation, "--emit-witness")
        assert code == EXIT_OK and doc["holds"]
        w = parse_witness(json.dumps(doc["witness"]))
        g1, g2 = (read_graph(fixture_path(n)) for n in pair)
        check_witness(g1, g2, RelationSpec(relation), w)

    def test_all_witnesses(self):
        code, doc = structured("subsumes", "fig3-g1", "fig3-g2", "--all")
        assert code == EXIT_OK
        maps = [w["vertex_map"] for w in doc["witnesses"]]
        assert any(m["v2"] == m["v3"] == "w4" for m in maps)
        code, doc = structured("subsumes", "fig3-g1", "fig3-g2", "--all", "--limit", "1")
        assert len(doc["witnesses"]) == 1

    def test_ordered_witness_rechecks(self):
        code, doc = structured("subsumes", "fig1-g1", "fig1-g2", "--relation", "po", "--taxonomy", "fig1_taxonomy", "--emit-witness")
        tax = read_taxonomy(fixture_path("fig1_taxonomy"))
        g1, g2 = (read_graph(fixture_path(n)) for n in ("fig1_g1", "fig1_g2"))
        check_witness(g1, g2, RelationSpec("po", False, tax), parse_witness(json.dumps(doc["witness"])))

    def test_files(self, graph_file):
        a = graph_file(G("v1:a"), "a.json")
        b = graph_file(G("v1:a v2:b | v1-r->v2"), "b.json")
        assert run("subsumes", a, b)[0] == EXIT_OK
        assert run("subsumes", b, a)[0] == EXIT_FALSE


class TestCommands:
    def test_refine_counts(self, graph_file):
        g = graph_file(G("v1:a"))
        code, doc = structured("refine", g, "--alphabet", "a")
        assert code == EXIT_OK and doc["operator"] == "rho_f"
        assert len(doc["refinements"]) == 3
        code, doc = structured("refine", g, "--direction", "up")
        assert doc["operator"] == "gamma_f" and len(doc["refinements"]) == 1

    def test_antiunify(self, graph_file):
        a = graph_file(G("v1:a v2:b | v1-r->v2"), "a.json")
        b = graph_file(G("v1:a v2:c | v1-r->v2"), "b.json")
        code, doc = structured("antiunify", a, b)
        assert code == EXIT_OK and doc["graph"]["vertices"] == [{"id": "0", "label": "a"}]

    def test_unify(self, graph_file):
        a = graph_file(G("v1:a v2:b | v1-r->v2"), "a.json")
        code, doc = structured("unify", a, a)
        assert len(doc["unifiers"]) == 1
        code, doc = structured("unify", a, "fig4-g1", "--limit", "2")
        assert code == EXIT_OK and 1 <= len(doc["unifiers"]) <= 2

    def test_remainder_and_disintegrate(self, graph_file):
        a = graph_file(G("v1:a"), "a.json")
        b = graph_file(G("v1:a v2:b | v1-r->v2"), "b.json")
        assert run("remainder", a, b)[0] == EXIT_OK
        assert run("remainder", b, a)[0] == EXIT_INPUT
        code, doc = structured("disintegrate", b, "--seed", "3")
        assert code == EXIT_OK and len(doc["properties"]) == len(doc["path"]) == 2

    def test_sim(self, graph_file):
        g = graph_file(G("v1:a v2:b | v1-r->v2"))
        for measure in ("au", "props", "wprops"):
            code, out, _ = run("sim", g, g, "--measure", measure)
            assert code == EXIT_OK and out.strip() == "1.0"

    def test_sim_with_weight_file(self, graph_file, tmp_path):
        a = graph_file(G("v1:a v2:b | v1-r->v2"), "a.json")
        b = graph_file(G("v1:a v2:c | v1-r->v2"), "b.json")
        w = tmp_path / "w.tsv"
        w.write_text("")
        _, base = structured("sim", a, b, "--measure", "props")
        _, doc = structured("sim", a, b, "--measure", "wprops", "--weights", str(w))
        assert doc["value"] == base["value"]

    def test_pathlen(self, graph_file):
        a = graph_file(G("v1:a"), "a.json")
        b = graph_file(G("v1:a v2:b v3:b | v1-r->v2 v2-r->v3"), "b.json")
        assert run("pathlen", b)[1].strip() == "3"
        assert run("pathlen", a, b)[1].strip() == "2"
        code, doc = structured("pathlen", "fig1-g1", "--relation", "po", "--taxonomy", "fig1-tax")
        assert doc == {"operator": "rho_po", "length": 3 + 3 + 2}

    def test_weights_and_knn(self, manifests):
        items = [(G("v1:a v2:b | v1-r->v2"), "x"), (G("v1:a v2:c | v1-r->v2"), "y"), (G("v1:a"), "y")]
        train = manifests("train", items)
        code, out, _ = run("weights", "--train", train)
        assert code == EXIT_OK and all("\t" in line for line in out.splitlines())
        code, doc = structured("weights", "--train", train, "--mode", "gain")
        assert all(v >= 0 for v in doc["weights"].values())
        code, doc = structured("knn", "--train", train, "--test", train, "-k", "1", "--measure", "props")
        assert code == EXIT_OK and doc["accuracy"] == 1.0


class TestErrors:
    def test_missing_file(self):
        code, _, err = run("subsumes", "nope.json", "fig1-g1")
        assert code == EXIT_INPUT and "nope.json" in err

    def test_missing_argument(self):
        assert run("subsumes", "fig1-g1")[0] == EXIT_USAGE

    def test_unknown_command(self):
        assert run("frobnicate")[0] == EXIT_USAGE

    def test_taxonomy_needed(self):
        assert run("subsumes", "fig1-g1", "fig1-g2", "--relation", "po")[0] == EXIT_USAGE

    def test_taxonomy_rejected_for_flat(self):
        assert run("subsumes", "fig1-g1", "fig1-g2", "--taxonomy", "fig1-tax")[0] == EXIT_USAGE

    def test_bad_k(self, manifests):
        train = manifests("t", [(G("v1:a"), "x")])
        assert run("knn", "--train", train, "--test", train, "-k", "0")[0] == EXIT_USAGE

    def test_bad_document(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        code, _, err = run("subsumes", str(p), str(p))
        assert code == EXIT_INPUT and "line 1" in err

    def test_disconnected_input(self, graph_file):
        g = graph_file(G("v1:a v2:b"))
        assert run("subsumes", g, g)[0] == EXIT_INPUT

    def test_budget_exhausted(self):
        code, doc = structured("subsumes", "fig4-g1", "fig4-g2", "--budget", "1")
        assert code == EXIT_BUDGET and doc["budget_exhausted"] is True and doc["steps"] == 1

    def test_negative_budget(self):
        assert run("subsumes", "fig4-g1", "fig4-g2", "--budget", "-1")[0] == EXIT_USAGE


class TestDeterminism:
    def test_repeated_runs_identical(self):
        argv = ("disintegrate", "fig4-g2", "--seed", "7", "--format", "structured")
        assert run(*argv)[1] == run(*argv)[1]

    def test_seed_changes_choices(self):
        outs = {run("disintegrate", "fig4-g2", "--seed", str(s), "--format", "structured")[1] for s in range(6)}
        assert len(outs) > 1

    def test_console_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "dlgraph.cli", "subsumes", "fig3-g1", "fig3-g2", "--oi"],
            capture_output=True, text=True,
        )
        assert proc.returncode == EXIT_FALSE
