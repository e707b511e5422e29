"""Command-line interface.

Graph arguments are paths to graph documents or names of bundled fixtures
(``fig1_g1`` or ``fig1-g1``). Every command accepts the shared options
below; ``--format structured`` prints a sorted JSON document.

Exit codes: 0 success (for ``subsumes``: the relation holds), 1 ``subsumes``
does not hold, 2 usage error, 3 input error, 4 step budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import BudgetExceeded, DLGraphError
from .graph import Graph, LabelTaxonomy
from .io import (
    fixture_path,
    graph_to_document,
    load_dataset,
    parse_weights,
    read_graph,
    read_taxonomy,
    serialize_weights,
    witness_to_document,
)
from .lattice import antiunify, path_length_between, path_length_from_top, unify
from .refinement import OperatorSpec, refine
from .similarity import (
    WeightTable,
    disintegrate,
    knn_evaluate,
    property_weights,
    remainder,
    sim_au,
    sim_props,
    sim_wprops,
)
from .subsumption import RELATIONS, RelationSpec, enumerate_witnesses, subsumes

EXIT_OK, EXIT_FALSE, EXIT_USAGE, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CliConfig:
    relation: str = "plain"
    object_identity: bool = False
    taxonomy: LabelTaxonomy | None = None
    alphabet: tuple[str, ...] | None = None
    seed: int = 0
    budget: int | None = None
    fmt: str = "text"

    def __post_init__(self):
        ordered = self.relation in ("po", "trans_po")
        if ordered and self.taxonomy is None:
            raise UsageError(f"--relation {self.relation} needs --taxonomy")
        if not ordered and self.taxonomy is not None:
            raise UsageError("--taxonomy only applies to the po and trans_po relations")
        if ordered and self.alphabet is not None:
            raise UsageError("--alphabet only applies to flat relations")
        if self.budget is not None and self.budget < 0:
            raise UsageError("--budget must be nonnegative")

    def spec(self, object_identity: bool | None = None) -> RelationSpec:
        oi = self.object_identity if object_identity is None else object_identity
        return RelationSpec(self.relation, oi, self.taxonomy)

    def operator(self, direction: str, graphs=()) -> OperatorSpec:
        spec = self.spec()
        if spec.ordered:
            return OperatorSpec.for_relation(spec, direction)
        alphabet = self.alphabet
        if alphabet is None:
            labels = set()
            for g in graphs:
                labels |= g.label_set
            alphabet = tuple(sorted(labels)) or ("_",)
        return OperatorSpec.for_relation(spec, direction, alphabet=alphabet)


def _graph_arg(value: str, config: CliConfig) -> Graph:
    path = Path(value)
    if not path.exists():
        try:
            path = fixture_path(value.replace("-", "_"))
        except FileNotFoundError:
            raise FileNotFoundError(f"no graph file or bundled fixture named {value!r}") from None
    return read_graph(path, config.taxonomy)


def _taxonomy_arg(value: str) -> LabelTaxonomy:
    path = Path(value)
    if not path.exists():
        name = value.replace("-", "_")
        try:
            path = fixture_path(name)
        except FileNotFoundError:
            # short fixture names: fig1-tax for fig1_taxonomy
            if not name.endswith("_tax"):
                raise
            path = fixture_path(name + "onomy")
    return read_taxonomy(path)


def _graph_doc(g: Graph) -> dict:
    return graph_to_document(g, canonical=False)


def _jsonable(value):
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return value


# -- commands ----------------------------------------------------------------
# Each returns (exit code, structured document, text lines).


def cmd_subsumes(args, config: CliConfig):
    g1, g2 = _graph_arg(args.g1, config), _graph_arg(args.g2, config)
    spec = config.spec()
    if args.all:
        ws = enumerate_witnesses(g1, g2, spec, limit=args.limit, budget=config.budget)
    else:
        w = subsumes(g1, g2, spec, budget=config.budget)
        ws = [] if w is None else [w]
    holds = bool(ws)
    doc = {"holds": holds, "relation": spec.relation, "object_identity": spec.object_identity}
    lines = [f"{'holds' if holds else 'does not hold'} ({spec.relation}{', OI' if spec.object_identity else ''})"]
    if holds and (args.emit_witness or args.all):
        docs = [witness_to_document(w) for w in ws]
        if args.all:
            doc["witnesses"] = docs
        else:
            doc["witness"] = docs[0]
        for wd in docs:
            lines.append("  " + ", ".join(f"{k}->{v}" for k, v in wd["vertex_map"].items()))
            for item in wd.get("edge_paths", []):
                chain = " ".join(f"{a}->{b}" for a, b in item["path"])
                lines.append(f"    ({item['edge'][0]},{item['edge'][1]}) => {chain}")
    return (EXIT_OK if holds else EXIT_FALSE), doc, lines


def cmd_refine(args, config: CliConfig):
    g = _graph_arg(args.g, config)
    op = config.operator(args.direction, [g])
    apps = refine(g, op)
    items = []
    lines = [f"{len(apps)} refinements by {op.name}"]
    for app in apps:
        items.append({"rule": app.rule, "bindings": _jsonable(dict(sorted(app.bindings.items()))), "graph": _graph_doc(app.result)})
        lines.append(f"  {app.rule}: {app.result!r}")
    return EXIT_OK, {"operator": op.name, "refinements": items}, lines


def cmd_antiunify(args, config: CliConfig):
    g1, g2 = _graph_arg(args.g1, config), _graph_arg(args.g2, config)
    spec = config.spec(object_identity=True)
    op = config.operator("down", [g1, g2])
    res = antiunify(g1, g2, spec, op=op, budget=config.budget)
    doc = {
        "graph": _graph_doc(res.graph),
        "witness_left": witness_to_document(res.witness_left),
        "witness_right": witness_to_document(res.witness_right),
    }
    return EXIT_OK, doc, [repr(res.graph)]


def cmd_unify(args, config: CliConfig):
    g1, g2 = _graph_arg(args.g1, config), _graph_arg(args.g2, config)
    spec = config.spec(object_identity=True)
    op = config.operator("up", [g1, g2])
    results = unify(g1, g2, spec, limit=args.limit, op=op, budget=config.budget)
    doc = {"unifiers": [_graph_doc(r.graph) for r in results]}
    return EXIT_OK, doc, [f"{len(results)} unifiers"] + [f"  {r.graph!r}" for r in results]


def cmd_remainder(args, config: CliConfig):
    gu, gd = _graph_arg(args.gu, config), _graph_arg(args.gd, config)
    op = config.operator("up", [gu, gd])
    r = remainder(gu, gd, op, seed=config.seed, spec=config.spec(object_identity=True))
    return EXIT_OK, {"graph": _graph_doc(r)}, [repr(r)]


def cmd_disintegrate(args, config: CliConfig):
    g = _graph_arg(args.g, config)
    op = config.operator("up", [g])
    ps = disintegrate(g, op, seed=config.seed, spec=config.spec(object_identity=True))
    doc = {
        "properties": [p.canonical_key for p in ps.properties],
        "path": [app.rule for app in ps.path.steps],
    }
    lines = [f"{len(ps)} properties"]
    lines += [f"  {app.rule}: {p.graph!r}" for app, p in zip(ps.path.steps, ps.properties)]
    return EXIT_OK, doc, lines


def _weights_arg(path: str | None, default: float) -> WeightTable | None:
    if path is None:
        return None
    return WeightTable(parse_weights(Path(path).read_text(encoding="utf-8")), default)


def cmd_sim(args, config: CliConfig):
    g1, g2 = _graph_arg(args.g1, config), _graph_arg(args.g2, config)
    spec = config.spec(object_identity=True)
    if args.measure == "au":
        value = sim_au(g1, g2, config.operator("down", [g1, g2]), spec)
    else:
        op = config.operator("up", [g1, g2])
        if args.measure == "props":
            value = sim_props(g1, g2, op, spec, config.seed)
        else:
            table = _weights_arg(args.weights, args.default_weight) or WeightTable.uniform(args.default_weight)
            value = sim_wprops(g1, g2, table, op, spec, config.seed)
    return EXIT_OK, {"measure": args.measure, "value": value}, [repr(value)]


def _dataset_operator(config: CliConfig, *sets):
    graphs = [g for ts in sets for g in ts.graphs]
    return config.operator("up", graphs)


def cmd_weights(args, config: CliConfig):
    train = load_dataset(args.train, config.taxonomy)
    op = _dataset_operator(config, train)
    table = property_weights(train, op, config.spec(object_identity=True), config.seed, mode=args.mode)
    text = serialize_weights(table.entries)
    return EXIT_OK, {"weights": dict(sorted(table.entries.items()))}, text.splitlines()


def cmd_knn(args, config: CliConfig):
    train = load_dataset(args.train, config.taxonomy)
    test = load_dataset(args.test, config.taxonomy)
    op = _dataset_operator(config, train, test)
    spec = config.spec(object_identity=True)
    weights = _weights_arg(args.weights, args.default_weight)
    if args.measure == "au":
        op = op.dual()
    report = knn_evaluate(train, test, args.k, args.measure, op, spec, config.seed, weights)
    lines = [f"accuracy {report.accuracy!r}"]
    lines += [f"  {c}: {a!r}" for c, a in sorted(report.per_class.items())]
    return EXIT_OK, report.as_dict(), lines


def cmd_pathlen(args, config: CliConfig):
    g = _graph_arg(args.g, config)
    graphs = [g]
    if args.g2 is not None:
        g2 = _graph_arg(args.g2, config)
        graphs.append(g2)
    op = config.operator("down", graphs)
    if args.g2 is None:
        n = path_length_from_top(g, op, budget=config.budget)
    else:
        n = path_length_between(g, g2, op, config.spec(object_identity=True), budget=config.budget)
    return EXIT_OK, {"operator": op.name, "length": n}, [str(n)]


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--relation", choices=RELATIONS, default="plain")
    common.add_argument("--oi", action="store_true", help="object identity (always on for lattice and similarity commands)")
    common.add_argument("--taxonomy", help="taxonomy document (path or bundled fixture name)")
    common.add_argument("--alphabet", help="comma-separated flat label alphabet (default: labels of the inputs)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, help="cap on search steps")
    common.add_argument("--format", choices=("text", "structured"), default="text")

    parser = argparse.ArgumentParser(prog="dlgraph", description="Directed labeled graph subsumption, refinement and similarity.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("subsumes", parents=[common], help="test whether g1 subsumes g2")
    p.add_argument("g1")
    p.add_argument("g2")
    p.add_argument("--emit-witness", action="store_true")
    p.add_argument("--all", action="store_true", help="list every witness")
    p.add_argument("--limit", type=int)
    p.set_defaults(run=cmd_subsumes)

    p = sub.add_parser("refine", parents=[common], help="one-step refinements of g")
    p.add_argument("g")
    p.add_argument("--direction", choices=("down", "up"), default="down")
    p.set_defaults(run=cmd_refine)

    for name, fn, help_ in (("antiunify", cmd_antiunify, "most specific common generalization"),
                            ("unify", cmd_unify, "most general common specializations")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("g1")
        p.add_argument("g2")
        if name == "unify":
            p.add_argument("--limit", type=int)
        p.set_defaults(run=fn)

    p = sub.add_parser("remainder", parents=[common], help="remainder of gd with respect to gu")
    p.add_argument("gu")
    p.add_argument("gd")
    p.set_defaults(run=cmd_remainder)

    p = sub.add_parser("disintegrate", parents=[common], help="split g into properties")
    p.add_argument("g")
    p.set_defaults(run=cmd_disintegrate)

    p = sub.add_parser("sim", parents=[common], help="similarity of two graphs")
    p.add_argument("g1")
    p.add_argument("g2")
    p.add_argument("--measure", choices=("au", "props", "wprops"), default="au")
    p.add_argument("--weights", help="weight table file (for wprops)")
    p.add_argument("--default-weight", type=float, default=1.0)
    p.set_defaults(run=cmd_sim)

    p = sub.add_parser("weights", parents=[common], help="property weights from a training manifest")
    p.add_argument("--train", required=True)
    p.add_argument("--mode", choices=("printed", "gain"), default="printed")
    p.set_defaults(run=cmd_weights)

    p = sub.add_parser("knn", parents=[common], help="k-nearest-neighbour evaluation")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("-k", type=int, default=3)
    p.add_argument("--measure", choices=("au", "props", "wprops"), default="wprops")
    p.add_argument("--weights", help="weight table file (default: computed from --train)")
    p.add_argument("--default-weight", type=float, default=1.0)
    p.set_defaults(run=cmd_knn)

    p = sub.add_parser("pathlen", parents=[common], help="refinement path length from the empty graph or between g and g2")
    p.add_argument("g")
    p.add_argument("g2", nargs="?")
    p.set_defaults(run=cmd_pathlen)
    return parser


def _emit(doc: dict, lines: list[str], fmt: str, out) -> None:
    if fmt == "structured":
        out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        for line in lines:
            out.write(line + "\n")


def main(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        if getattr(args, "k", 1) < 1:
            raise UsageError("-k must be at least 1")
        taxonomy = _taxonomy_arg(args.taxonomy) if args.taxonomy else None
        alphabet = tuple(sorted({a for a in args.alphabet.split(",") if a})) if args.alphabet else None
        config = CliConfig(args.relation, args.oi, taxonomy, alphabet, args.seed, args.budget, args.format)
        code, doc, lines = args.run(args, config)
    except UsageError as exc:
        err.write(f"dlgraph: usage error: {exc}\n")
        return EXIT_USAGE
    except BudgetExceeded as exc:
        doc = {"budget_exhausted": True, "steps": exc.steps, "partial": _jsonable(exc.partial) if exc.partial is not None else None}
        _emit(doc, [f"budget of {exc.steps} steps exhausted (partial result)"], args.format, out)
        return EXIT_BUDGET
    except (DLGraphError, ValueError, OSError) as exc:
        err.write(f"dlgraph: error: {exc}\n")
        return EXIT_INPUT
    _emit(doc, lines, args.format, out)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
