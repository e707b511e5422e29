"""Reading and writing graphs, taxonomies, weight tables and datasets.

Graph document::

    {"vertices": [{"id": "v1", "label": "a"}, ...],
     "edges": [{"from": "v1", "to": "v2", "label": "r"}, ...]}

Taxonomy document::

    {"top": "any", "covers": [["any", "b"], ["b", "c"]]}

Witness document::

    {"vertex_map": {"v1": "w2", ...},
     "edge_paths": [{"edge": ["v1", "v2"], "path": [["w2", "w3"], ...]}, ...]}

`edge_paths` is present only for the chain relations.

Weight table: one ``canonical_key<TAB>weight`` line per property, sorted by
key. Dataset manifest: a JSON list of ``{"graph": path, "label": class}``
entries, paths relative to the manifest file.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .canonical import canonical_key, canonical_order
from .errors import DatasetError, DocumentError, GraphError, TaxonomyError
from .graph import Graph, LabelTaxonomy, make_graph
from .subsumption import Witness


def _normalize(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


def _load_json(text: str, what: str):
    try:
        return json.loads(_normalize(text))
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{what}: syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _expect(cond: bool, message: str) -> None:
    if not cond:
        raise DocumentError(message)


def graph_from_document(doc, taxonomy: LabelTaxonomy | None = None) -> Graph:
    _expect(isinstance(doc, dict), "graph document must be an object")
    unknown = set(doc) - {"vertices", "edges"}
    _expect(not unknown, f"graph document has unknown keys: {sorted(unknown)}")
    vertices = doc.get("vertices", [])
    edges = doc.get("edges", [])
    _expect(isinstance(vertices, list) and isinstance(edges, list), "`vertices` and `edges` must be lists")
    vpairs = []
    for i, item in enumerate(vertices):
        _expect(isinstance(item, dict) and {"id", "label"} <= set(item), f"vertex #{i} needs `id` and `label`")
        _expect(
            isinstance(item["id"], str) and isinstance(item["label"], str),
            f"vertex #{i}: `id` and `label` must be strings",
        )
        vpairs.append((item["id"], item["label"]))
    triples = []
    for i, item in enumerate(edges):
        _expect(
            isinstance(item, dict) and {"from", "to", "label"} <= set(item),
            f"edge #{i} needs `from`, `to` and `label`",
        )
        _expect(
            all(isinstance(item[k], str) for k in ("from", "to", "label")),
            f"edge #{i}: `from`, `to` and `label` must be strings",
        )
        triples.append((item["from"], item["to"], item["label"]))
    return make_graph(vpairs, triples, taxonomy=taxonomy)


def parse_graph(text: str, taxonomy: LabelTaxonomy | None = None) -> Graph:
    """Parse a graph document; structural errors raise `GraphError`."""
    return graph_from_document(_load_json(text, "graph"), taxonomy)


def graph_to_document(g: Graph, canonical: bool = False) -> dict:
    if canonical:
        order = canonical_order(g)
        names = {v: str(i) for i, v in enumerate(order)}
    else:
        order = g.sorted_vertices()
        names = {v: v for v in order}
    rank = {v: i for i, v in enumerate(order)}
    edges = sorted(g.edge_labels.items(), key=lambda item: (rank[item[0][0]], rank[item[0][1]]))
    return {
        "vertices": [{"id": names[v], "label": g.vertex_labels[v]} for v in order],
        "edges": [{"from": names[u], "to": names[v], "label": lab} for (u, v), lab in edges],
    }


def serialize_graph(g: Graph, canonical: bool = False) -> str:
    """Graph document text.

    With ``canonical=True`` the output is the single-line canonical key: ids
    are replaced by their canonical positions, so isomorphic graphs give the
    same text. Otherwise an indented document keeping the original ids.
    """
    if canonical:
        return canonical_key(g)
    return json.dumps(graph_to_document(g), indent=2) + "\n"


def taxonomy_from_document(doc) -> LabelTaxonomy:
    _expect(isinstance(doc, dict), "taxonomy document must be an object")
    if "top" not in doc:
        raise TaxonomyError("taxonomy document is missing `top`")
    top = doc["top"]
    _expect(isinstance(top, str), "`top` must be a string")
    covers = doc.get("covers", [])
    _expect(isinstance(covers, list), "`covers` must be a list")
    pairs = []
    for i, pair in enumerate(covers):
        _expect(
            isinstance(pair, list) and len(pair) == 2 and all(isinstance(x, str) for x in pair),
            f"cover #{i} must be a [parent, child] pair of strings",
        )
        pairs.append((pair[0], pair[1]))
    return LabelTaxonomy(top, pairs)


def parse_taxonomy(text: str) -> LabelTaxonomy:
    """Parse a taxonomy document, rejecting cycles and labels not below top."""
    return taxonomy_from_document(_load_json(text, "taxonomy"))


def taxonomy_to_document(tax: LabelTaxonomy) -> dict:
    return {"top": tax.top, "covers": [list(p) for p in sorted(tax.covers)]}


def serialize_taxonomy(tax: LabelTaxonomy) -> str:
    return json.dumps(taxonomy_to_document(tax), indent=2) + "\n"


def serialize_weights(entries: dict[str, float]) -> str:
    """One ``key<TAB>weight`` line per entry, sorted by key."""
    lines = []
    for key in sorted(entries):
        if "\t" in key or "\n" in key:
            raise ValueError("weight keys may not contain tabs or newlines")
        lines.append(f"{key}\t{entries[key]!r}")
    return "".join(line + "\n" for line in lines)


def parse_weights(text: str) -> dict[str, float]:
    entries: dict[str, float] = {}
    for lineno, line in enumerate(_normalize(text).split("\n"), start=1):
        if not line.strip():
            continue
        key, sep, value = line.rpartition("\t")
        if not sep:
            raise DocumentError(f"weights: line {lineno}: expected `key<TAB>weight`")
        try:
            weight = float(value)
        except ValueError as exc:
            raise DocumentError(f"weights: line {lineno}: bad weight {value!r}") from exc
        if not math.isfinite(weight) or weight < 0:
            raise DocumentError(f"weights: line {lineno}: weight must be finite and nonnegative")
        if key in entries:
            raise DocumentError(f"weights: line {lineno}: duplicate key")
        entries[key] = weight
    return entries


def witness_to_document(w: Witness) -> dict:
    doc: dict = {"vertex_map": dict(sorted(w.vertex_map.items()))}
    if w.edge_path_map is not None:
        doc["edge_paths"] = [
            {"edge": list(e), "path": [list(step) for step in w.edge_path_map[e]]}
            for e in sorted(w.edge_path_map)
        ]
    return doc


def witness_from_document(doc) -> Witness:
    _expect(isinstance(doc, dict) and isinstance(doc.get("vertex_map"), dict), "witness needs a `vertex_map` object")
    vmap = {str(k): str(v) for k, v in doc["vertex_map"].items()}
    paths = None
    if "edge_paths" in doc:
        _expect(isinstance(doc["edge_paths"], list), "`edge_paths` must be a list")
        paths = {}
        for i, item in enumerate(doc["edge_paths"]):
            try:
                edge = tuple(item["edge"])
                path = tuple(tuple(step) for step in item["path"])
            except (KeyError, TypeError) as exc:
                raise DocumentError(f"edge path #{i} needs `edge` and `path`") from exc
            _expect(len(edge) == 2 and all(len(step) == 2 for step in path), f"edge path #{i} is malformed")
            paths[edge] = path
    return Witness(vmap, paths)


def parse_witness(text: str) -> Witness:
    return witness_from_document(_load_json(text, "witness"))


def read_graph(path: str | Path, taxonomy: LabelTaxonomy | None = None) -> Graph:
    return parse_graph(Path(path).read_text(encoding="utf-8"), taxonomy)


def read_taxonomy(path: str | Path) -> LabelTaxonomy:
    return parse_taxonomy(Path(path).read_text(encoding="utf-8"))


def load_dataset(manifest: str | Path, taxonomy: LabelTaxonomy | None = None):
    """Load a manifest into a `TrainingSet`; bad entries are reported together."""
    from .similarity import TrainingSet

    manifest = Path(manifest)
    try:
        doc = _load_json(manifest.read_text(encoding="utf-8"), f"manifest {manifest}")
    except OSError as exc:
        raise DatasetError(f"cannot read manifest {manifest}: {exc}") from exc
    if not isinstance(doc, list):
        raise DatasetError(f"manifest {manifest} must be a list of entries")
    examples = []
    problems = []
    for i, entry in enumerate(doc):
        if not isinstance(entry, dict) or not {"graph", "label"} <= set(entry):
            problems.append(f"entry #{i}: needs `graph` and `label`")
            continue
        where = manifest.parent / entry["graph"]
        try:
            g = read_graph(where, taxonomy)
        except OSError as exc:
            problems.append(f"entry #{i} ({entry['graph']}): cannot read file: {exc.strerror}")
            continue
        except (DocumentError, GraphError, TaxonomyError) as exc:
            problems.append(f"entry #{i} ({entry['graph']}): {exc}")
            continue
        if not g.connected:
            problems.append(f"entry #{i} ({entry['graph']}): graph is not connected")
            continue
        examples.append((g, str(entry["label"])))
    if problems:
        raise DatasetError("bad dataset entries:\n  " + "\n  ".join(problems))
    return TrainingSet(examples)


def to_dot(g: Graph) -> str:
    """Graphviz text for quick visual inspection."""
    lines = ["digraph G {"]
    for v in g.sorted_vertices():
        lines.append(f"  {json.dumps(v)} [label={json.dumps(g.vertex_labels[v])}];")
    for (u, v) in g.sorted_edges():
        lines.append(f"  {json.dumps(u)} -> {json.dumps(v)} [label={json.dumps(g.edge_labels[(u, v)])}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def fixture_path(name: str) -> Path:
    """Path of a bundled example document, e.g. ``fixture_path("fig1_g1")``."""
    base = Path(__file__).resolve().parent / "fixtures"
    path = base / (name if name.endswith(".json") else name + ".json")
    if not path.exists():
        raise FileNotFoundError(f"no bundled fixture named {name!r}")
    return path
