"""Shared corpora and brute-force oracles for the test suite.

The oracles here deliberately avoid the package's search code: they
enumerate every vertex map (and every bounded chain assignment) directly.
"""

from __future__ import annotations

import functools
import itertools
import json
from pathlib import Path

from dlgraph.canonical import canonical_key
from dlgraph.graph import Graph, LabelTaxonomy, make_graph
from dlgraph.subsumption import RelationSpec

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "dlgraph" / "fixtures"

CHAIN_TAX = LabelTaxonomy("any", [("any", "b"), ("b", "c")])
FLAT_ALPHABET = ("b", "c")


def fixture(name: str) -> Graph:
    from dlgraph.io import read_graph

    return read_graph(FIXTURES / f"{name}.json")


def G(spec: str) -> Graph:
    """Build a graph from ``"v1:a v2:b | v1-r->v2"`` shorthand."""
    left, _, right = spec.partition("|")
    vertices = [tuple(tok.split(":")) for tok in left.split()]
    edges = []
    for tok in right.replace(",", " ").split():
        src, rest = tok.split("-", 1)
        label, dst = rest.split("->")
        edges.append((src, dst, label))
    return make_graph(vertices, edges)


def _union_find_connected(n: int, pairs) -> bool:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in pairs:
        parent[find(a)] = find(b)
    return len({find(i) for i in range(n)}) <= 1


def labeled_graphs(n: int, vlabels, elabels, loops: bool = True, max_edges: int | None = None):
    """Every connected graph on vertices x0..x{n-1} over the given labels."""
    slots = [(i, j) for i in range(n) for j in range(n) if loops or i != j]
    states = [None] + list(elabels)
    ids = [f"x{i}" for i in range(n)]
    for vls in itertools.product(vlabels, repeat=n):
        for choice in itertools.product(states, repeat=len(slots)):
            present = [(s, lab) for s, lab in zip(slots, choice) if lab is not None]
            if max_edges is not None and len(present) > max_edges:
                continue
            if not _union_find_connected(n, [s for s, _ in present]):
                continue
            yield make_graph(
                list(zip(ids, vls)),
                [(ids[i], ids[j], lab) for (i, j), lab in present],
            )


@functools.lru_cache(maxsize=None)
def iso_classes(n: int, vlabels: tuple, elabels: tuple, loops: bool = True, max_edges: int | None = None):
    """One representative per isomorphism class, sorted by canonical key."""
    seen = {}
    for g in labeled_graphs(n, vlabels, elabels, loops, max_edges):
        seen.setdefault(canonical_key(g), g)
    return tuple(seen[k] for k in sorted(seen))


def small_corpus(max_vertices: int, vlabels=FLAT_ALPHABET, elabels=FLAT_ALPHABET, loops=True, max_edges=None):
    out = []
    for n in range(1, max_vertices + 1):
        out.extend(iso_classes(n, tuple(vlabels), tuple(elabels), loops, max_edges))
    return out


def _walks(g2: Graph, src: str, dst: str, ok, max_len: int):
    """All walks of 1..max_len edges from src to dst whose labels pass `ok`."""
    vs = g2.sorted_vertices()
    for k in range(1, max_len + 1):
        for mid in itertools.product(vs, repeat=k - 1):
            seq = (src,) + mid + (dst,)
            steps = list(zip(seq, seq[1:]))
            if all(s in g2.edge_labels and ok(g2.edge_labels[s]) for s in steps):
                yield seq


def brute_force_subsumes(g1: Graph, g2: Graph, spec: RelationSpec) -> bool:
    """Decide subsumption by trying every vertex map and bounded chain choice."""
    if g1.n_vertices == 0:
        return True
    if g2.n_vertices == 0:
        return False
    if spec.taxonomy is None:
        compat = lambda a, b: a == b  # noqa: E731
    else:
        compat = spec.taxonomy.leq
    v1 = g1.sorted_vertices()
    for image in itertools.product(g2.sorted_vertices(), repeat=len(v1)):
        if spec.object_identity and len(set(image)) != len(image):
            continue
        m = dict(zip(v1, image))
        if not all(compat(g1.vertex_labels[v], g2.vertex_labels[m[v]]) for v in v1):
            continue
        if not spec.transitive:
            if all(
                (m[u], m[v]) in g2.edge_labels and compat(lab, g2.edge_labels[(m[u], m[v])])
                for (u, v), lab in g1.edge_labels.items()
            ):
                return True
            continue
        options = []
        for (u, v), lab in sorted(g1.edge_labels.items()):
            walks = list(_walks(g2, m[u], m[v], lambda l2, lab=lab: compat(lab, l2), g2.n_vertices))
            options.append(walks)
        if not all(options):
            continue
        if not spec.object_identity:
            return True
        images = set(image)
        for combo in itertools.product(*options):
            interiors = [seq[1:-1] for seq in combo]
            flat = [x for it in interiors for x in it]
            if len(flat) != len(set(flat)):
                continue
            if any(x in images for x in flat):
                continue
            return True
    return False


def all_relation_specs(taxonomy: LabelTaxonomy = CHAIN_TAX):
    for rel in ("plain", "po", "trans", "trans_po"):
        for oi in (False, True):
            tax = taxonomy if rel in ("po", "trans_po") else None
            yield RelationSpec(rel, oi, tax)


def load_json(path: Path):
    return json.loads(path.read_text())


def bfs_path_length(source: Graph, target: Graph, op, spec: RelationSpec) -> int | None:
    """Shortest refinement path length by breadth-first search.

    Every graph on a downward path from `source` to `target` subsumes
    `target` (upward: is subsumed by it), so other states are pruned.
    """
    from collections import deque

    from dlgraph.refinement import refined_graphs
    from dlgraph.subsumption import equivalent, subsumes

    def on_route(g):
        if op.downward:
            return subsumes(g, target, spec) is not None
        return subsumes(target, g, spec) is not None

    goal = canonical_key(target)
    seen = {canonical_key(source)}
    queue = deque([(source, 0)])
    while queue:
        g, d = queue.popleft()
        if canonical_key(g) == goal or equivalent(g, target, spec):
            return d
        for h in refined_graphs(g, op):
            k = canonical_key(h)
            if k in seen:
                continue
            seen.add(k)
            if on_route(h):
                queue.append((h, d + 1))
    return None


def bfs_distances_from_top(op, max_vertices: int, max_edges: int | None = None) -> dict[str, int]:
    """Refinement-graph distance from the empty graph to every graph up to a size.

    Downward rules never remove vertices or edges, so capping both keeps
    every shortest path to a small graph inside the explored region. Keys
    are canonical keys.
    """
    from collections import deque

    from dlgraph.graph import EMPTY_GRAPH
    from dlgraph.refinement import refine

    dist = {canonical_key(EMPTY_GRAPH): 0}
    queue = deque([EMPTY_GRAPH])
    while queue:
        g = queue.popleft()
        d = dist[canonical_key(g)] + 1
        for app in refine(g, op, max_vertices=max_vertices):
            if max_edges is not None and app.result.n_edges > max_edges:
                continue
            k = canonical_key(app.result)
            if k not in dist:
                dist[k] = d
                queue.append(app.result)
    return dist


def assert_valid_path(path, op, spec: RelationSpec) -> None:
    """Every step replays through `apply_rule` and moves in the operator's direction."""
    from dlgraph.refinement import apply_rule
    from dlgraph.subsumption import subsumes

    prev = path.start
    for step in path.steps:
        assert apply_rule(prev, step.rule, step.bindings, op) == step.result, step
        if op.downward:
            assert subsumes(prev, step.result, spec) is not None, step
        else:
            assert subsumes(step.result, prev, spec) is not None, step
        prev = step.result
