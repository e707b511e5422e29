"""Refinement paths, path lengths, anti-unification and unification.

Everything here works under object identity (OI): only then are the
operators proper, so that shortest refinement paths and most specific /
most general bounds are well behaved. Under OI, mutual subsumption coincides
with isomorphism for all four relations, which lets canonical keys stand in
for equivalence tests.
"""

from __future__ import annotations

import heapq
import itertools
from collections.abc import Iterable
from dataclasses import dataclass, field

from .canonical import canonical_key, canonical_relabel
from .errors import Budget, BudgetExceeded, PreconditionError
from .graph import EMPTY_GRAPH, Graph, LabelTaxonomy, bridges
from .refinement import OperatorSpec, RuleApplication, apply_rule, fresh_vertex, refine
from .subsumption import RelationSpec, Witness, cover_delta, subsumes


@dataclass(frozen=True)
class RefinementPath:
    """A chain of rule applications leading from `start` to `end`."""

    start: Graph
    steps: tuple[RuleApplication, ...] = ()

    @property
    def end(self) -> Graph:
        return self.steps[-1].result if self.steps else self.start

    @property
    def graphs(self) -> list[Graph]:
        return [self.start] + [s.result for s in self.steps]

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class LatticeResult:
    """A bound of two graphs with witnesses certifying both subsumptions."""

    graph: Graph
    witness_left: Witness = field(repr=False)
    witness_right: Witness = field(repr=False)


def _resolve(op: OperatorSpec, spec: RelationSpec | None, require_oi: bool = True) -> RelationSpec:
    if spec is None:
        return op.relation_spec(object_identity=True)
    if spec.relation != op.relation or spec.taxonomy != op.taxonomy:
        raise ValueError(f"relation {spec.relation!r} does not match operator {op.name}")
    if require_oi and not spec.object_identity:
        raise PreconditionError("lattice operations are defined under object identity only")
    return spec


def _down(op: OperatorSpec) -> OperatorSpec:
    return op if op.downward else op.dual()


def _up(op: OperatorSpec) -> OperatorSpec:
    return op.dual() if op.downward else op


def _depth(tax: LabelTaxonomy | None, label: str) -> int:
    return 0 if tax is None else tax.depth(label)


# -- path lengths --------------------------------------------------------------


def closed_form_length(g: Graph, op: OperatorSpec) -> int:
    """Edges plus one, plus every label's distance below top for ordered labels.

    Exact for every downward operator except the ordered one with edge
    splitting, whose split copies an already refined edge label in one step.
    """
    if g.is_empty:
        return 0
    tax = op.taxonomy
    labels = sum(_depth(tax, lab) for lab in g.vertex_labels.values())
    labels += sum(_depth(tax, lab) for lab in g.edge_labels.values())
    return g.n_edges + 1 + labels


_SEARCH_CACHE: dict[tuple, int] = {}


def path_length_from_top(g: Graph, op: OperatorSpec, budget: Budget | int | None = None) -> int:
    """Length of a shortest downward refinement path from the empty graph to `g`."""
    if not op.downward:
        raise PreconditionError("path lengths are measured with a downward operator")
    if not g.connected:
        raise PreconditionError("graph must be connected or empty")
    if op.name != "rho_tpo":
        return closed_form_length(g, op)
    return search_path_length(EMPTY_GRAPH, g, op, budget=budget)


def _min_label_cost(g_u: Graph, g_d: Graph, spec: RelationSpec, budget: Budget) -> int:
    """Cheapest total label refinement over all OI witnesses."""
    from .subsumption import iter_witnesses

    tax = spec.taxonomy
    best = None
    for w in iter_witnesses(g_u, g_d, spec, budget, exhaustive=True):
        cost = 0
        mapped_v = set(w.vertex_map.values())
        for v, x in w.vertex_map.items():
            cost += tax.distance(g_u.vertex_labels[v], g_d.vertex_labels[x])
        mapped_e = set()
        for e, lab in g_u.edge_labels.items():
            image = (w.vertex_map[e[0]], w.vertex_map[e[1]])
            mapped_e.add(image)
            cost += tax.distance(lab, g_d.edge_labels[image])
        cost += sum(tax.depth(lab) for x, lab in g_d.vertex_labels.items() if x not in mapped_v)
        cost += sum(tax.depth(lab) for e, lab in g_d.edge_labels.items() if e not in mapped_e)
        if best is None or cost < best:
            best = cost
    return best


def path_length_between(
    g_u: Graph, g_d: Graph, op: OperatorSpec, spec: RelationSpec | None = None,
    budget: Budget | int | None = None,
) -> int:
    """Length of a shortest downward refinement path from `g_u` to `g_d`."""
    op = _down(op)
    spec = _resolve(op, spec)
    budget = Budget.coerce(budget)
    if subsumes(g_u, g_d, spec, budget) is None:
        raise PreconditionError("g_u does not subsume g_d")
    if op.name == "rho_tpo":
        return search_path_length(g_u, g_d, op, spec, budget)
    base = g_d.n_edges - g_u.n_edges + (1 if g_u.is_empty and not g_d.is_empty else 0)
    if not op.ordered_labels:
        return base
    return base + _min_label_cost(g_u, g_d, spec, budget)


def _heuristic(s: Graph, g_d: Graph, tax: LabelTaxonomy | None, target: tuple) -> int:
    """Admissible lower bound on remaining steps (edge, vertex-label, edge-label moves)."""
    n_edges_d, vdepth_d, edepth_max = target
    h = n_edges_d - s.n_edges
    if s.is_empty and not g_d.is_empty:
        h += 1
    if tax is not None:
        vdepth = sum(tax.depth(lab) for lab in s.vertex_labels.values())
        h += max(0, vdepth_d - vdepth)
        emax = max((tax.depth(lab) for lab in s.edge_labels.values()), default=0)
        h += max(0, edepth_max - emax)
    return h


def search_path_length(
    g_u: Graph, g_d: Graph, op: OperatorSpec, spec: RelationSpec | None = None,
    budget: Budget | int | None = None,
) -> int:
    """Exact shortest path length by A* over the refinement graph.

    States are restricted to graphs that still subsume `g_d` and are no larger
    than it, which every state on a downward path to `g_d` must satisfy.
    """
    op = _down(op)
    spec = _resolve(op, spec)
    budget = Budget.coerce(budget)
    goal = canonical_key(g_d)
    cache_key = (op, spec, canonical_key(g_u), goal)
    if cache_key in _SEARCH_CACHE:
        return _SEARCH_CACHE[cache_key]
    tax = op.taxonomy
    target = (
        g_d.n_edges,
        sum(_depth(tax, lab) for lab in g_d.vertex_labels.values()),
        max((_depth(tax, lab) for lab in g_d.edge_labels.values()), default=0),
    )
    start_key = canonical_key(g_u)
    best = {start_key: 0}
    heap = [(_heuristic(g_u, g_d, tax, target), 0, start_key, g_u)]
    while heap:
        f, cost, key, s = heapq.heappop(heap)
        if key == goal:
            _SEARCH_CACHE[cache_key] = cost
            return cost
        if cost > best.get(key, cost):
            continue
        for app in refine(s, op, max_vertices=g_d.n_vertices):
            budget.tick()
            r = app.result
            if r.n_edges > g_d.n_edges:
                continue
            rkey = canonical_key(r)
            if best.get(rkey, cost + 2) <= cost + 1:
                continue
            if subsumes(r, g_d, spec, budget) is None:
                continue
            best[rkey] = cost + 1
            heapq.heappush(heap, (cost + 1 + _heuristic(r, g_d, tax, target), cost + 1, rkey, r))
    raise PreconditionError("no refinement path exists between the graphs")


# -- constructive paths --------------------------------------------------------


def completeness_step_bound(g_u: Graph, g_d: Graph, op: OperatorSpec) -> int:
    """Step allowance for `refinement_path_between` on an OI instance.

    Every step adds a vertex or an edge of the target, or moves one label one
    cover edge closer to its goal, and nothing is ever undone.
    """
    big, small = (g_d, g_u) if op.downward else (g_u, g_d)
    size = big.n_vertices + big.n_edges
    height = 0
    if op.taxonomy is not None:
        height = max(op.taxonomy.depth(a) for a in op.taxonomy.labels)
    return size * (1 + height) + small.n_vertices + small.n_edges


def _step_toward(tax: LabelTaxonomy, current: str, goal: str) -> str:
    """Child of `current` on a shortest cover chain down to `goal`."""
    options = [c for c in tax.children(current) if tax.leq(c, goal)]
    return min(options, key=lambda c: (tax.distance(c, goal), c))


def _step_up_toward(tax: LabelTaxonomy, current: str, goals: Iterable[str]) -> str | None:
    """Parent of `current` that is still below every label in `goals`, closest to them."""
    goals = list(goals)
    options = [p for p in tax.parents(current) if all(tax.leq(x, p) for x in goals)]
    if not options:
        return None
    return min(options, key=lambda p: (sum(tax.distance(x, p) for x in goals), p))


class _PathBuilder:
    def __init__(self, start: Graph, op: OperatorSpec, limit: int | None):
        self.g = start
        self.op = op
        self.steps: list[RuleApplication] = []
        self.limit = limit

    def apply(self, rule: str, bindings: dict) -> None:
        result = apply_rule(self.g, rule, bindings, self.op)
        self.steps.append(RuleApplication(rule, dict(bindings), result))
        self.g = result
        if self.limit is not None and len(self.steps) > self.limit:
            raise BudgetExceeded(self.limit, partial=self.steps)


def _downward_path(source: Graph, target: Graph, op: OperatorSpec, spec: RelationSpec, w: Witness, limit):
    tax = op.taxonomy
    ordered = op.ordered_labels
    top = tax.top if ordered else None
    b = _PathBuilder(source, op, limit)
    m = dict(w.vertex_map)
    paths = {e: tuple(p) for e, p in w.edge_path_map.items()} if w.edge_path_map is not None else None
    dv, de = target.vertex_labels, target.edge_labels

    def image(e):
        return paths[e] if paths is not None else ((m[e[0]], m[e[1]]),)

    while True:
        g = b.g
        if g.is_empty:
            x = target.sorted_vertices()[0]
            vs = fresh_vertex(g)
            if ordered:
                b.apply("R0PO", {"v*": vs})
            else:
                b.apply("R0", {"v*": vs, "a": dv[x]})
            m[vs] = x
            if paths is not None:
                paths = {}
            continue
        if paths is not None:
            long = [e for e in sorted(paths) if len(paths[e]) > 1]
            if long:
                e = long[0]
                chain = paths.pop(e)
                mid = chain[0][1]
                vs = fresh_vertex(g)
                if ordered:
                    b.apply("R6PO", {"v*": vs, "v1": e[0], "v2": e[1], "b": g.edge_labels[e]})
                else:
                    b.apply("R4", {"v*": vs, "v1": e[0], "v2": e[1], "a": dv[mid], "b": g.edge_labels[e]})
                m[vs] = mid
                paths[(e[0], vs)] = chain[:1]
                paths[(vs, e[1])] = chain[1:]
                continue
        if ordered:
            off = [v for v in g.sorted_vertices() if g.vertex_labels[v] != dv[m[v]]]
            if off:
                v = off[0]
                a = g.vertex_labels[v]
                b.apply("R4PO", {"v1": v, "a": a, "b": _step_toward(tax, a, dv[m[v]])})
                continue
        covered_v = set(m.values())
        covered_e = set()
        for e in g.edge_labels:
            for step in image(e):
                covered_e.add(step)
                covered_v.update(step)
        if len(covered_v) < target.n_vertices:
            inverse = {}
            for v in sorted(m):
                inverse.setdefault(m[v], v)
            grown = False
            for w2 in sorted(covered_v):
                outside = sorted(
                    [(x, True) for x in target.predecessors(w2) if x not in covered_v]
                    + [(x, False) for x in target.successors(w2) if x not in covered_v]
                )
                if not outside or w2 not in inverse:
                    continue
                v2, incoming = outside[0]
                v1 = inverse[w2]
                vs = fresh_vertex(g)
                if incoming:
                    # Target edge (v2, w2): the new vertex points at v1.
                    edge_label = de[(v2, w2)]
                    if ordered:
                        b.apply("R2PO", {"v*": vs, "v1": v1})
                    else:
                        b.apply("R1", {"v*": vs, "v1": v1, "a": dv[v2], "b": edge_label})
                    new_edge = (vs, v1)
                else:
                    edge_label = de[(w2, v2)]
                    if ordered:
                        b.apply("R1PO", {"v*": vs, "v1": v1})
                    else:
                        b.apply("R2", {"v*": vs, "v1": v1, "a": dv[v2], "b": edge_label})
                    new_edge = (v1, vs)
                m[vs] = v2
                if paths is not None:
                    paths[new_edge] = ((m[new_edge[0]], m[new_edge[1]]),)
                grown = True
                break
            if grown:
                continue
        if ordered:
            off_e = [e for e in g.sorted_edges() if g.edge_labels[e] != de[image(e)[0]]]
            if off_e:
                e = off_e[0]
                a = g.edge_labels[e]
                b.apply("R5PO", {"e": e, "a": a, "b": _step_toward(tax, a, de[image(e)[0]])})
                continue
        if len(covered_e) < target.n_edges:
            inverse = {}
            for v in sorted(m):
                inverse.setdefault(m[v], v)
            missing = sorted(e for e in target.edge_labels if e not in covered_e)
            w1, w2 = missing[0]
            v1, v2 = inverse[w1], inverse[w2]
            if ordered:
                b.apply("R3PO", {"v1": v1, "v2": v2})
            else:
                b.apply("R3", {"v1": v1, "v2": v2, "a": de[(w1, w2)]})
            if paths is not None:
                paths[(v1, v2)] = ((w1, w2),)
            continue
        return b.steps


def _upward_path(source: Graph, target: Graph, op: OperatorSpec, spec: RelationSpec, w: Witness, limit):
    """Generalize `source` until it matches `target`; `w` witnesses target over source."""
    tax = op.taxonomy
    ordered = op.ordered_labels
    top = tax.top if ordered else None
    b = _PathBuilder(source, op, limit)
    m = dict(w.vertex_map)
    paths = {e: tuple(p) for e, p in w.edge_path_map.items()} if w.edge_path_map is not None else None
    uv, ue = target.vertex_labels, target.edge_labels

    def cover():
        cd = cover_delta(target, b.g, Witness(m, paths))
        return cd

    while True:
        g = b.g
        cd = cover()
        if ordered:
            # Labels outside the images of target vertices and edges go to top.
            images = set(m.values())
            loose_v = [v for v in g.sorted_vertices() if v not in images and g.vertex_labels[v] != top]
            if loose_v:
                v = loose_v[0]
                a = g.vertex_labels[v]
                b.apply("UR0PO", {"v1": v, "a": a, "b": min(tax.parents(a), key=lambda p: (tax.depth(p), p))})
                continue
            loose_e = [e for e in g.sorted_edges() if e in cd.delta_edges and g.edge_labels[e] != top]
            if loose_e:
                e = loose_e[0]
                a = g.edge_labels[e]
                b.apply("UR1PO", {"e": e, "a": a, "b": min(tax.parents(a), key=lambda p: (tax.depth(p), p))})
                continue
            # Image labels climb toward the labels they must match.
            wanted_v: dict[str, list[str]] = {}
            for u, x in m.items():
                wanted_v.setdefault(x, []).append(uv[u])
            moved = False
            for x in sorted(wanted_v):
                goals = wanted_v[x]
                a = g.vertex_labels[x]
                if a in goals and all(tax.leq(y, a) for y in goals):
                    continue
                p = _step_up_toward(tax, a, goals)
                if p is not None:
                    b.apply("UR0PO", {"v1": x, "a": a, "b": p})
                    moved = True
                    break
            if moved:
                continue
            wanted_e: dict = {}
            for e, lab in ue.items():
                chain = paths[e] if paths is not None else ((m[e[0]], m[e[1]]),)
                for step in chain:
                    wanted_e.setdefault(step, []).append(lab)
            for step in sorted(wanted_e):
                goals = wanted_e[step]
                a = g.edge_labels[step]
                if a in goals and all(tax.leq(y, a) for y in goals):
                    continue
                p = _step_up_toward(tax, a, goals)
                if p is not None:
                    b.apply("UR1PO", {"e": step, "a": a, "b": p})
                    moved = True
                    break
            if moved:
                continue
        if cd.delta_vertices:
            leaves = [v for v in sorted(cd.delta_vertices) if len(g.incident_edges(v)) <= 1]
            if leaves:
                b.apply("UR3PO" if ordered else "UR1", {"v": leaves[0]})
                continue
        if cd.delta_edges:
            br = bridges(g)
            loose = [e for e in sorted(cd.delta_edges) if e not in br]
            if loose:
                b.apply("UR2PO" if ordered else "UR0", {"e": loose[0]})
                continue
        if paths is not None:
            long = [e for e in sorted(paths) if len(paths[e]) > 1]
            if long:
                e = long[0]
                chain = paths[e]
                e1, e2 = chain[0], chain[1]
                b.apply("UR4PO" if ordered else "UR2", {"e1": e1, "e2": e2})
                paths[e] = ((e1[0], e2[1]),) + chain[2:]
                continue
        return b.steps


def refinement_path_between(
    source: Graph, target: Graph, op: OperatorSpec, spec: RelationSpec | None = None,
    max_steps: int | None = None,
) -> RefinementPath:
    """A concrete refinement path from `source` to a graph equivalent to `target`.

    With a downward operator `source` must subsume `target`; with an upward
    operator `target` must subsume `source`. The steps follow the constructive
    procedure behind the completeness of each operator: grow the vertex and
    edge cover (splitting stretched edges, refining labels) going down, or
    strip leaves, redundant edges and stretched chains going up.
    Without OI in `spec` the end graph is equivalent only under that
    weaker relation.
    """
    spec = _resolve(op, spec, require_oi=False)
    if op.downward:
        w = subsumes(source, target, spec)
        if w is None:
            raise PreconditionError("source does not subsume target")
        steps = _downward_path(source, target, op, spec, w, max_steps)
    else:
        w = subsumes(target, source, spec)
        if w is None:
            raise PreconditionError("target does not subsume source")
        if target.is_empty:
            steps = _to_top(source, op, max_steps)
        else:
            steps = _upward_path(source, target, op, spec, w, max_steps)
    return RefinementPath(source, tuple(steps))


def _to_top(source: Graph, op: OperatorSpec, limit) -> list[RuleApplication]:
    """Generalize all the way to the empty graph (the upward procedure's degenerate case)."""
    ordered = op.ordered_labels
    tax = op.taxonomy
    b = _PathBuilder(source, op, limit)
    while not b.g.is_empty:
        g = b.g
        if ordered:
            off_v = [v for v in g.sorted_vertices() if g.vertex_labels[v] != tax.top]
            off_e = [e for e in g.sorted_edges() if g.edge_labels[e] != tax.top]
            if off_v:
                a = g.vertex_labels[off_v[0]]
                b.apply("UR0PO", {"v1": off_v[0], "a": a, "b": min(tax.parents(a), key=lambda p: (tax.depth(p), p))})
                continue
            if off_e:
                a = g.edge_labels[off_e[0]]
                b.apply("UR1PO", {"e": off_e[0], "a": a, "b": min(tax.parents(a), key=lambda p: (tax.depth(p), p))})
                continue
        leaves = [v for v in g.sorted_vertices() if len(g.incident_edges(v)) <= 1]
        if leaves:
            b.apply("UR3PO" if ordered else "UR1", {"v": leaves[0]})
            continue
        br = bridges(g)
        loose = [e for e in g.sorted_edges() if e not in br]
        b.apply("UR2PO" if ordered else "UR0", {"e": loose[0]})
    return b.steps


# -- anti-unification ----------------------------------------------------------


def _score(g: Graph, op: OperatorSpec, cache: dict) -> int:
    key = canonical_key(g)
    if key not in cache:
        cache[key] = path_length_from_top(g, op)
    return cache[key]


def _pair_graph(g1: Graph, g2: Graph, pairs, tax: LabelTaxonomy | None) -> Graph | None:
    vl = {}
    for i, (x, y) in enumerate(pairs):
        a, b = g1.vertex_labels[x], g2.vertex_labels[y]
        if tax is None:
            if a != b:
                return None
            vl[str(i)] = a
        else:
            vl[str(i)] = tax.common_generalizations(a, b)[0]
    el = {}
    for i, (x, y) in enumerate(pairs):
        for j, (x2, y2) in enumerate(pairs):
            l1 = g1.edge_labels.get((x, x2))
            l2 = g2.edge_labels.get((y, y2))
            if l1 is None or l2 is None:
                continue
            if tax is None:
                if l1 == l2:
                    el[(str(i), str(j))] = l1
            else:
                el[(str(i), str(j))] = tax.common_generalizations(l1, l2)[0]
    return Graph._trusted(vl, el)


def _common_embeddings(g1: Graph, g2: Graph, tax: LabelTaxonomy | None, budget: Budget):
    """Connected sets of vertex pairs, injective on both sides."""
    def adjacent(graph, v):
        return set(graph.successors(v)) | set(graph.predecessors(v))

    seen: set[frozenset] = set()
    starts = [
        (x, y)
        for x in g1.sorted_vertices()
        for y in g2.sorted_vertices()
        if tax is not None or g1.vertex_labels[x] == g2.vertex_labels[y]
    ]
    stack = [frozenset([p]) for p in starts]
    while stack:
        pairs = stack.pop()
        if pairs in seen:
            continue
        seen.add(pairs)
        budget.tick()
        yield pairs
        left = {x for x, _ in pairs}
        right = {y for _, y in pairs}
        for x, y in pairs:
            for x2 in adjacent(g1, x) - left:
                for y2 in adjacent(g2, y) - right:
                    if tax is None and g1.vertex_labels[x2] != g2.vertex_labels[y2]:
                        continue
                    grown = pairs | {(x2, y2)}
                    if grown not in seen:
                        stack.append(grown)


def antiunify(
    g1: Graph, g2: Graph, spec: RelationSpec, op: OperatorSpec | None = None,
    budget: Budget | int | None = None,
) -> LatticeResult:
    """A most specific graph subsuming both inputs.

    Candidates come from connected common embeddings (pairs of vertices
    mapped together, labels generalized to a closest common ancestor). The
    best candidate is then refined greedily while it still subsumes both
    inputs, so no single downward refinement of the result subsumes both.
    Ties go to the longer path from the empty graph, then the smaller
    canonical key. Flat relations need `op` (for its alphabet) unless the
    alphabet can be read off the two graphs.
    """
    if not spec.object_identity:
        raise PreconditionError("anti-unification is defined under object identity only")
    op = _down(op) if op is not None else _default_operator(spec, "down", (g1, g2))
    _resolve(op, spec)
    budget = Budget.coerce(budget)
    for g, name in ((g1, "g1"), (g2, "g2")):
        if not g.connected:
            raise PreconditionError(f"{name} must be connected or empty")
    cache: dict = {}
    best = EMPTY_GRAPH
    best_rank = (0, canonical_key(EMPTY_GRAPH))
    if not g1.is_empty and not g2.is_empty:
        for pairs in _common_embeddings(g1, g2, spec.taxonomy, budget):
            cand = _pair_graph(g1, g2, sorted(pairs), spec.taxonomy)
            if cand is None or not cand.connected:
                continue
            rank = (-_score(cand, op, cache), canonical_key(cand))
            if best is EMPTY_GRAPH or rank < best_rank:
                best, best_rank = cand, rank
    limit = min(g1.n_vertices, g2.n_vertices)
    current = best
    while True:
        options = []
        for app in refine(current, op, max_vertices=limit):
            r = app.result
            budget.tick()
            if subsumes(r, g1, spec, budget) is not None and subsumes(r, g2, spec, budget) is not None:
                options.append(((-_score(r, op, cache), canonical_key(r)), r))
        if not options:
            break
        current = min(options, key=lambda t: t[0])[1]
    result = canonical_relabel(current)
    return LatticeResult(result, subsumes(result, g1, spec), subsumes(result, g2, spec))


def _default_operator(spec: RelationSpec, direction: str, graphs: Iterable[Graph]) -> OperatorSpec:
    if spec.ordered:
        return OperatorSpec.for_relation(spec, direction)
    alphabet = set()
    for g in graphs:
        alphabet |= g.label_set
    return OperatorSpec.for_relation(spec, direction, alphabet=sorted(alphabet) or ["_"])


# -- unification ---------------------------------------------------------------


def _label_options(a: str, b: str, tax: LabelTaxonomy | None) -> list[str]:
    if tax is None:
        return [a] if a == b else []
    return tax.common_specializations(a, b)


def _overlays(g1: Graph, g2: Graph, tax: LabelTaxonomy | None, connectors: list[str], budget: Budget):
    """Graphs combining g1 and g2 glued along an injective correspondence."""
    v1 = g1.sorted_vertices()
    v2 = g2.sorted_vertices()
    for k in range(min(len(v1), len(v2)) + 1):
        for left in itertools.combinations(v1, k):
            for right in itertools.permutations(v2, k):
                budget.tick()
                corr = dict(zip(left, right))
                yield from _glue(g1, g2, corr, tax, connectors)


def _glue(g1: Graph, g2: Graph, corr: dict, tax, connectors):
    name1 = {x: f"a{x}" if x not in corr else f"m{x}" for x in g1.vertex_labels}
    back = {y: x for x, y in corr.items()}
    name2 = {y: name1[back[y]] if y in back else f"b{y}" for y in g2.vertex_labels}
    choices: list[tuple[object, list[str]]] = []
    fixed_v = {}
    for x, lab in g1.vertex_labels.items():
        if x in corr:
            opts = _label_options(lab, g2.vertex_labels[corr[x]], tax)
            if not opts:
                return
            choices.append((name1[x], opts))
        else:
            fixed_v[name1[x]] = lab
    for y, lab in g2.vertex_labels.items():
        if y not in back:
            fixed_v[name2[y]] = lab
    edges1 = {(name1[u], name1[v]): lab for (u, v), lab in g1.edge_labels.items()}
    edges2 = {(name2[u], name2[v]): lab for (u, v), lab in g2.edge_labels.items()}
    fixed_e = {}
    for e in set(edges1) | set(edges2):
        if e in edges1 and e in edges2:
            opts = _label_options(edges1[e], edges2[e], tax)
            if not opts:
                return
            choices.append((e, opts))
        else:
            fixed_e[e] = edges1.get(e, edges2.get(e))
    for combo in itertools.product(*[opts for _, opts in choices]):
        vl = dict(fixed_v)
        el = dict(fixed_e)
        for (slot, _), lab in zip(choices, combo):
            if isinstance(slot, tuple):
                el[slot] = lab
            else:
                vl[slot] = lab
        g = Graph._trusted(vl, el)
        if g.connected:
            yield g
            continue
        # Nothing glued: join the two parts by one extra edge.
        for x in sorted(g1.vertex_labels):
            for y in sorted(g2.vertex_labels):
                for src, dst in ((name1[x], name2[y]), (name2[y], name1[x])):
                    for lab in connectors:
                        el2 = dict(el)
                        el2[(src, dst)] = lab
                        yield Graph._trusted(dict(vl), el2)


def unify(
    g1: Graph, g2: Graph, spec: RelationSpec, limit: int | None = None,
    op: OperatorSpec | None = None, budget: Budget | int | None = None,
) -> list[LatticeResult]:
    """Most general graphs subsumed by both inputs, sorted by canonical key.

    Candidates are overlays of the two graphs under every injective partial
    vertex correspondence (so at most ``|V1| + |V2|`` vertices), with glued
    labels set to a most general common specialization. Each candidate is
    generalized with the upward operator while both inputs still subsume it;
    the locally minimal graphs reached are the unifiers. Without chains no
    generalization is needed: a minimal unifier is itself such an overlay. For flat relations
    the connecting edge needed when nothing is glued takes its label from the
    operator's alphabet (by default, the labels of the two graphs).
    """
    if not spec.object_identity:
        raise PreconditionError("unification is defined under object identity only")
    up = _up(op) if op is not None else _default_operator(spec, "up", (g1, g2))
    _resolve(up, spec)
    budget = Budget.coerce(budget)
    for g, name in ((g1, "g1"), (g2, "g2")):
        if not g.connected:
            raise PreconditionError(f"{name} must be connected or empty")
    if g1.is_empty or g2.is_empty:
        other = g2 if g1.is_empty else g1
        result = canonical_relabel(other)
        return [LatticeResult(result, subsumes(g1, result, spec), subsumes(g2, result, spec))]
    connectors = [spec.taxonomy.top] if spec.ordered else list(up.alphabet)

    memo: dict[str, bool] = {}

    def below_both(g: Graph) -> bool:
        key = canonical_key(g)
        hit = memo.get(key)
        if hit is None:
            hit = memo[key] = (
                subsumes(g1, g, spec, budget) is not None and subsumes(g2, g, spec, budget) is not None
            )
        return hit

    found: dict[str, Graph] = {}
    visited: set[str] = set()
    for cand in _overlays(g1, g2, spec.taxonomy, connectors, budget):
        if not spec.transitive:
            # Without chains the covers of a minimal unifier overlay g1 and g2
            # (plus one connector when they share nothing), so local
            # minimality of each overlay is all that needs checking.
            key = canonical_key(cand)
            if key in visited:
                continue
            visited.add(key)
            if below_both(cand) and not any(below_both(app.result) for app in refine(cand, up)):
                found[key] = cand
            continue
        stack = [cand]
        while stack:
            g = stack.pop()
            key = canonical_key(g)
            if key in visited:
                continue
            visited.add(key)
            if not below_both(g):
                continue
            ups = [app.result for app in refine(g, up)]
            general = [h for h in ups if below_both(h)]
            if not general:
                found[key] = g
            else:
                stack.extend(general)
    results = []
    for key in sorted(found):
        g = canonical_relabel(found[key])
        results.append(LatticeResult(g, subsumes(g1, g, spec), subsumes(g2, g, spec)))
        if limit is not None and len(results) >= limit:
            break
    return results
