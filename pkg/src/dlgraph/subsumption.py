"""Subsumption tests for directed labeled graphs.

Four relations are supported:

* ``plain``: a vertex map preserving edges and labels exactly;
* ``po``: like plain, but a label may be replaced by a more specific one;
* ``trans``: an edge may be stretched into a directed chain of edges that
  all carry the edge's label;
* ``trans_po``: both relaxations at once.

Each relation can be combined with object identity (OI). Under OI the vertex
map is injective, and for the chain relations every chain interior is private
to its edge: it holds no image of a vertex and shares no vertex with another
chain's interior.
"""

from __future__ import annotations

from collections import Counter

import dataclasses
import itertools
from collections import deque
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field

from .errors import Budget, GraphError, TaxonomyError, WitnessError
from .graph import CoverDelta, Edge, Graph, LabelTaxonomy

RELATIONS = ("plain", "po", "trans", "trans_po")


@dataclass(frozen=True)
class RelationSpec:
    """Which subsumption relation to test, and whether OI is enforced."""

    relation: str = "plain"
    object_identity: bool = False
    taxonomy: LabelTaxonomy | None = None

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}; expected one of {RELATIONS}")
        if self.ordered and self.taxonomy is None:
            raise ValueError(f"relation {self.relation!r} needs a taxonomy")
        if not self.ordered and self.taxonomy is not None:
            raise ValueError(f"relation {self.relation!r} does not take a taxonomy")

    @property
    def ordered(self) -> bool:
        return self.relation in ("po", "trans_po")

    @property
    def transitive(self) -> bool:
        return self.relation in ("trans", "trans_po")

    def compatible(self, general: str, specific: str) -> bool:
        """May a label `general` of the subsumer be matched to `specific`?"""
        if self.taxonomy is None:
            return general == specific
        return self.taxonomy.leq(general, specific)

    def with_oi(self, flag: bool = True) -> "RelationSpec":
        return dataclasses.replace(self, object_identity=flag)


@dataclass(frozen=True)
class Witness:
    """Certificate that one graph subsumes another.

    `vertex_map` sends each subsumer vertex to a subsumee vertex. For the
    chain relations `edge_path_map` sends each subsumer edge to the chain of
    subsumee edges it stretches over; it is None otherwise.
    """

    vertex_map: Mapping[str, str]
    edge_path_map: Mapping[Edge, tuple[Edge, ...]] | None = field(default=None)

    def edge_image(self, e: Edge) -> tuple[Edge, ...]:
        if self.edge_path_map is not None:
            return tuple(self.edge_path_map[e])
        return ((self.vertex_map[e[0]], self.vertex_map[e[1]]),)

    def path_interior(self, e: Edge) -> list[str]:
        path = self.edge_image(e)
        return [dst for _, dst in path[:-1]]


def _check_input(g: Graph, spec: RelationSpec, name: str) -> None:
    if not g.connected:
        raise GraphError(f"{name} must be connected or empty")
    if spec.taxonomy is not None and not g.label_set <= spec.taxonomy.labels:
        missing = sorted(g.label_set - spec.taxonomy.labels)
        raise TaxonomyError(f"labels of {name} not in the taxonomy: {', '.join(missing)}")


class _Matcher:
    """Backtracking search for witnesses of ``g1`` subsuming ``g2``."""

    def __init__(self, g1: Graph, g2: Graph, spec: RelationSpec, budget: Budget):
        self.g1 = g1
        self.g2 = g2
        self.spec = spec
        self.oi = spec.object_identity
        self.trans = spec.transitive
        self.budget = budget
        self._compat_cache: dict[tuple[str, str], bool] = {}
        self._reach_cache: dict[tuple[str, str], frozenset[str]] = {}
        self._paths_cache: dict[tuple[str, str, str], list[tuple[str, ...]]] = {}
        self._v2 = g2.sorted_vertices()
        self._plan()

    def compat(self, general: str, specific: str) -> bool:
        key = (general, specific)
        hit = self._compat_cache.get(key)
        if hit is None:
            hit = self._compat_cache[key] = self.spec.compatible(general, specific)
        return hit

    # -- planning --------------------------------------------------------
    def _vertex_candidates(self, v: str) -> list[str]:
        g1, g2 = self.g1, self.g2
        lab = g1.vertex_labels[v]
        loop = g1.successors(v).get(v)
        out_deg = len(g1.successors(v))
        in_deg = len(g1.predecessors(v))
        result = []
        for w in self._v2:
            if not self.compat(lab, g2.vertex_labels[w]):
                continue
            if loop is not None:
                if self.trans:
                    if w not in self.reach(loop, w):
                        continue
                else:
                    other = g2.successors(w).get(w)
                    if other is None or not self.compat(loop, other):
                        continue
            if self.oi and (len(g2.successors(w)) < out_deg or len(g2.predecessors(w)) < in_deg):
                continue
            result.append(w)
        return result

    def _plan(self) -> None:
        g1 = self.g1
        self.cands = {v: self._vertex_candidates(v) for v in g1.vertex_labels}
        self.cand_sets = {v: set(c) for v, c in self.cands.items()}
        order: list[str] = []
        if g1.n_vertices:
            ncand = {v: len(c) for v, c in self.cands.items()}
            degree = {v: g1.degree(v) for v in g1.vertex_labels}
            links = dict.fromkeys(g1.vertex_labels, 0)
            remaining = set(g1.vertex_labels)
            v = min(remaining, key=lambda u: (ncand[u], -degree[u], u))
            while True:
                order.append(v)
                remaining.discard(v)
                if not remaining:
                    break
                for w in g1.successors(v):
                    links[w] += 1
                for u in g1.predecessors(v):
                    if u != v:
                        links[u] += 1
                v = min(
                    (u for u in remaining if links[u]),
                    key=lambda u: (-links[u], ncand[u], -degree[u], u),
                )
        self.order = order
        position = {v: i for i, v in enumerate(order)}
        self.back_in: dict[str, list[tuple[str, str]]] = {}
        self.back_out: dict[str, list[tuple[str, str]]] = {}
        for v in order:
            self.back_in[v] = [
                (u, lab) for u, lab in sorted(g1.predecessors(v).items()) if u != v and position[u] < position[v]
            ]
            self.back_out[v] = [
                (w, lab) for w, lab in sorted(g1.successors(v).items()) if w != v and position[w] < position[v]
            ]

    # -- reachability and chains for the chain relations -----------------
    def reach(self, label: str, src: str) -> frozenset[str]:
        """Vertices reachable from `src` by one or more label-compatible edges."""
        key = (label, src)
        hit = self._reach_cache.get(key)
        if hit is not None:
            return hit
        g2 = self.g2
        seen: set[str] = set()
        stack = [src]
        while stack:
            x = stack.pop()
            for y, lab in g2.successors(x).items():
                if y not in seen and self.compat(label, lab):
                    seen.add(y)
                    stack.append(y)
        hit = self._reach_cache[key] = frozenset(seen)
        return hit

    def chains(self, label: str, src: str, dst: str) -> list[tuple[str, ...]]:
        """Simple label-compatible chains from `src` to `dst` (simple cycles when equal).

        Sorted by length, then by vertex sequence.
        """
        key = (label, src, dst)
        hit = self._paths_cache.get(key)
        if hit is not None:
            return hit
        g2 = self.g2
        found: list[tuple[str, ...]] = []
        path = [src]
        on_path = {src}

        def extend(x: str) -> None:
            for y, lab in g2.successors(x).items():
                if not self.compat(label, lab):
                    continue
                if y == dst:
                    found.append(tuple(path) + (dst,))
                    continue
                if y in on_path:
                    continue
                path.append(y)
                on_path.add(y)
                extend(y)
                path.pop()
                on_path.discard(y)

        extend(src)
        found.sort(key=lambda p: (len(p), p))
        self._paths_cache[key] = found
        return found

    def shortest_chain(self, label: str, src: str, dst: str) -> tuple[str, ...] | None:
        """Shortest label-compatible chain, ties broken by vertex id."""
        g2 = self.g2
        parent: dict[str, str] = {}
        queue = deque([src])
        while queue:
            x = queue.popleft()
            succ = g2.successors(x)
            for y in sorted(succ):
                if not self.compat(label, succ[y]):
                    continue
                if y == dst:
                    seq = [x]
                    while seq[-1] != src:
                        seq.append(parent[seq[-1]])
                    return tuple(reversed(seq)) + (dst,)
                if y != src and y not in parent:
                    parent[y] = x
                    queue.append(y)
        return None

    # -- vertex assignment -----------------------------------------------
    def _candidates_for(self, v: str, m: dict[str, str]) -> list[str]:
        g2 = self.g2
        ins = self.back_in[v]
        outs = self.back_out[v]
        allowed = self.cand_sets[v]
        if self.trans:
            pool = self.cands[v]
            result = []
            for w in pool:
                if all(w in self.reach(lab, m[u]) for u, lab in ins) and all(
                    m[x] in self.reach(lab, w) for x, lab in outs
                ):
                    result.append(w)
            return result
        if ins:
            u, lab = ins[0]
            pool = sorted(w for w, l2 in g2.successors(m[u]).items() if self.compat(lab, l2))
            rest_in = ins[1:]
            rest_out = outs
        elif outs:
            x, lab = outs[0]
            pool = sorted(w for w, l2 in g2.predecessors(m[x]).items() if self.compat(lab, l2))
            rest_in = ins
            rest_out = outs[1:]
        else:
            return self.cands[v]
        result = []
        for w in pool:
            if w not in allowed:
                continue
            ok = True
            for u, lab in rest_in:
                l2 = g2.predecessors(w).get(m[u])
                if l2 is None or not self.compat(lab, l2):
                    ok = False
                    break
            if ok:
                for x, lab in rest_out:
                    l2 = g2.successors(w).get(m[x])
                    if l2 is None or not self.compat(lab, l2):
                        ok = False
                        break
            if ok:
                result.append(w)
        return result

    def vertex_maps(self) -> Iterator[dict[str, str]]:
        order = self.order
        n = len(order)
        m: dict[str, str] = {}
        used: set[str] = set()
        oi = self.oi

        def rec(i: int) -> Iterator[dict[str, str]]:
            if i == n:
                yield dict(m)
                return
            v = order[i]
            for w in self._candidates_for(v, m):
                self.budget.tick()
                if oi and w in used:
                    continue
                m[v] = w
                used.add(w)
                yield from rec(i + 1)
                del m[v]
                used.discard(w)

        if any(not c for c in self.cands.values()):
            return
        if oi and self.g1.n_vertices > self.g2.n_vertices:
            return
        yield from rec(0)

    # -- chain assignment ------------------------------------------------
    def chain_maps(self, m: dict[str, str], exhaustive: bool) -> Iterator[dict[Edge, tuple[Edge, ...]]]:
        g1 = self.g1
        edges = g1.sorted_edges()
        if not self.oi:
            if not exhaustive:
                result = {}
                for e in edges:
                    seq = self.shortest_chain(g1.edge_labels[e], m[e[0]], m[e[1]])
                    if seq is None:
                        return
                    result[e] = _as_edges(seq)
                yield result
                return
            options = []
            for e in edges:
                opts = self.chains(g1.edge_labels[e], m[e[0]], m[e[1]])
                if not opts:
                    return
                options.append(opts)
            for combo in itertools.product(*options):
                self.budget.tick()
                yield {e: _as_edges(seq) for e, seq in zip(edges, combo)}
            return

        images = set(m.values())
        blocked = set(images)
        chosen: dict[Edge, tuple[Edge, ...]] = {}

        def rec(i: int) -> Iterator[dict[Edge, tuple[Edge, ...]]]:
            if i == len(edges):
                yield dict(chosen)
                return
            e = edges[i]
            for seq in self.chains(g1.edge_labels[e], m[e[0]], m[e[1]]):
                self.budget.tick()
                interior = seq[1:-1]
                if any(x in blocked for x in interior):
                    continue
                path = _as_edges(seq)
                blocked.update(interior)
                chosen[e] = path
                yield from rec(i + 1)
                del chosen[e]
                blocked.difference_update(interior)
                if not exhaustive and len(seq) == 2:
                    # A direct edge leaves the most room for later edges.
                    break

        yield from rec(0)

    def witnesses(self, exhaustive: bool) -> Iterator[Witness]:
        for m in self.vertex_maps():
            if not self.trans:
                yield Witness(m)
                continue
            for paths in self.chain_maps(m, exhaustive):
                yield Witness(m, paths)
                if not exhaustive:
                    break


def _as_edges(seq: tuple[str, ...]) -> tuple[Edge, ...]:
    return tuple(zip(seq[:-1], seq[1:]))


def _empty_witness(spec: RelationSpec) -> Witness:
    return Witness({}, {} if spec.transitive else None)


def _label_counts_fit(g1: Graph, g2: Graph, transitive: bool) -> bool:
    """Necessary condition for flat OI subsumption: label multiplicities fit."""
    need = Counter(g1.vertex_labels.values())
    have = Counter(g2.vertex_labels.values())
    if any(have[lab] < n for lab, n in need.items()):
        return False
    if transitive:
        return True
    need = Counter(g1.edge_labels.values())
    have = Counter(g2.edge_labels.values())
    return all(have[lab] >= n for lab, n in need.items())


def iter_witnesses(
    g1: Graph, g2: Graph, spec: RelationSpec, budget: Budget | int | None = None, exhaustive: bool = True
) -> Iterator[Witness]:
    """Lazily yield witnesses of `g1` subsuming `g2` in deterministic order."""
    _check_input(g1, spec, "g1")
    _check_input(g2, spec, "g2")
    if g1.is_empty:
        yield _empty_witness(spec)
        return
    if g2.is_empty:
        return
    if spec.object_identity and (g1.n_vertices > g2.n_vertices or g1.n_edges > g2.n_edges):
        # OI maps vertices injectively and edges to pairwise disjoint images.
        return
    if spec.object_identity and not spec.ordered and not _label_counts_fit(g1, g2, spec.transitive):
        return
    yield from _Matcher(g1, g2, spec, Budget.coerce(budget)).witnesses(exhaustive)


def subsumes(g1: Graph, g2: Graph, spec: RelationSpec, budget: Budget | int | None = None) -> Witness | None:
    """A witness that `g1` subsumes `g2` under `spec`, or None."""
    for w in iter_witnesses(g1, g2, spec, budget, exhaustive=False):
        return w
    return None


def enumerate_witnesses(
    g1: Graph, g2: Graph, spec: RelationSpec, limit: int | None = None, budget: Budget | int | None = None
) -> list[Witness]:
    """All distinct witnesses, up to `limit`, in deterministic order.

    For the chain relations only simple chains (or simple cycles, for
    self-loops) are enumerated, which keeps the set finite.
    """
    it = iter_witnesses(g1, g2, spec, budget, exhaustive=True)
    if limit is None:
        return list(it)
    return list(itertools.islice(it, limit))


def equivalent(g1: Graph, g2: Graph, spec: RelationSpec, budget: Budget | int | None = None) -> bool:
    """True iff each graph subsumes the other."""
    if spec.object_identity and (g1.n_vertices != g2.n_vertices or g1.n_edges != g2.n_edges):
        # Under OI both directions are injective on vertices and edges.
        _check_input(g1, spec, "g1")
        _check_input(g2, spec, "g2")
        return False
    return subsumes(g1, g2, spec, budget) is not None and subsumes(g2, g1, spec, budget) is not None


def check_witness(g1: Graph, g2: Graph, spec: RelationSpec, witness: Witness) -> None:
    """Raise `WitnessError` naming the first violated clause, if any."""
    m = witness.vertex_map
    if set(m) != set(g1.vertex_labels):
        raise WitnessError("vertex map must be defined exactly on the vertices of g1")
    for v, w in m.items():
        if not g2.has_vertex(w):
            raise WitnessError(f"vertex {v!r} maps to {w!r}, which is not a vertex of g2")
        if not spec.compatible(g1.vertex_labels[v], g2.vertex_labels[w]):
            raise WitnessError(f"label of vertex {v!r} is not compatible with the label of {w!r}")
    if spec.object_identity and len(set(m.values())) != len(m):
        raise WitnessError("object identity: vertex map is not injective")
    if not spec.transitive:
        if witness.edge_path_map is not None:
            raise WitnessError("edge path map given for a relation without chains")
        for (u, v), lab in g1.edge_labels.items():
            image = (m[u], m[v])
            if image not in g2.edge_labels:
                raise WitnessError(f"edge ({u!r}, {v!r}) maps to {image}, which is not an edge of g2")
            if not spec.compatible(lab, g2.edge_labels[image]):
                raise WitnessError(f"label of edge ({u!r}, {v!r}) is not compatible with its image")
        return
    paths = witness.edge_path_map
    if paths is None or set(paths) != set(g1.edge_labels):
        raise WitnessError("edge path map must be defined exactly on the edges of g1")
    images = set(m.values())
    interiors: list[set[str]] = []
    for (u, v), lab in g1.edge_labels.items():
        path = tuple(paths[(u, v)])
        if not path:
            raise WitnessError(f"edge ({u!r}, {v!r}) maps to an empty chain")
        if path[0][0] != m[u] or path[-1][1] != m[v]:
            raise WitnessError(f"chain of edge ({u!r}, {v!r}) does not join the images of its endpoints")
        for a, b in zip(path, path[1:]):
            if a[1] != b[0]:
                raise WitnessError(f"chain of edge ({u!r}, {v!r}) is not contiguous")
        for step in path:
            if step not in g2.edge_labels:
                raise WitnessError(f"chain of edge ({u!r}, {v!r}) uses {step}, which is not an edge of g2")
            if not spec.compatible(lab, g2.edge_labels[step]):
                raise WitnessError(f"chain of edge ({u!r}, {v!r}) uses an edge with an incompatible label")
        if spec.object_identity:
            interior = [b for _, b in path[:-1]]
            if len(set(interior)) != len(interior) or m[u] in interior or m[v] in interior:
                raise WitnessError(f"object identity: chain of edge ({u!r}, {v!r}) is not simple")
            if any(x in images for x in interior):
                raise WitnessError(f"object identity: chain of edge ({u!r}, {v!r}) passes through an image vertex")
            for other in interiors:
                if other.intersection(interior):
                    raise WitnessError("object identity: two chains share an interior vertex")
            interiors.append(set(interior))


def is_valid_witness(g1: Graph, g2: Graph, spec: RelationSpec, witness: Witness) -> bool:
    try:
        check_witness(g1, g2, spec, witness)
    except (WitnessError, KeyError, TypeError):
        return False
    return True


def cover_delta(g1: Graph, g2: Graph, witness: Witness) -> CoverDelta:
    """Cover (image of the witness, chains included) and delta of `g2`."""
    m = witness.vertex_map
    if set(m) != set(g1.vertex_labels) or any(not g2.has_vertex(w) for w in m.values()):
        raise WitnessError("vertex map does not fit the two graphs")
    cover_v = set(m.values())
    cover_e: set[Edge] = set()
    for e in g1.edge_labels:
        if witness.edge_path_map is None:
            image = ((m[e[0]], m[e[1]]),)
        else:
            if e not in witness.edge_path_map:
                raise WitnessError(f"edge {e} has no chain")
            image = tuple(witness.edge_path_map[e])
        for step in image:
            if step not in g2.edge_labels:
                raise WitnessError(f"image {step} is not an edge of g2")
            cover_e.add(step)
            cover_v.update(step)
    return CoverDelta(
        frozenset(cover_v),
        frozenset(cover_e),
        frozenset(set(g2.vertex_labels) - cover_v),
        frozenset(set(g2.edge_labels) - cover_e),
    )
