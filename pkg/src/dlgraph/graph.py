"""Directed labeled graphs, label taxonomies and structural queries."""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from typing import Tuple

from .errors import GraphError, TaxonomyError

Edge = Tuple[str, str]


class Graph:
    """An immutable directed labeled graph.

    Vertices are opaque string ids and every vertex and edge carries exactly
    one label. Edges form a set of ordered pairs, so self-loops are allowed
    and parallel edges in the same direction are not.
    """

    __slots__ = ("_vl", "_el", "_succ", "_pred", "_connected", "_hash", "_ckey", "_labels", "_sorted")

    def __init__(self, vertex_labels: Mapping[str, str], edge_labels: Mapping[Edge, str]):
        vl = dict(vertex_labels)
        el = {}
        for edge, label in edge_labels.items():
            u, v = edge
            if u not in vl or v not in vl:
                raise GraphError(f"edge ({u!r}, {v!r}) has an endpoint that is not a vertex")
            el[(u, v)] = label
        self._init(vl, el)

    def _init(self, vl: dict, el: dict) -> None:
        self._vl = vl
        self._el = el
        succ: dict[str, dict[str, str]] = {v: {} for v in vl}
        pred: dict[str, dict[str, str]] = {v: {} for v in vl}
        for (u, v), label in el.items():
            succ[u][v] = label
            pred[v][u] = label
        self._succ = succ
        self._pred = pred
        self._connected = None
        self._hash = None
        self._ckey = None
        self._labels = None
        self._sorted = None

    @classmethod
    def _trusted(cls, vl: dict, el: dict) -> "Graph":
        """Build without validation; callers guarantee consistency."""
        g = cls.__new__(cls)
        g._init(vl, el)
        return g

    # -- basic accessors -------------------------------------------------
    @property
    def vertices(self) -> frozenset[str]:
        return frozenset(self._vl)

    @property
    def edges(self) -> frozenset[Edge]:
        return frozenset(self._el)

    @property
    def vertex_labels(self) -> Mapping[str, str]:
        return self._vl

    @property
    def edge_labels(self) -> Mapping[Edge, str]:
        return self._el

    @property
    def n_vertices(self) -> int:
        return len(self._vl)

    @property
    def n_edges(self) -> int:
        return len(self._el)

    @property
    def is_empty(self) -> bool:
        return not self._vl

    @property
    def connected(self) -> bool:
        if self._connected is None:
            self._connected = _compute_connected(self)
        return self._connected

    def label(self, item) -> str:
        """Label of a vertex id or of an edge given as a pair."""
        if isinstance(item, tuple):
            return self._el[item]
        return self._vl[item]

    def has_vertex(self, v: str) -> bool:
        return v in self._vl

    def has_edge(self, u: str, v: str) -> bool:
        return (u, v) in self._el

    def successors(self, v: str) -> Mapping[str, str]:
        """Map from each out-neighbour of `v` to the connecting edge label."""
        return self._succ[v]

    def predecessors(self, v: str) -> Mapping[str, str]:
        return self._pred[v]

    def incident_edges(self, v: str) -> list[Edge]:
        out = [(v, w) for w in self._succ[v]]
        out.extend((u, v) for u in self._pred[v] if u != v)
        return out

    def degree(self, v: str) -> int:
        """Number of distinct edges touching `v` (a self-loop counts once)."""
        return len(self._succ[v]) + len(self._pred[v]) - (1 if v in self._succ[v] else 0)

    def sorted_vertices(self) -> list[str]:
        if self._sorted is None:
            self._sorted = sorted(self._vl)
        return list(self._sorted)

    @property
    def label_set(self) -> frozenset[str]:
        """Every label used on a vertex or an edge."""
        if self._labels is None:
            self._labels = frozenset(self._vl.values()) | frozenset(self._el.values())
        return self._labels

    def sorted_edges(self) -> list[Edge]:
        return sorted(self._el)

    # -- derived graphs --------------------------------------------------
    def with_vertex_label(self, v: str, label: str) -> "Graph":
        vl = dict(self._vl)
        vl[v] = label
        return Graph._trusted(vl, dict(self._el))

    def with_edge_label(self, e: Edge, label: str) -> "Graph":
        el = dict(self._el)
        el[e] = label
        return Graph._trusted(dict(self._vl), el)

    def without_edge(self, e: Edge) -> "Graph":
        el = dict(self._el)
        del el[e]
        return Graph._trusted(dict(self._vl), el)

    def without_vertex(self, v: str) -> "Graph":
        vl = dict(self._vl)
        del vl[v]
        el = {e: lab for e, lab in self._el.items() if v not in e}
        return Graph._trusted(vl, el)

    def renamed(self, mapping: Mapping[str, str]) -> "Graph":
        """Copy with vertex ids replaced through an injective `mapping`."""
        vl = {mapping[v]: lab for v, lab in self._vl.items()}
        if len(vl) != len(self._vl):
            raise GraphError("vertex renaming is not injective")
        el = {(mapping[u], mapping[v]): lab for (u, v), lab in self._el.items()}
        return Graph._trusted(vl, el)

    def subgraph(self, vertices: Iterable[str], edges: Iterable[Edge]) -> "Graph":
        vs = set(vertices)
        vl = {v: self._vl[v] for v in vs}
        el = {}
        for e in edges:
            if e[0] not in vs or e[1] not in vs:
                raise GraphError(f"edge {e} leaves the chosen vertex set")
            el[e] = self._el[e]
        return Graph._trusted(vl, el)

    # -- identity --------------------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._vl == other._vl and self._el == other._el

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((frozenset(self._vl.items()), frozenset(self._el.items())))
        return self._hash

    def __repr__(self) -> str:
        vs = ", ".join(f"{v}:{self._vl[v]}" for v in sorted(self._vl))
        es = ", ".join(f"{u}-{self._el[(u, v)]}->{v}" for u, v in sorted(self._el))
        return f"G{{{vs} | {es}}}" if es else f"G{{{vs}}}"


EMPTY_GRAPH = Graph({}, {})


def make_graph(
    vertex_labels: Mapping[str, str] | Iterable[tuple[str, str]],
    edge_labels: Mapping[Edge, str] | Iterable[tuple[str, str, str]] = (),
    taxonomy: "LabelTaxonomy | None" = None,
) -> Graph:
    """Validate and build a graph.

    `vertex_labels` is a mapping ``id -> label`` or an iterable of pairs;
    `edge_labels` is a mapping ``(src, dst) -> label`` or an iterable of
    ``(src, dst, label)`` triples. Duplicate ids or edges are rejected. When a
    taxonomy is given every label must belong to it.
    """
    vl: dict[str, str] = {}
    items = vertex_labels.items() if isinstance(vertex_labels, Mapping) else vertex_labels
    for v, label in items:
        if v in vl:
            raise GraphError(f"duplicate vertex id {v!r}")
        vl[v] = label
    el: dict[Edge, str] = {}
    if isinstance(edge_labels, Mapping):
        triples = [(u, v, lab) for (u, v), lab in edge_labels.items()]
    else:
        triples = list(edge_labels)
    for u, v, label in triples:
        if (u, v) in el:
            raise GraphError(f"duplicate edge ({u!r}, {v!r})")
        if u not in vl or v not in vl:
            missing = u if u not in vl else v
            raise GraphError(f"dangling edge endpoint {missing!r} in edge ({u!r}, {v!r})")
        el[(u, v)] = label
    if taxonomy is not None:
        for lab in list(vl.values()) + list(el.values()):
            if lab not in taxonomy:
                raise TaxonomyError(f"label {lab!r} is not in the taxonomy")
    return Graph._trusted(vl, el)


def _compute_connected(g: Graph) -> bool:
    if g.n_vertices <= 1:
        return True
    start = next(iter(g.vertex_labels))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in g.successors(v):
            if w not in seen:
                seen.add(w)
                stack.append(w)
        for w in g.predecessors(v):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == g.n_vertices


def is_connected(g: Graph) -> bool:
    """True iff every pair of vertices is joined by an undirected path."""
    return g.connected


def bridges(g: Graph) -> frozenset[Edge]:
    """Edges whose removal disconnects `g`, ignoring direction.

    Two opposite edges between the same pair of vertices protect each other,
    and self-loops are never bridges.
    """
    if not g.connected:
        raise GraphError("bridges are only defined for connected graphs")
    if g.n_vertices <= 1:
        return frozenset()
    # Undirected multigraph adjacency with one id per directed edge.
    adjacency: dict[str, list[tuple[str, int]]] = {v: [] for v in g.vertex_labels}
    edge_list = []
    for idx, (u, v) in enumerate(g.sorted_edges()):
        edge_list.append((u, v))
        if u == v:
            continue
        adjacency[u].append((v, idx))
        adjacency[v].append((u, idx))
    order: dict[str, int] = {}
    low: dict[str, int] = {}
    found = set()
    root = min(g.vertex_labels)
    order[root] = low[root] = 0
    counter = 1
    # Iterative DFS with (vertex, edge id used to enter it, neighbour iterator).
    stack = [(root, -1, iter(adjacency[root]))]
    while stack:
        v, via, it = stack[-1]
        advanced = False
        for w, idx in it:
            if idx == via:
                continue
            if w in order:
                low[v] = min(low[v], order[w])
            else:
                order[w] = low[w] = counter
                counter += 1
                stack.append((w, idx, iter(adjacency[w])))
                advanced = True
                break
        if advanced:
            continue
        stack.pop()
        if stack:
            parent = stack[-1][0]
            low[parent] = min(low[parent], low[v])
            if low[v] > order[parent]:
                found.add(edge_list[via])
    return frozenset(found)


def path_exists(g: Graph, v1: str, v2: str, directed: bool = True) -> bool:
    """True iff a (directed or undirected) path leads from `v1` to `v2`."""
    for v in (v1, v2):
        if not g.has_vertex(v):
            raise GraphError(f"unknown vertex {v!r}")
    if v1 == v2:
        return True
    seen = {v1}
    queue = deque([v1])
    while queue:
        v = queue.popleft()
        nbrs = list(g.successors(v))
        if not directed:
            nbrs.extend(g.predecessors(v))
        for w in nbrs:
            if w == v2:
                return True
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return False


@dataclass(frozen=True)
class CoverDelta:
    """Split of a subsumee into the part a witness touches and the rest."""

    cover_vertices: frozenset[str]
    cover_edges: frozenset[Edge]
    delta_vertices: frozenset[str]
    delta_edges: frozenset[Edge]

    def cover_graph(self, g: Graph) -> Graph:
        return g.subgraph(self.cover_vertices, self.cover_edges)


class LabelTaxonomy:
    """A finite partial order of labels with a greatest-generality element.

    `covers` holds ``(parent, child)`` pairs of the Hasse diagram: the child is
    strictly more specific than the parent and nothing lies in between.
    Transitive pairs given as covers are accepted and dropped.
    """

    __slots__ = ("top", "labels", "covers", "_children", "_parents", "_dist", "_depth")

    def __init__(self, top: str, covers: Iterable[tuple[str, str]]):
        pairs = {(p, c) for p, c in covers}
        labels = {top}
        for p, c in pairs:
            if p == c:
                raise TaxonomyError(f"cycle in taxonomy: {p!r} covers itself")
            labels.add(p)
            labels.add(c)
        children: dict[str, set[str]] = {a: set() for a in labels}
        for p, c in pairs:
            children[p].add(c)
        # All-pairs shortest downward distances; doubles as the cycle check.
        dist: dict[str, dict[str, int]] = {}
        for a in labels:
            d = {a: 0}
            queue = deque([a])
            while queue:
                x = queue.popleft()
                for y in children[x]:
                    if y == a:
                        raise TaxonomyError(f"cycle in taxonomy through {a!r}")
                    if y not in d:
                        d[y] = d[x] + 1
                        queue.append(y)
            dist[a] = d
        unreachable = sorted(labels - set(dist[top]))
        if unreachable:
            raise TaxonomyError(f"labels not below top {top!r}: {', '.join(unreachable)}")
        # Keep only true covers (drop pairs implied by longer chains).
        hasse = set()
        for p, c in pairs:
            if not any(c in dist[m] for m in children[p] if m != c):
                hasse.add((p, c))
        self.top = top
        self.labels = frozenset(labels)
        self.covers = frozenset(hasse)
        self._children = {a: tuple(sorted(c for p, c in hasse if p == a)) for a in labels}
        self._parents = {a: tuple(sorted(p for p, c in hasse if c == a)) for a in labels}
        self._dist = dist
        self._depth = {a: dist[top][a] for a in labels}

    @classmethod
    def flat(cls, labels: Iterable[str], top: str = "any") -> "LabelTaxonomy":
        """Taxonomy where all `labels` sit directly below `top`."""
        return cls(top, [(top, a) for a in labels if a != top])

    def __contains__(self, label) -> bool:
        return label in self._dist

    def _check(self, *labels: str) -> None:
        for a in labels:
            if a not in self._dist:
                raise TaxonomyError(f"unknown label {a!r}")

    def leq(self, a: str, b: str) -> bool:
        """True iff `a` is at least as general as `b`."""
        self._check(a, b)
        return b in self._dist[a]

    def distance(self, a: str, b: str) -> int | None:
        """Cover steps from `a` down to `b`, or None when `a` is not above `b`."""
        self._check(a, b)
        return self._dist[a].get(b)

    def depth(self, a: str) -> int:
        """Cover steps from top down to `a`."""
        self._check(a)
        return self._depth[a]

    def children(self, a: str) -> tuple[str, ...]:
        """Labels immediately more specific than `a`."""
        self._check(a)
        return self._children[a]

    def parents(self, a: str) -> tuple[str, ...]:
        """Labels immediately more general than `a`."""
        self._check(a)
        return self._parents[a]

    def below(self, a: str) -> frozenset[str]:
        """All labels `b` with `a` at least as general as `b`."""
        self._check(a)
        return frozenset(self._dist[a])

    def common_generalizations(self, a: str, b: str) -> list[str]:
        """Most specific labels that are above both `a` and `b`."""
        self._check(a, b)
        ups = [x for x in self.labels if a in self._dist[x] and b in self._dist[x]]
        best = [x for x in ups if not any(y != x and y in self._dist[x] for y in ups)]
        return sorted(best)

    def common_specializations(self, a: str, b: str) -> list[str]:
        """Most general labels that are below both `a` and `b`."""
        self._check(a, b)
        downs = set(self._dist[a]) & set(self._dist[b])
        best = [x for x in downs if not any(y != x and x in self._dist[y] for y in downs)]
        return sorted(best)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelTaxonomy):
            return NotImplemented
        return self.top == other.top and self.covers == other.covers and self.labels == other.labels

    def __hash__(self) -> int:
        return hash((self.top, self.covers, self.labels))

    def __repr__(self) -> str:
        body = "; ".join(f"{p}<{c}" for p, c in sorted(self.covers))
        return f"T{{top={self.top}; {body}}}" if body else f"T{{top={self.top}}}"


def label_leq(tax: LabelTaxonomy, a: str, b: str) -> bool:
    return tax.leq(a, b)


def label_distance(tax: LabelTaxonomy, a: str, b: str) -> int | None:
    return tax.distance(a, b)
