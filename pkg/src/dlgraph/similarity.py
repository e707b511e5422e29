"""Disintegration into properties and refinement-based similarity measures.

A graph is disintegrated by walking an upward refinement path to the empty
graph; each step contributes one property, the remainder of that step (the
most general graph that, unified with the more general side, restores the
more specific side).  Three similarity measures are built on top:

* ``sim_au``: information in the anti-unifier relative to the information
  each graph adds on top of it, all measured as refinement path lengths;
* ``sim_props``: fraction of properties shared by both graphs;
* ``sim_wprops``: the same, with properties weighted from labelled data.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field

from .canonical import canonical_key, canonical_relabel
from .errors import Budget, DatasetError, PreconditionError
from .graph import Graph
from .lattice import (
    RefinementPath,
    _default_operator,
    _down,
    _resolve,
    _up,
    antiunify,
    path_length_between,
    path_length_from_top,
    unify,
)
from .refinement import OperatorSpec, RuleApplication, refine, refined_graphs
from .subsumption import RelationSpec, subsumes


@dataclass(frozen=True)
class Property:
    """One piece of information about a graph, identified by its canonical key."""

    graph: Graph
    canonical_key: str

    @classmethod
    def of(cls, g: Graph) -> "Property":
        return cls(canonical_relabel(g), canonical_key(g))


@dataclass(frozen=True)
class PropertySet:
    """A disintegration: one property per step of the generalization path."""

    properties: tuple[Property, ...]
    source: Graph
    path: RefinementPath = field(repr=False)

    def __len__(self) -> int:
        return len(self.properties)

    @property
    def keys(self) -> list[str]:
        return [p.canonical_key for p in self.properties]


@dataclass
class WeightTable:
    """Per-property weights keyed by canonical key."""

    entries: dict[str, float]
    default_policy: float = 1.0

    def __post_init__(self):
        for key, w in self.entries.items():
            if w < 0 or not math.isfinite(w):
                raise ValueError(f"weight for {key!r} must be finite and nonnegative")
        if self.default_policy < 0:
            raise ValueError("default weight must be nonnegative")

    def weight(self, key: str) -> float:
        return self.entries.get(key, self.default_policy)

    @classmethod
    def uniform(cls, value: float = 1.0) -> "WeightTable":
        return cls({}, value)


@dataclass(frozen=True)
class TrainingSet:
    """Labelled examples ``(graph, class)``."""

    examples: tuple[tuple[Graph, str], ...]

    def __init__(self, examples: Iterable[tuple[Graph, str]]):
        object.__setattr__(self, "examples", tuple((g, str(y)) for g, y in examples))

    def __len__(self) -> int:
        return len(self.examples)

    @property
    def graphs(self) -> list[Graph]:
        return [g for g, _ in self.examples]

    @property
    def labels(self) -> list[str]:
        return [y for _, y in self.examples]

    @property
    def classes(self) -> list[str]:
        return sorted(set(self.labels))


# -- remainder and disintegration -------------------------------------------------


def remainder(
    g_u: Graph, g_d: Graph, op: OperatorSpec, seed: int = 0,
    spec: RelationSpec | None = None, rng: random.Random | None = None,
) -> Graph:
    """Most general graph that unifies with `g_u` back into `g_d`.

    Keeps generalizing `g_d` at random among the upward refinements that do
    not subsume `g_u` and do not subsume any generalization of `g_d` that
    `g_u` already subsumes; returns the graph where no such step remains.
    """
    up = _up(op)
    spec = _resolve(up, spec)
    rng = rng if rng is not None else random.Random(seed)
    if subsumes(g_u, g_d, spec) is None:
        raise PreconditionError("g_u must subsume g_d")
    anchors = [g for g in refined_graphs(g_d, up) if subsumes(g_u, g, spec) is not None]
    current = g_d
    while True:
        options = [
            g
            for g in refined_graphs(current, up)
            if subsumes(g, g_u, spec) is None and not any(subsumes(g, a, spec) is not None for a in anchors)
        ]
        if not options:
            return current
        current = rng.choice(options)


def disintegrate(
    g: Graph, op: OperatorSpec, seed: int = 0, spec: RelationSpec | None = None,
) -> PropertySet:
    """Split `g` into one property per step of a random path up to the empty graph.

    The walk runs on a canonically relabelled copy, so isomorphic inputs with
    the same seed give identical property lists.
    """
    up = _up(op)
    spec = _resolve(up, spec)
    if not g.connected:
        raise PreconditionError("graph must be connected or empty")
    rng = random.Random(seed)
    start = canonical_relabel(g)
    current = start
    props: list[Property] = []
    steps: list[RuleApplication] = []
    while not current.is_empty:
        app = rng.choice(refine(current, up))
        props.append(Property.of(remainder(app.result, current, up, spec=spec, rng=rng)))
        steps.append(app)
        current = app.result
    return PropertySet(tuple(props), g, RefinementPath(start, tuple(steps)))


def reintegrate(
    properties: Sequence[Property | Graph], spec: RelationSpec, op: OperatorSpec | None = None,
    budget: Budget | int | None = None, stepwise: bool = True,
) -> list[Graph]:
    """Candidates obtained by unifying the properties back into one graph.

    Properties are taken in path order (source first) and folded from the
    end nearest the empty graph, mirroring how each remainder restores one
    generalization step. Each round unifies every current candidate with the
    next property, so every returned graph is subsumed by all properties.
    With `stepwise`, a new candidate is kept only when the candidate it came
    from is one of its one-step upward refinements, as on a disintegration
    path.
    """
    graphs = [p.graph if isinstance(p, Property) else p for p in properties][::-1]
    if not graphs:
        return [Graph({}, {})]
    up = _up(op) if op is not None else _default_operator(spec, "up", graphs)
    budget = Budget.coerce(budget)
    current = {canonical_key(graphs[0]): graphs[0]}
    for folded, nxt in enumerate(graphs[1:], start=2):
        merged: dict[str, Graph] = {}
        for key in sorted(current):
            for res in unify(current[key], nxt, spec, op=up, budget=budget):
                h = res.graph
                # every upward step drops at most one vertex and one edge, so
                # the graph `folded` steps from the empty end is no larger
                if h.n_vertices > folded or h.n_edges > folded:
                    continue
                hk = canonical_key(h)
                if hk in merged:
                    continue
                if stepwise and key not in {canonical_key(x) for x in refined_graphs(h, up)}:
                    continue
                merged[hk] = h
        current = merged
    return [current[k] for k in sorted(current)]


# -- similarity measures --------------------------------------------------------------


def sim_au(g1: Graph, g2: Graph, op: OperatorSpec, spec: RelationSpec | None = None) -> float:
    """Anti-unifier information over total information, as path lengths."""
    down = _down(op)
    spec = _resolve(down, spec)
    if g1.is_empty and g2.is_empty:
        return 1.0
    au = antiunify(g1, g2, spec, op=down).graph
    shared = path_length_from_top(au, down)
    d1 = path_length_between(au, g1, down, spec)
    d2 = path_length_between(au, g2, down, spec)
    total = shared + d1 + d2
    return shared / total if total else 1.0


_PropertyCache = dict


def _property_keys(
    g: Graph, up: OperatorSpec, spec: RelationSpec, seed: int, cache: _PropertyCache | None
) -> dict[str, Property]:
    key = (canonical_key(g), seed)
    if cache is not None and key in cache:
        return cache[key]
    props = {p.canonical_key: p for p in disintegrate(g, up, seed, spec).properties}
    if cache is not None:
        cache[key] = props
    return props


def _shared_properties(g1, g2, op, spec, seed, cache):
    up = _up(op)
    spec = _resolve(up, spec)
    pool = dict(_property_keys(g1, up, spec, seed, cache))
    for k, p in _property_keys(g2, up, spec, seed, cache).items():
        pool.setdefault(k, p)
    shared = {
        k for k, p in pool.items()
        if subsumes(p.graph, g1, spec) is not None and subsumes(p.graph, g2, spec) is not None
    }
    return pool, shared


def sim_props(
    g1: Graph, g2: Graph, op: OperatorSpec, spec: RelationSpec | None = None, seed: int = 0,
    cache: _PropertyCache | None = None,
) -> float:
    """Fraction of the pooled properties of both graphs that subsume both."""
    pool, shared = _shared_properties(g1, g2, op, spec, seed, cache)
    if not pool:
        return 1.0
    return len(shared) / len(pool)


def sim_wprops(
    g1: Graph, g2: Graph, weights: WeightTable, op: OperatorSpec, spec: RelationSpec | None = None,
    seed: int = 0, cache: _PropertyCache | None = None,
) -> float:
    """Weighted share of pooled properties; all-zero weights fall back to `sim_props`."""
    pool, shared = _shared_properties(g1, g2, op, spec, seed, cache)
    if not pool:
        return 1.0
    total = sum(weights.weight(k) for k in pool)
    if total <= 0:
        return len(shared) / len(pool)
    return sum(weights.weight(k) for k in shared) / total


# -- property weighting ---------------------------------------------------------


def entropy(labels: Sequence[str]) -> float:
    """Shannon entropy in bits of a class-label sequence; 0 when empty."""
    n = len(labels)
    if n == 0:
        return 0.0
    h = 0.0
    for count in Counter(labels).values():
        p = count / n
        h -= p * math.log2(p)
    return h


def split_entropy(inside: Sequence[str], outside: Sequence[str]) -> float:
    """Size-weighted entropy of a two-way split of a training set."""
    n = len(inside) + len(outside)
    return (entropy(inside) * len(inside) + entropy(outside) * len(outside)) / n


def property_weights(
    train: TrainingSet, op: OperatorSpec, spec: RelationSpec | None = None, seed: int = 0,
    mode: str = "printed", default_policy: float = 1.0, cache: _PropertyCache | None = None,
) -> WeightTable:
    """Weight every property found by disintegrating the training graphs.

    ``mode="printed"`` yields the size-weighted entropy left after splitting
    the training set on whether the property subsumes each graph.
    ``mode="gain"`` yields the information gain, i.e. the class entropy minus
    that value, which rewards properties that separate the classes.
    """
    if mode not in ("printed", "gain"):
        raise ValueError("mode must be 'printed' or 'gain'")
    if len(train) == 0:
        raise DatasetError("cannot compute weights from an empty training set")
    up = _up(op)
    spec = _resolve(up, spec)
    pool: dict[str, Property] = {}
    for g in train.graphs:
        for k, p in _property_keys(g, up, spec, seed, cache).items():
            pool.setdefault(k, p)
    base = entropy(train.labels)
    entries = {}
    for key in sorted(pool):
        prop = pool[key].graph
        inside, outside = [], []
        for g, y in train.examples:
            (inside if subsumes(prop, g, spec) is not None else outside).append(y)
        value = split_entropy(inside, outside)
        if mode == "gain":
            value = max(0.0, base - value)
        entries[key] = value
    return WeightTable(entries, default_policy)


# -- nearest neighbours ---------------------------------------------------------


@dataclass(frozen=True)
class KnnReport:
    accuracy: float
    per_class: dict[str, float]
    predictions: tuple[str, ...]
    truth: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class": dict(sorted(self.per_class.items())),
            "predictions": list(self.predictions),
            "truth": list(self.truth),
        }


def knn_evaluate(
    train: TrainingSet, test: TrainingSet, k: int, measure: str | Callable[[Graph, Graph], float],
    op: OperatorSpec | None = None, spec: RelationSpec | None = None, seed: int = 0,
    weights: WeightTable | None = None,
) -> KnnReport:
    """Classify `test` by majority vote among the `k` most similar training graphs.

    Neighbours are ranked by similarity, then by canonical key and position;
    a tied vote goes to the class of the best-ranked neighbour among the tied
    classes. `measure` is ``"au"``, ``"props"``, ``"wprops"`` or a callable.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(train) == 0:
        raise DatasetError("training set is empty")
    if spec is None:
        spec = RelationSpec("plain", True)
    graphs = train.graphs + test.graphs
    if op is None:
        op = _default_operator(spec, "up", graphs)
    cache: _PropertyCache = {}
    if callable(measure):
        sim = measure
    elif measure == "au":
        def sim(a, b):
            return sim_au(a, b, op, spec)
    elif measure == "props":
        def sim(a, b):
            return sim_props(a, b, op, spec, seed, cache)
    elif measure == "wprops":
        table = weights if weights is not None else property_weights(train, op, spec, seed, cache=cache)

        def sim(a, b):
            return sim_wprops(a, b, table, op, spec, seed, cache)
    else:
        raise ValueError(f"unknown measure {measure!r}")
    train_keys = [canonical_key(g) for g in train.graphs]
    predictions = []
    for g, _ in test.examples:
        scored = sorted(
            ((-sim(g, h), train_keys[i], i) for i, h in enumerate(train.graphs)),
        )
        top = scored[:k]
        votes = Counter(train.labels[i] for _, _, i in top)
        best = max(votes.values())
        tied = {c for c, n in votes.items() if n == best}
        winner = next(train.labels[i] for _, _, i in top if train.labels[i] in tied)
        predictions.append(winner)
    truth = test.labels
    correct = [p == t for p, t in zip(predictions, truth)]
    per_class = {}
    for c in sorted(set(truth)):
        idx = [i for i, t in enumerate(truth) if t == c]
        per_class[c] = sum(correct[i] for i in idx) / len(idx)
    accuracy = sum(correct) / len(correct) if correct else 1.0
    return KnnReport(accuracy, per_class, tuple(predictions), tuple(truth))
