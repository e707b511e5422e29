"""Downward and upward refinement operators as sets of rewrite rules.

Eight operators are available, selected by direction, labelling and whether
edges may be split or shortened:

============  =========  =========  ================================
operator      direction  labels     rules
============  =========  =========  ================================
``rho_f``     down       flat       R0 R1 R2 R3
``rho_tf``    down       flat       R0 R1 R2 R3 R4
``gamma_f``   up         flat       UR0 UR1
``gamma_tf``  up         flat       UR0 UR1 UR2
``rho_po``    down       ordered    R0PO .. R5PO
``rho_tpo``   down       ordered    R0PO .. R6PO
``gamma_po``  up         ordered    UR0PO .. UR3PO
``gamma_tpo`` up         ordered    UR0PO .. UR4PO
============  =========  =========  ================================

Each rule application is reported with the exact variable bindings it used,
so a result can be replayed through `apply_rule`.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field

from .canonical import canonical_key
from .errors import GraphError, RuleError, TaxonomyError
from .graph import Graph, LabelTaxonomy, bridges
from .subsumption import RelationSpec

_NAMES = {
    ("down", "flat", False): "rho_f",
    ("down", "flat", True): "rho_tf",
    ("up", "flat", False): "gamma_f",
    ("up", "flat", True): "gamma_tf",
    ("down", "ordered", False): "rho_po",
    ("down", "ordered", True): "rho_tpo",
    ("up", "ordered", False): "gamma_po",
    ("up", "ordered", True): "gamma_tpo",
}

RULES = {
    "rho_f": ("R0", "R1", "R2", "R3"),
    "rho_tf": ("R0", "R1", "R2", "R3", "R4"),
    "gamma_f": ("UR0", "UR1"),
    "gamma_tf": ("UR0", "UR1", "UR2"),
    "rho_po": ("R0PO", "R1PO", "R2PO", "R3PO", "R4PO", "R5PO"),
    "rho_tpo": ("R0PO", "R1PO", "R2PO", "R3PO", "R4PO", "R5PO", "R6PO"),
    "gamma_po": ("UR0PO", "UR1PO", "UR2PO", "UR3PO"),
    "gamma_tpo": ("UR0PO", "UR1PO", "UR2PO", "UR3PO", "UR4PO"),
}

# Rules that add a vertex; skipped once a caller-imposed size bound is hit.
_GROWING = frozenset({"R0", "R1", "R2", "R4", "R0PO", "R1PO", "R2PO", "R6PO"})
_ORDERED_RULES = frozenset(r for name in ("rho_tpo", "gamma_tpo") for r in RULES[name])

_RELATION = {(False, False): "plain", (False, True): "trans", (True, False): "po", (True, True): "trans_po"}


@dataclass(frozen=True)
class OperatorSpec:
    """Selects one of the eight refinement operators.

    Flat operators draw labels from `alphabet`; ordered operators from
    `taxonomy`.
    """

    direction: str
    labeling: str
    transitive: bool = False
    taxonomy: LabelTaxonomy | None = None
    alphabet: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.direction not in ("down", "up"):
            raise ValueError(f"direction must be 'down' or 'up', not {self.direction!r}")
        if self.labeling not in ("flat", "ordered"):
            raise ValueError(f"labeling must be 'flat' or 'ordered', not {self.labeling!r}")
        if self.labeling == "ordered":
            if self.taxonomy is None:
                raise ValueError("ordered operators need a taxonomy")
            if self.alphabet is not None:
                raise ValueError("ordered operators take their labels from the taxonomy")
        else:
            if self.taxonomy is not None:
                raise ValueError("flat operators do not take a taxonomy")
            if not self.alphabet:
                raise ValueError("flat operators need a nonempty alphabet")
            object.__setattr__(self, "alphabet", tuple(sorted(set(self.alphabet))))

    @classmethod
    def flat(cls, alphabet, direction: str = "down", transitive: bool = False) -> "OperatorSpec":
        return cls(direction, "flat", transitive, None, tuple(alphabet))

    @classmethod
    def ordered(cls, taxonomy: LabelTaxonomy, direction: str = "down", transitive: bool = False) -> "OperatorSpec":
        return cls(direction, "ordered", transitive, taxonomy, None)

    @classmethod
    def for_relation(cls, spec: RelationSpec, direction: str, alphabet=None) -> "OperatorSpec":
        """The operator whose rules match the relation in `spec`."""
        if spec.ordered:
            return cls.ordered(spec.taxonomy, direction, spec.transitive)
        if alphabet is None:
            raise ValueError("a flat relation needs an alphabet to build its operator")
        return cls.flat(alphabet, direction, spec.transitive)

    @property
    def name(self) -> str:
        return _NAMES[(self.direction, self.labeling, self.transitive)]

    @property
    def rules(self) -> tuple[str, ...]:
        return RULES[self.name]

    @property
    def downward(self) -> bool:
        return self.direction == "down"

    @property
    def ordered_labels(self) -> bool:
        return self.labeling == "ordered"

    @property
    def labels(self) -> tuple[str, ...]:
        if self.taxonomy is not None:
            return tuple(sorted(self.taxonomy.labels))
        return self.alphabet

    @property
    def relation(self) -> str:
        return _RELATION[(self.ordered_labels, self.transitive)]

    def relation_spec(self, object_identity: bool = True) -> RelationSpec:
        return RelationSpec(self.relation, object_identity, self.taxonomy)

    def with_direction(self, direction: str) -> "OperatorSpec":
        return dataclasses.replace(self, direction=direction)

    def dual(self) -> "OperatorSpec":
        return self.with_direction("up" if self.downward else "down")


@dataclass(frozen=True)
class RuleApplication:
    """One rewrite step: the rule, its variable bindings and the result."""

    rule: str
    bindings: Mapping[str, object] = field(repr=True)
    result: Graph = field(repr=False)


def fresh_vertex(g: Graph) -> str:
    """Smallest unused id of the form ``_n<i>``."""
    i = 0
    while g.has_vertex(f"_n{i}"):
        i += 1
    return f"_n{i}"


# -- rule conditions ----------------------------------------------------------


class _Ctx:
    """Label information a rule needs, derived from an operator (if any)."""

    def __init__(self, op: OperatorSpec | None):
        self.op = op
        self.taxonomy = op.taxonomy if op is not None else None
        self.alphabet = set(op.alphabet) if op is not None and op.alphabet else None

    @property
    def top(self) -> str:
        return self.taxonomy.top

    def in_alphabet(self, a) -> bool:
        return self.alphabet is None or a in self.alphabet


def _require(cond: bool, rule: str, clause: str) -> None:
    if not cond:
        raise RuleError(rule, clause)


def _edge(value, rule: str, name: str):
    _require(isinstance(value, tuple) and len(value) == 2, rule, f"{name} must be a (source, target) pair")
    return value


def _incident(g: Graph, v: str) -> list:
    return g.incident_edges(v)


def _check(g: Graph, rule: str, b: Mapping[str, object], ctx: _Ctx) -> None:
    """Validate `b` against the bracketed conditions of `rule`."""
    if rule in _ORDERED_RULES:
        _require(ctx.taxonomy is not None, rule, "rule needs an ordered-label operator")
    req = lambda cond, clause: _require(cond, rule, clause)  # noqa: E731
    V, E = g.vertex_labels, g.edge_labels
    if rule in ("R0", "R0PO"):
        req(b.get("v*") not in V, "v* not in V")
        req(not V, "V is empty")
        req(not E, "E is empty")
        if rule == "R0":
            req(ctx.in_alphabet(b.get("a")), "a in L")
    elif rule in ("R1", "R2", "R1PO", "R2PO"):
        req(b.get("v*") not in V, "v* not in V")
        req(b.get("v1") in V, "v1 in V")
        if rule in ("R1", "R2"):
            req(ctx.in_alphabet(b.get("a")), "a in L")
            req(ctx.in_alphabet(b.get("b")), "b in L")
    elif rule in ("R3", "R3PO"):
        req(b.get("v1") in V, "v1 in V")
        req(b.get("v2") in V, "v2 in V")
        req((b.get("v1"), b.get("v2")) not in E, "(v1, v2) not in E")
        if rule == "R3":
            req(ctx.in_alphabet(b.get("a")), "a in L")
    elif rule in ("R4", "R6PO"):
        req(b.get("v*") not in V, "v* not in V")
        e = (b.get("v1"), b.get("v2"))
        req(e in E, "(v1, v2) in E")
        if rule == "R4":
            req(ctx.in_alphabet(b.get("a")), "a in L")
        if "b" in b:
            req(b["b"] == E[e], "b = l((v1, v2))")
    elif rule in ("R4PO", "UR0PO"):
        v1 = b.get("v1")
        req(v1 in V, "v1 in V")
        _check_cover_step(rule, ctx, V[v1], b, upward=rule == "UR0PO")
    elif rule in ("R5PO", "UR1PO"):
        e = _edge(b.get("e"), rule, "e")
        req(e in E, "e in E")
        _check_cover_step(rule, ctx, E[e], b, upward=rule == "UR1PO")
    elif rule in ("UR0", "UR2PO"):
        e = _edge(b.get("e"), rule, "e")
        req(e in E, "e in E")
        if rule == "UR2PO":
            req(E[e] == ctx.top, "l(e) = top")
        req(e not in bridges(g), "e not in bridges(g)")
    elif rule in ("UR1", "UR3PO"):
        v = b.get("v")
        req(v in V, "v in V")
        if rule == "UR3PO":
            req(V[v] == ctx.top, "l(v) = top")
        ev = _incident(g, v)
        req(len(ev) <= 1, "|E_v| <= 1")
        if rule == "UR3PO":
            req(all(E[e] == ctx.top for e in ev), "l(e) = top for all e in E_v")
    elif rule in ("UR2", "UR4PO"):
        e1 = _edge(b.get("e1"), rule, "e1")
        e2 = _edge(b.get("e2"), rule, "e2")
        req(e1 in E, "e1 = (v1, v2) in E")
        req(e2 in E, "e2 = (v2, v3) in E")
        req(e1[1] == e2[0], "e1 ends where e2 starts")
        # A lone self-loop would leave the new edge dangling.
        req(e1 != e2, "e1 != e2")
        v2 = e1[1]
        if rule == "UR4PO":
            req(V[v2] == ctx.top, "l(v2) = top")
        req(E[e1] == E[e2], "l(e1) = l(e2)")
        req(all(u == e1[0] for u in g.predecessors(v2)), "no edge other than e1 enters v2")
        req(all(w == e2[1] for w in g.successors(v2)), "no edge other than e2 leaves v2")
    else:
        raise RuleError(rule, "unknown rule")


def _check_cover_step(rule: str, ctx: _Ctx, a: str, b: Mapping[str, object], upward: bool) -> None:
    target = b.get("b")
    tax = ctx.taxonomy
    _require(target in tax, rule, "b in L")
    if "a" in b:
        _require(b["a"] == a, rule, "a = current label")
    if upward:
        _require(target in tax.parents(a), rule, "b < a with no label strictly in between")
    else:
        _require(target in tax.children(a), rule, "a < b with no label strictly in between")


# -- rule conclusions ---------------------------------------------------------


def _build(g: Graph, rule: str, b: Mapping[str, object], ctx: _Ctx) -> Graph:
    vl = dict(g.vertex_labels)
    el = dict(g.edge_labels)
    if rule in ("R0", "R0PO"):
        vl[b["v*"]] = b["a"] if rule == "R0" else ctx.top
    elif rule in ("R1", "R2", "R1PO", "R2PO"):
        vs, v1 = b["v*"], b["v1"]
        if rule in ("R1", "R2"):
            vlab, elab = b["a"], b["b"]
        else:
            vlab = elab = ctx.top
        vl[vs] = vlab
        # R1 / R2PO add (v*, v1); R2 / R1PO add (v1, v*), as the rules are stated.
        edge = (vs, v1) if rule in ("R1", "R2PO") else (v1, vs)
        el[edge] = elab
    elif rule in ("R3", "R3PO"):
        el[(b["v1"], b["v2"])] = b["a"] if rule == "R3" else ctx.top
    elif rule in ("R4", "R6PO"):
        vs, v1, v2 = b["v*"], b["v1"], b["v2"]
        lab = el.pop((v1, v2))
        vl[vs] = b["a"] if rule == "R4" else ctx.top
        el[(v1, vs)] = lab
        el[(vs, v2)] = lab
    elif rule in ("R4PO", "UR0PO"):
        vl[b["v1"]] = b["b"]
    elif rule in ("R5PO", "UR1PO"):
        el[b["e"]] = b["b"]
    elif rule in ("UR0", "UR2PO"):
        del el[b["e"]]
    elif rule in ("UR1", "UR3PO"):
        v = b["v"]
        del vl[v]
        el = {e: lab for e, lab in el.items() if v not in e}
    elif rule in ("UR2", "UR4PO"):
        e1, e2 = b["e1"], b["e2"]
        lab = el[e1]
        del el[e1]
        del el[e2]
        del vl[e1[1]]
        el[(e1[0], e2[1])] = lab
    else:
        raise RuleError(rule, "unknown rule")
    return Graph._trusted(vl, el)


# -- binding enumeration ------------------------------------------------------


def _enumerate(g: Graph, rule: str, ctx: _Ctx) -> Iterator[dict]:
    V = g.sorted_vertices()
    E = g.sorted_edges()
    labels = ctx.op.labels if ctx.op is not None else ()
    tax = ctx.taxonomy
    if rule in ("R0", "R0PO"):
        if not V:
            if rule == "R0":
                for a in labels:
                    yield {"v*": fresh_vertex(g), "a": a}
            else:
                yield {"v*": fresh_vertex(g)}
    elif rule in ("R1", "R2"):
        vs = fresh_vertex(g)
        for v1 in V:
            for a in labels:
                for lab in labels:
                    yield {"v*": vs, "v1": v1, "a": a, "b": lab}
    elif rule in ("R1PO", "R2PO"):
        vs = fresh_vertex(g)
        for v1 in V:
            yield {"v*": vs, "v1": v1}
    elif rule in ("R3", "R3PO"):
        for v1 in V:
            for v2 in V:
                if g.has_edge(v1, v2):
                    continue
                if rule == "R3":
                    for a in labels:
                        yield {"v1": v1, "v2": v2, "a": a}
                else:
                    yield {"v1": v1, "v2": v2}
    elif rule == "R4":
        vs = fresh_vertex(g)
        for v1, v2 in E:
            for a in labels:
                yield {"v*": vs, "v1": v1, "v2": v2, "a": a, "b": g.edge_labels[(v1, v2)]}
    elif rule == "R6PO":
        vs = fresh_vertex(g)
        for v1, v2 in E:
            yield {"v*": vs, "v1": v1, "v2": v2, "b": g.edge_labels[(v1, v2)]}
    elif rule in ("R4PO", "UR0PO"):
        for v1 in V:
            a = g.vertex_labels[v1]
            nxt = tax.parents(a) if rule == "UR0PO" else tax.children(a)
            for lab in nxt:
                yield {"v1": v1, "a": a, "b": lab}
    elif rule in ("R5PO", "UR1PO"):
        for e in E:
            a = g.edge_labels[e]
            nxt = tax.parents(a) if rule == "UR1PO" else tax.children(a)
            for lab in nxt:
                yield {"e": e, "a": a, "b": lab}
    elif rule in ("UR0", "UR2PO"):
        if E:
            br = bridges(g)
            for e in E:
                if e in br:
                    continue
                if rule == "UR2PO" and g.edge_labels[e] != tax.top:
                    continue
                yield {"e": e}
    elif rule in ("UR1", "UR3PO"):
        for v in V:
            if rule == "UR3PO" and g.vertex_labels[v] != tax.top:
                continue
            ev = g.incident_edges(v)
            if len(ev) > 1:
                continue
            if rule == "UR3PO" and any(g.edge_labels[e] != tax.top for e in ev):
                continue
            yield {"v": v}
    elif rule in ("UR2", "UR4PO"):
        for v2 in V:
            if rule == "UR4PO" and g.vertex_labels[v2] != tax.top:
                continue
            preds = g.predecessors(v2)
            succs = g.successors(v2)
            if len(preds) != 1 or len(succs) != 1:
                continue
            (v1, l1), = preds.items()
            (v3, l2), = succs.items()
            if v1 == v2 or v3 == v2 or l1 != l2:
                continue
            yield {"e1": (v1, v2), "e2": (v2, v3)}
    else:
        raise RuleError(rule, "unknown rule")


def _check_graph(g: Graph, op: OperatorSpec) -> None:
    if not g.connected:
        raise GraphError("refinement needs a connected or empty graph")
    allowed = set(op.labels)
    bad = sorted(g.label_set - allowed)
    if bad:
        where = "taxonomy" if op.ordered_labels else "alphabet"
        raise TaxonomyError(f"labels outside the operator's {where}: {', '.join(bad)}")


def refine(g: Graph, op: OperatorSpec, max_vertices: int | None = None) -> list[RuleApplication]:
    """Every single-rule refinement of `g` under `op`, in deterministic order.

    `max_vertices` optionally suppresses rules that would grow the graph past
    that many vertices; it is a search bound, not part of the operator.
    """
    _check_graph(g, op)
    ctx = _Ctx(op)
    out = []
    for rule in op.rules:
        if max_vertices is not None and rule in _GROWING and g.n_vertices >= max_vertices:
            continue
        for b in _enumerate(g, rule, ctx):
            out.append(RuleApplication(rule, b, _build(g, rule, b, ctx)))
    return out


def refined_graphs(g: Graph, op: OperatorSpec, max_vertices: int | None = None) -> list[Graph]:
    """Refinements of `g` with isomorphic duplicates removed, sorted by canonical key."""
    seen: dict[str, Graph] = {}
    for app in refine(g, op, max_vertices):
        seen.setdefault(canonical_key(app.result), app.result)
    return [seen[k] for k in sorted(seen)]


def count_refinements(g: Graph, op: OperatorSpec) -> int:
    return len(refine(g, op))


def apply_rule(g: Graph, rule: str, bindings: Mapping[str, object], op: OperatorSpec | None = None) -> Graph:
    """Apply one rule after checking every applicability condition.

    `op` supplies the label set; without it flat rules accept any label and
    ordered rules are rejected. Raises `RuleError` naming the failed clause.
    """
    ctx = _Ctx(op)
    if op is not None and rule not in op.rules:
        raise RuleError(rule, f"rule is not part of operator {op.name}")
    _check(g, rule, bindings, ctx)
    result = _build(g, rule, bindings, ctx)
    if not result.connected:
        raise RuleError(rule, "result is not connected")
    return result


def rule_bound(rule: str, g: Graph, op: OperatorSpec) -> int:
    """Upper bound on the number of applications of `rule` to `g`."""
    n, m, k = g.n_vertices, g.n_edges, len(op.labels)
    bounds = {
        "R0": k,
        "R1": n * k * k,
        "R2": n * k * k,
        "R3": n * n * k,
        "R4": m * k,
        "UR0": m,
        "UR1": n,
        "UR2": m * m,
        "R0PO": 1,
        "R1PO": n,
        "R2PO": n,
        "R3PO": n * n,
        "R4PO": n * k,
        "R5PO": m * k,
        "R6PO": m,
        "UR0PO": n * k,
        "UR1PO": m * k,
        "UR2PO": m,
        "UR3PO": n,
        "UR4PO": m * m,
    }
    return bounds[rule]
