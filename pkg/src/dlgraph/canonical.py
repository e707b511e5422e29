"""Canonical vertex ordering and serialization, invariant under renaming.

Colour refinement splits vertices by label and labelled neighbourhood; any
cells that stay ambiguous are resolved by individualizing each member in turn
and keeping the lexicographically smallest encoding. The search is exhaustive,
so isomorphic graphs always get the same key.
"""

from __future__ import annotations

import json

from .graph import Graph

_Encoding = tuple


def _refine(g: Graph, colors: dict[str, int]) -> dict[str, int]:
    """Iterate neighbourhood-signature refinement to a stable colouring."""
    n_cells = len(set(colors.values()))
    while True:
        sigs = {}
        for v in colors:
            out = tuple(sorted((colors[w], lab) for w, lab in g.successors(v).items()))
            inc = tuple(sorted((colors[u], lab) for u, lab in g.predecessors(v).items()))
            sigs[v] = (colors[v], out, inc)
        ranking = {s: i for i, s in enumerate(sorted(set(sigs.values())))}
        new = {v: ranking[sigs[v]] for v in colors}
        if len(ranking) == n_cells:
            return new
        n_cells = len(ranking)
        colors = new


def _encode(g: Graph, order: list[str]) -> _Encoding:
    pos = {v: i for i, v in enumerate(order)}
    vlabels = tuple(g.vertex_labels[v] for v in order)
    edges = tuple(sorted((pos[u], pos[v], lab) for (u, v), lab in g.edge_labels.items()))
    return (vlabels, edges)


def _search(g: Graph, colors: dict[str, int], best: list) -> None:
    colors = _refine(g, colors)
    n = len(colors)
    if len(set(colors.values())) == n:
        order = sorted(colors, key=colors.__getitem__)
        enc = _encode(g, order)
        if best[0] is None or enc < best[0]:
            best[0] = enc
            best[1] = order
        return
    # Smallest non-singleton cell, first by size then by colour.
    cells: dict[int, list[str]] = {}
    for v, c in colors.items():
        cells.setdefault(c, []).append(v)
    target = min((c for c, vs in cells.items() if len(vs) > 1), key=lambda c: (len(cells[c]), c))
    for v in sorted(cells[target]):
        # Doubling leaves room to split the cell while keeping other ranks.
        branch = {w: 2 * c for w, c in colors.items()}
        branch[v] = 2 * target - 1
        _search(g, branch, best)


def _initial_colors(g: Graph) -> dict[str, int]:
    keys = {}
    for v, lab in g.vertex_labels.items():
        loop = g.successors(v).get(v)
        keys[v] = (lab, loop is not None, loop or "", len(g.successors(v)), len(g.predecessors(v)))
    ranking = {k: i for i, k in enumerate(sorted(set(keys.values())))}
    return {v: ranking[k] for v, k in keys.items()}


def canonical_order(g: Graph) -> list[str]:
    """Vertex ids of `g` in canonical order."""
    if g.is_empty:
        return []
    best: list = [None, None]
    _search(g, _initial_colors(g), best)
    return best[1]


def canonical_relabel(g: Graph) -> Graph:
    """Isomorphic copy of `g` with vertex ids ``"0" .. "n-1"`` in canonical order."""
    order = canonical_order(g)
    return g.renamed({v: str(i) for i, v in enumerate(order)})


def canonical_key(g: Graph) -> str:
    """Compact single-line JSON text identical for all isomorphic graphs."""
    if g._ckey is not None:
        return g._ckey
    order = canonical_order(g)
    pos = {v: i for i, v in enumerate(order)}
    doc = {
        "vertices": [{"id": str(i), "label": g.vertex_labels[v]} for i, v in enumerate(order)],
        "edges": [
            {"from": str(i), "to": str(j), "label": lab}
            for i, j, lab in sorted((pos[u], pos[v], lab) for (u, v), lab in g.edge_labels.items())
        ],
    }
    g._ckey = json.dumps(doc, separators=(",", ":"), sort_keys=True)
    return g._ckey
