"""Directed labeled graphs: subsumption, refinement operators, lattice operations and similarity."""

from __future__ import annotations

from .canonical import canonical_key, canonical_order, canonical_relabel
from .errors import (
    Budget,
    BudgetExceeded,
    DatasetError,
    DLGraphError,
    DocumentError,
    GraphError,
    PreconditionError,
    RuleError,
    TaxonomyError,
    WitnessError,
)
from .graph import EMPTY_GRAPH, CoverDelta, Graph, LabelTaxonomy, bridges, is_connected, make_graph
from .lattice import (
    LatticeResult,
    RefinementPath,
    antiunify,
    closed_form_length,
    completeness_step_bound,
    path_length_between,
    path_length_from_top,
    refinement_path_between,
    search_path_length,
    unify,
)
from .refinement import RULES, OperatorSpec, RuleApplication, apply_rule, refine, refined_graphs, rule_bound
from .similarity import (
    KnnReport,
    Property,
    PropertySet,
    TrainingSet,
    WeightTable,
    disintegrate,
    knn_evaluate,
    property_weights,
    reintegrate,
    remainder,
    sim_au,
    sim_props,
    sim_wprops,
)
from .subsumption import (
    RELATIONS,
    RelationSpec,
    Witness,
    check_witness,
    cover_delta,
    enumerate_witnesses,
    equivalent,
    is_valid_witness,
    iter_witnesses,
    subsumes,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
