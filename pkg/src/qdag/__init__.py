"""Compile belief networks to query DAGs, reduce them, and evaluate them incrementally."""
from .circuit import ADD, MUL, Esn, Node, Num, Op, QDag, parse, serialize, topological_order, validate
from .compiler import compile_network, elimination_order
from .errors import (EquivalenceError, EvidenceError, NetworkError, ParseError, QDagError,
                     StructureError, ZeroProbabilityEvidence)
from .evaluator import Counters, ValueState, initialize, normalize
from .network import BeliefNetwork, format_network, parse_network, random_network
from .reducer import (ReductionReport, eliminate_identity_one, eliminate_identity_zero,
                      numeric_reduction, reduce, sweep_dead_nodes, zero_compression)

__all__ = [
    "ADD", "MUL", "Esn", "Node", "Num", "Op", "QDag", "parse", "serialize",
    "topological_order", "validate", "compile_network", "elimination_order",
    "EquivalenceError", "EvidenceError", "NetworkError", "ParseError", "QDagError",
    "StructureError", "ZeroProbabilityEvidence", "Counters", "ValueState", "initialize",
    "normalize", "BeliefNetwork", "format_network", "parse_network", "random_network",
    "ReductionReport", "eliminate_identity_one", "eliminate_identity_zero",
    "numeric_reduction", "reduce", "sweep_dead_nodes", "zero_compression",
]
__version__ = "0.1.0"
