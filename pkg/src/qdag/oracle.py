"""Brute-force ground truth.

Exact probabilities by enumerating the full joint distribution, and
exhaustive (or sampled) equivalence checking between Q-DAGs by evaluating
both circuits on every 0/1 assignment to their evidence-specific nodes.
Nothing here shares code with the compiler or the incremental evaluator.
"""
from __future__ import annotations

import itertools
import math
import weakref
from dataclasses import dataclass, field

import numpy as np

from .circuit import Op, QDag, topological_order
from .errors import EquivalenceError
from .network import BeliefNetwork

MAX_JOINT_LOG2 = 20
MAX_EXHAUSTIVE_ESNS = 12
REL_TOL = 1e-9
ABS_TOL = 1e-12

_joint_cache: "weakref.WeakKeyDictionary[BeliefNetwork, np.ndarray]" = weakref.WeakKeyDictionary()


def joint_prob(net: BeliefNetwork, assignment: dict[str, str]) -> float:
    """Chain rule: product of one CPT entry per variable."""
    missing = [v for v in net.variables if v not in assignment]
    if missing:
        raise ValueError(f"incomplete assignment: no state for {missing}")
    p = 1.0
    for v in net.variables:
        p *= net.prob(v, assignment[v], assignment)
    return p


def joint_table(net: BeliefNetwork) -> np.ndarray:
    """The full joint distribution as an array with one axis per variable."""
    if net in _joint_cache:
        return _joint_cache[net]
    names = list(net.variables)
    shape = tuple(len(net.variables[v]) for v in names)
    if sum(math.log2(k) for k in shape) > MAX_JOINT_LOG2:
        raise ValueError(f"joint state space of {net.name} exceeds 2**{MAX_JOINT_LOG2}")
    table = np.ones(shape)
    for v in names:
        scope = list(net.parents[v]) + [v]
        factor = np.empty(tuple(len(net.variables[u]) for u in scope))
        for cfg in net.parent_configurations(v):
            idx = tuple(net.variables[p].index(s) for p, s in zip(net.parents[v], cfg))
            factor[idx] = net.cpt[v][cfg]
        # move factor axes into network order, then broadcast
        axes = sorted(range(len(scope)), key=lambda i: names.index(scope[i]))
        factor = factor.transpose(axes)
        bshape = [1] * len(names)
        for u in scope:
            bshape[names.index(u)] = len(net.variables[u])
        table = table * factor.reshape(bshape)
    table.setflags(write=False)
    _joint_cache[net] = table
    return table


def marginal(net: BeliefNetwork, assignment: dict[str, str]) -> float:
    """Probability of a partial assignment, summing out everything else."""
    names = list(net.variables)
    index = tuple(
        net.variables[v].index(assignment[v]) if v in assignment else slice(None)
        for v in names
    )
    unknown = set(assignment) - set(names)
    if unknown:
        raise ValueError(f"unknown variables {sorted(unknown)}")
    return float(joint_table(net)[index].sum())


def evidence_assignments(domains: dict[str, list[str]]):
    """Every per-variable evidence pattern: each variable unknown (None) or observed."""
    names = list(domains)
    for combo in itertools.product(*([None, *domains[v]] for v in names)):
        yield dict(zip(names, combo))


def query_probability(net: BeliefNetwork, variable: str, state: str,
                      evidence: dict[str, str | None]) -> float:
    """Pr(variable=state, e) for evidence with ``None`` meaning unknown."""
    a = {v: s for v, s in evidence.items() if s is not None}
    if variable in a and a[variable] != state:
        return 0.0
    a[variable] = state
    return marginal(net, a)


def query_distribution(net: BeliefNetwork, variable: str,
                       evidence: dict[str, str | None]) -> dict[str, float]:
    """Pr(variable=s, e) for every state s, from one slice of the joint table."""
    names = list(net.variables)
    index = tuple(
        net.variables[v].index(evidence[v]) if evidence.get(v) is not None else slice(None)
        for v in names
    )
    sliced = joint_table(net)[index]
    kept = [v for v in names if evidence.get(v) is None]
    states = net.variables[variable]
    if variable not in kept:
        total = float(sliced.sum())
        return {s: (total if s == evidence[variable] else 0.0) for s in states}
    axis = kept.index(variable)
    other = tuple(i for i in range(len(kept)) if i != axis)
    dist = sliced.sum(axis=other) if other else sliced
    return {s: float(x) for s, x in zip(states, dist)}


# -- circuit evaluation ------------------------------------------------------

def evaluate(dag: QDag, esn_values: dict[int, int] | None = None) -> list[float]:
    """Plain bottom-up evaluation of every node for one ESN assignment."""
    esn_values = esn_values or {}
    value = [0.0] * len(dag.nodes)
    for i in topological_order(dag):
        node = dag.nodes[i]
        if node.op is Op.NUM:
            value[i] = node.label
        elif node.op is Op.ESN:
            value[i] = float(esn_values.get(i, 1))
        elif node.op is Op.ADD:
            value[i] = sum(value[p] for p in dag.parents[i])
        else:
            value[i] = math.prod(value[p] for p in dag.parents[i])
    return value


def evaluate_batch(dag: QDag, settings: dict[int, np.ndarray], width: int = 1,
                   nodes=None) -> dict[int, np.ndarray]:
    """Evaluate ``dag`` bottom-up for ``width`` ESN settings at once.

    ``settings`` maps ESN node id to a vector of 0/1 values (ESNs absent
    from it default to 1).  Returns vectors for ``nodes`` (default: the
    query nodes).
    """
    wanted = set(dag.query_nodes.values()) if nodes is None else set(nodes)
    remaining = [len(c) for c in dag.children]
    vals: dict[int, np.ndarray] = {}
    out = {}
    for i in topological_order(dag):
        node = dag.nodes[i]
        if node.op is Op.NUM:
            v = np.full(width, node.label)
        elif node.op is Op.ESN:
            v = np.asarray(settings.get(i, np.ones(width)), dtype=float)
        else:
            v = np.zeros(width) if node.op is Op.ADD else np.ones(width)
            for p in dag.parents[i]:
                v = v + vals[p] if node.op is Op.ADD else v * vals[p]
        vals[i] = v
        if i in wanted:
            out[i] = v
        for p in dag.parents[i]:
            remaining[p] -= 1
            if remaining[p] == 0:
                del vals[p]
    return out


@dataclass
class Verdict:
    equivalent: bool
    checked: int
    assignment: dict[tuple[str, str], int] | None = None
    values1: dict[tuple[str, str], float] = field(default_factory=dict)
    values2: dict[tuple[str, str], float] = field(default_factory=dict)

    def __bool__(self):
        return self.equivalent

    def __str__(self):
        if self.equivalent:
            return f"equivalent over {self.checked} assignments"
        setting = " ".join(f"{v}={s}:{x}" for (v, s), x in self.assignment.items())
        diffs = ", ".join(f"{k}: {self.values1[k]!r} vs {self.values2[k]!r}" for k in self.values1)
        return f"counterexample [{setting}] -> {diffs}"


def values_close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=REL_TOL, abs_tol=ABS_TOL)


def check_equivalent(d1: QDag, d2: QDag, samples: int | None = None, seed: int = 0,
                     batch: int = 512) -> Verdict:
    """Do ``d1`` and ``d2`` agree on all query values for every ESN assignment?

    Exhaustive over ``2**k`` assignments to ``d1``'s ESNs unless ``samples``
    is given, in which case that many seeded random assignments are drawn.
    ESNs present in ``d1`` but swept from ``d2`` are simply ignored by ``d2``.
    """
    esn1, esn2 = d1.esns, d2.esns
    extra = set(esn2) - set(esn1)
    if extra:
        raise EquivalenceError(f"esn-set-mismatch: {sorted(extra)} only in second dag")
    if set(d1.query_nodes) != set(d2.query_nodes):
        raise EquivalenceError("query-set-mismatch: "
                               f"{sorted(set(d1.query_nodes) ^ set(d2.query_nodes))}")
    keys = list(esn1)
    k = len(keys)
    if samples is None:
        if k > MAX_EXHAUSTIVE_ESNS:
            raise EquivalenceError(f"too-many-esns-for-exhaustive: {k} > {MAX_EXHAUSTIVE_ESNS}")
        total = 2 ** k
        codes = np.arange(total, dtype=np.int64)
        matrix = ((codes[:, None] >> np.arange(k)[::-1]) & 1).astype(float) if k else np.ones((1, 0))
        # start from all-ones so the prior is checked first
        matrix = 1.0 - matrix
    else:
        rng = np.random.default_rng(seed)
        matrix = rng.integers(0, 2, size=(samples, k)).astype(float)
    queries = list(d1.query_nodes)
    checked = 0
    for start in range(0, len(matrix), batch):
        chunk = matrix[start:start + batch]
        s1 = {esn1[key]: chunk[:, j] for j, key in enumerate(keys)}
        s2 = {esn2[key]: chunk[:, j] for j, key in enumerate(keys) if key in esn2}
        v1 = evaluate_batch(d1, s1, len(chunk))
        v2 = evaluate_batch(d2, s2, len(chunk))
        for row in range(len(chunk)):
            a = {q: float(v1[d1.query_nodes[q]][row]) for q in queries}
            b = {q: float(v2[d2.query_nodes[q]][row]) for q in queries}
            checked += 1
            if not all(values_close(a[q], b[q]) for q in queries):
                setting = {key: int(chunk[row, j]) for j, key in enumerate(keys)}
                return Verdict(False, checked, setting, a, b)
    return Verdict(True, checked)
