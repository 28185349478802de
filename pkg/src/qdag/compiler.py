"""Compile a belief network into a Q-DAG by symbolic variable elimination.

Factors map assignments of their scope to Q-DAG node ids instead of
numbers.  Multiplying factors emits ``MUL`` nodes, summing a variable out
emits ``ADD`` nodes, CPT entries become ``NUM`` nodes and every evidence
variable contributes an indicator factor of ``ESN`` nodes.  Evaluating the
resulting circuit therefore replays variable elimination for whatever
evidence the indicators encode.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

from .circuit import QDag
from .network import BeliefNetwork


@dataclass
class Factor:
    scope: tuple[str, ...]
    table: dict[tuple[str, ...], int]


def _moral_graph(net: BeliefNetwork) -> dict[str, set[str]]:
    adj = {v: set() for v in net.variables}
    for v, ps in net.parents.items():
        family = (v, *ps)
        for a, b in itertools.combinations(family, 2):
            adj[a].add(b)
            adj[b].add(a)
    return adj


def elimination_order(net: BeliefNetwork, keep: Iterable[str] = ()) -> list[str]:
    """Min-degree order over the variables not in ``keep``.

    Degrees are taken in the moral graph as it fills in during
    elimination; ties go to the variable declared first.
    """
    keep = set(keep)
    unknown = keep - set(net.variables)
    if unknown:
        raise ValueError(f"unknown variables {sorted(unknown)}")
    adj = _moral_graph(net)
    rank = {v: i for i, v in enumerate(net.variables)}
    candidates = [v for v in net.variables if v not in keep]
    order = []
    while candidates:
        v = min(candidates, key=lambda u: (len(adj[u]), rank[u]))
        nbrs = adj.pop(v)
        for a in nbrs:
            adj[a].discard(v)
            adj[a] |= nbrs - {a}
        candidates.remove(v)
        order.append(v)
    return order


class _Builder:
    def __init__(self, net: BeliefNetwork, dag: QDag):
        self.net = net
        self.dag = dag

    def assignments(self, scope):
        return itertools.product(*(self.net.variables[v] for v in scope))

    def cpt_factor(self, var: str) -> Factor:
        scope = (*self.net.parents[var], var)
        table = {}
        for cfg in self.net.parent_configurations(var):
            row = self.net.cpt[var][cfg]
            for state, p in zip(self.net.variables[var], row):
                table[(*cfg, state)] = self.dag.num(p)
        return Factor(scope, table)

    def indicator_factor(self, var: str) -> Factor:
        return Factor((var,), {(s,): self.dag.esn_node(var, s) for s in self.net.variables[var]})

    def multiply(self, factors: Sequence[Factor]) -> Factor:
        if len(factors) == 1:
            return factors[0]
        scope: list[str] = []
        for f in factors:
            scope.extend(v for v in f.scope if v not in scope)
        pos = {v: i for i, v in enumerate(scope)}
        picks = [[pos[v] for v in f.scope] for f in factors]
        table = {}
        for a in self.assignments(scope):
            ps = [f.table[tuple(a[i] for i in pick)] for f, pick in zip(factors, picks)]
            table[a] = self.dag.mul(*ps)
        return Factor(tuple(scope), table)

    def sum_out(self, f: Factor, var: str) -> Factor:
        k = f.scope.index(var)
        scope = f.scope[:k] + f.scope[k + 1:]
        table = {}
        for a in self.assignments(scope):
            terms = [f.table[a[:k] + (s,) + a[k:]] for s in self.net.variables[var]]
            table[a] = self.dag.add(*terms)
        return Factor(scope, table)


def compile_network(net: BeliefNetwork, query: Iterable[str], evidence: Iterable[str] = (),
                    order: Sequence[str] | None = None) -> QDag:
    """Build a Q-DAG answering ``Pr(q, e)`` for every state of every query variable.

    ``evidence`` names the variables that may be observed on-line; each
    state of each such variable gets an evidence-specific node.  Each query
    variable is eliminated independently (sharing only the ESNs); ``order``
    overrides the min-degree elimination order and must list every
    non-query variable.
    """
    query = list(dict.fromkeys(query))
    evidence = set(evidence)
    unknown = (set(query) | evidence) - set(net.variables)
    if unknown:
        raise ValueError(f"unknown variables {sorted(unknown)}")
    if not query:
        raise ValueError("at least one query variable is required")

    dag = QDag()
    for v in net.variables:
        if v in evidence:
            for s in net.variables[v]:
                dag.esn(v, s)

    b = _Builder(net, dag)
    for qv in query:
        if order is None:
            elim = elimination_order(net, keep={qv})
        else:
            elim = [v for v in order if v != qv]
            if sorted(elim) != sorted(v for v in net.variables if v != qv):
                raise ValueError(f"order must list every variable except {qv!r} exactly once")
        factors = [b.cpt_factor(v) for v in net.variables]
        factors += [b.indicator_factor(v) for v in net.variables if v in evidence]
        for v in elim:
            touching = [f for f in factors if v in f.scope]
            factors = [f for f in factors if v not in f.scope]
            factors.append(b.sum_out(b.multiply(touching), v))
        final = b.multiply(factors)
        assert final.scope == (qv,), final.scope
        for s in net.variables[qv]:
            dag.set_query(qv, s, final.table[(s,)])
    return dag
