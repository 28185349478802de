"""Equivalence-preserving Q-DAG reduction.

The passes rewrite a ``QDag`` in place (except :func:`sweep_dead_nodes`,
which builds a compacted copy) and report what they did:

* ``eliminate_identity_zero`` drops ``Num(0)`` parents of additions;
* ``eliminate_identity_one`` drops ``Num(1)`` parents of multiplications;
* ``numeric_reduction`` folds additions/multiplications whose parents are
  all constants, cascading through the nodes it creates;
* ``zero_compression`` turns every node whose no-evidence value is 0 into
  ``Num(0)``.  Values can only drop as evidence arrives, so such nodes
  stay 0 under every evidence.

An addition left without parents becomes ``Num(0)`` and a multiplication
``Num(1)`` (empty sum, empty product).
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

from .circuit import Op, QDag, check
from .evaluator import ValueState, _product, _sum, initialize


@dataclass
class PassReport:
    name: str
    nodes_before: int
    nodes_after: int
    edges_before: int
    edges_after: int
    operations: int = 0
    changes: int = 0

    @property
    def changed(self) -> bool:
        return self.changes > 0


@dataclass
class ReductionReport:
    passes: list[PassReport] = field(default_factory=list)
    removed_esns: list[tuple[str, str]] = field(default_factory=list)
    cycles: int = 0
    seconds: float = 0.0

    def extend(self, other: "ReductionReport"):
        self.passes.extend(other.passes)
        self.removed_esns.extend(other.removed_esns)

    @property
    def operations(self) -> int:
        return sum(p.operations for p in self.passes)

    @property
    def nodes_before(self) -> int:
        return self.passes[0].nodes_before if self.passes else 0

    @property
    def nodes_after(self) -> int:
        return self.passes[-1].nodes_after if self.passes else 0

    @property
    def edges_before(self) -> int:
        return self.passes[0].edges_before if self.passes else 0

    @property
    def edges_after(self) -> int:
        return self.passes[-1].edges_after if self.passes else 0

    def to_text(self) -> str:
        lines = [f"reduced {self.nodes_before} -> {self.nodes_after} nodes, "
                 f"{self.edges_before} -> {self.edges_after} edges "
                 f"in {self.cycles} cycle(s), {self.operations} operations"]
        for p in self.passes:
            if p.changed:
                lines.append(f"  {p.name:<24} nodes {p.nodes_before:>7} -> {p.nodes_after:<7} "
                             f"edges {p.edges_before:>7} -> {p.edges_after:<7} "
                             f"rewrites {p.changes}")
        if self.removed_esns:
            lines.append("  removed evidence-specific nodes (no path to any query): "
                         + ", ".join(f"{v}={s}" for v, s in self.removed_esns))
        return "\n".join(lines)

    def to_kv(self) -> str:
        lines = [
            f"nodes_before={self.nodes_before}",
            f"nodes_after={self.nodes_after}",
            f"edges_before={self.edges_before}",
            f"edges_after={self.edges_after}",
            f"cycles={self.cycles}",
            f"operations={self.operations}",
            f"seconds={self.seconds:.6f}",
            f"removed_esns={','.join(f'{v}={s}' for v, s in self.removed_esns)}",
        ]
        totals: dict[str, list[int]] = {}
        for p in self.passes:
            t = totals.setdefault(p.name, [0, 0])
            t[0] += p.changes
            t[1] += p.operations
        for name, (changes, ops) in totals.items():
            lines.append(f"{name}.rewrites={changes}")
            lines.append(f"{name}.operations={ops}")
        return "\n".join(lines)


def _start(name: str, dag: QDag) -> PassReport:
    n, e = dag.num_nodes, dag.num_edges
    return PassReport(name, n, n, e, e)


def _finish(report: PassReport, dag: QDag) -> PassReport:
    report.nodes_after, report.edges_after = dag.num_nodes, dag.num_edges
    return report


def _repair_empty(dag: QDag, m: int) -> None:
    if not dag.parents[m]:
        dag.make_constant(m, 0.0 if dag.op(m) is Op.ADD else 1.0)


def _eliminate_identity(dag: QDag, identity: float, target: Op, name: str) -> PassReport:
    report = _start(name, dag)
    for n, node in enumerate(dag.nodes):
        report.operations += 1
        if node.op is Op.NUM and node.label == identity:
            for m in list(dag.children[n]):
                report.operations += 1
                if dag.op(m) is target:
                    dag.remove_edge(n, m)
                    _repair_empty(dag, m)
                    report.changes += 1
    return _finish(report, dag)


def eliminate_identity_zero(dag: QDag) -> PassReport:
    """Remove every edge from a ``Num(0)`` into an addition."""
    return _eliminate_identity(dag, 0.0, Op.ADD, "eliminate_identity_zero")


def eliminate_identity_one(dag: QDag) -> PassReport:
    """Remove every edge from a ``Num(1)`` into a multiplication."""
    return _eliminate_identity(dag, 1.0, Op.MUL, "eliminate_identity_one")


def numeric_reduction(dag: QDag) -> PassReport:
    report = _start("numeric_reduction", dag)
    indegree = [0] * len(dag.nodes)
    queue = deque()
    for n, node in enumerate(dag.nodes):
        report.operations += 1
        if node.op is Op.NUM:
            queue.append(n)
        elif node.op in (Op.ADD, Op.MUL):
            indegree[n] = len(dag.parents[n])
    while queue:
        n = queue.popleft()
        for m in list(dag.children[n]):
            report.operations += 1
            indegree[m] -= 1
            if indegree[m] == 0:
                labels = [dag.nodes[p].label for p in dag.parents[m]]
                folded = _sum(labels) if dag.op(m) is Op.ADD else _product(labels)
                report.operations += len(labels)
                dag.make_constant(m, folded)
                report.changes += 1
                queue.append(m)
    return _finish(report, dag)


def zero_compression(dag: QDag, values: ValueState) -> PassReport:
    """Replace every node whose initialized value is 0 by ``Num(0)``.

    ``values`` must come from :func:`initialize` on this very dag, i.e. with
    every evidence-specific node at 1.
    """
    if values.dag is not dag or len(values.value) != len(dag.nodes):
        raise ValueError("values-not-initialized: value table belongs to a different dag")
    if any(v != 1 for v in values.esn_setting.values()):
        raise ValueError("values-not-initialized: evidence-specific nodes must all be 1")
    report = _start("zero_compression", dag)
    for n, node in enumerate(dag.nodes):
        report.operations += 1
        if values.value[n] == 0 and not (node.op is Op.NUM and node.label == 0):
            dag.make_constant(n, 0.0)
            report.changes += 1
    return _finish(report, dag)


def sweep_dead_nodes(dag: QDag) -> tuple[QDag, ReductionReport]:
    """Copy the nodes that can reach a query node into a fresh, compact dag."""
    report = _start("sweep_dead_nodes", dag)
    live = [False] * len(dag.nodes)
    stack = list(set(dag.query_nodes.values()))
    for q in stack:
        live[q] = True
    while stack:
        n = stack.pop()
        report.operations += 1
        for p in dag.parents[n]:
            report.operations += 1
            if not live[p]:
                live[p] = True
                stack.append(p)

    out = QDag()
    new_id: dict[int, int] = {}
    removed_esns = []
    for n, node in enumerate(dag.nodes):
        report.operations += 1
        if live[n]:
            new_id[n] = out.add_node(node, [new_id[p] for p in dag.parents[n]])
        else:
            report.changes += 1
            if node.op is Op.ESN:
                removed_esns.append((node.variable, node.state))
    for key, q in dag.query_nodes.items():
        out.set_query(*key, new_id[q])
    report.nodes_after, report.edges_after = out.num_nodes, out.num_edges
    return out, ReductionReport(passes=[report], removed_esns=removed_esns)


def reduce(dag: QDag, validate: bool = True, max_cycles: int = 1000) -> tuple[QDag, ReductionReport]:
    """Run all passes to a fixpoint on a copy of ``dag``.

    One cycle is: initialize, zero_compression, eliminate_identity_zero,
    eliminate_identity_one, numeric_reduction, sweep_dead_nodes.  Cycles
    repeat until one makes no rewrite.
    """
    t0 = time.perf_counter()
    report = ReductionReport()
    current = dag.copy()
    for _ in range(max_cycles):
        report.cycles += 1
        values = initialize(current)
        passes = [
            zero_compression(current, values),
            eliminate_identity_zero(current),
            eliminate_identity_one(current),
            numeric_reduction(current),
        ]
        current, swept = sweep_dead_nodes(current)
        report.passes.extend(passes)
        report.extend(swept)
        if validate:
            check(current)
        if not any(p.changed for p in report.passes[-5:]):
            break
    else:
        raise RuntimeError(f"reduction did not reach a fixpoint in {max_cycles} cycles")
    report.seconds = time.perf_counter() - t0
    return current, report
