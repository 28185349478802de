"""Batch initialization and incremental re-evaluation of a Q-DAG.

``initialize`` computes every node value with all evidence-specific nodes
at 1 (no evidence).  ``ValueState.set_evidence`` then flips a single ESN
and pushes the change downstream, touching only nodes whose value actually
changes:

* an addition child absorbs the change as ``value - old + new``, and snaps
  to exactly 0.0 once none of its parents is nonzero;
* a multiplication child is rescaled by ``value / old * new``, or, when
  ``old`` was zero, recomputed from all of its parents.

Changes are propagated through a worklist ordered by node id, which is a
topological order, so every node is updated at most once per call after all
of its changed parents have settled.

In ``"stabilized"`` mode each multiplication node additionally tracks how
many of its parents are zero and the product of the nonzero ones, so a
parent leaving zero is an O(1) update instead of a full recompute.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, fields

from .circuit import Op, QDag
from .errors import EvidenceError, ZeroProbabilityEvidence

MODES = ("paper", "stabilized")


@dataclass
class Counters:
    """Running instrumentation totals; reset with :meth:`reset`."""

    nodes_visited: int = 0
    edges_traversed: int = 0
    mul_recomputes: int = 0
    arithmetic_ops: int = 0
    calls: int = 0

    def reset(self):
        for f in fields(self):
            setattr(self, f.name, 0)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _sum(values):
    total = 0.0
    for v in values:
        total += v
    return total


def _product(values):
    total = 1.0
    for v in values:
        total *= v
    return total


def normalize(values: dict[str, float]) -> dict[str, float]:
    """Scale non-negative values to sum to one."""
    total = _sum(values.values())
    if total == 0:
        raise ZeroProbabilityEvidence("zero-probability-evidence: all query values are 0")
    return {k: v / total for k, v in values.items()}


class ValueState:
    """Mutable value table over a fixed Q-DAG.

    Parameters
    ----------
    dag : QDag
        The circuit; treated as read-only.
    mode : {"paper", "stabilized"}
        Update rule for multiplication nodes.
    evidence : dict, optional
        Initial observations ``{variable: state}``; the table is then
        computed in one bottom-up pass under those settings.
    """

    def __init__(self, dag: QDag, mode: str = "paper", evidence: dict[str, str] | None = None):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.dag = dag
        self.mode = mode
        self.counters = Counters()
        self.domains = dag.esn_domains()
        self.esn_setting: dict[int, int] = {i: 1 for i in dag.esns.values()}
        for var, state in (evidence or {}).items():
            self._check_observation(var, state)
            for s in self.domains[var]:
                self.esn_setting[dag.esn_node(var, s)] = int(s == state)
        self.value: list[float] = []
        self._zeros: dict[int, int] = {}
        self._nonzero: dict[int, float] = {}
        self._live: dict[int, int] = {}
        self._evaluate_all()

    def __repr__(self):
        return f"<ValueState mode={self.mode} {self.dag!r}>"

    # -- batch ------------------------------------------------------------

    def _fresh_values(self) -> list[float]:
        dag = self.dag
        value = [0.0] * len(dag.nodes)
        c = self.counters
        for i, node in enumerate(dag.nodes):
            op = node.op
            if op is Op.NUM:
                value[i] = node.label
            elif op is Op.ESN:
                value[i] = float(self.esn_setting[i])
            else:
                ps = dag.parents[i]
                vals = [value[p] for p in ps]
                if op is Op.ADD:
                    value[i] = _sum(vals)
                    self._live[i] = sum(1 for v in vals if v != 0)
                else:
                    value[i] = _product(vals)
                c.edges_traversed += len(ps)
                c.arithmetic_ops += len(ps)
            c.nodes_visited += 1
        return value

    def _evaluate_all(self):
        self.value = self._fresh_values()
        if self.mode == "stabilized":
            self._zeros.clear()
            self._nonzero.clear()
            for i, node in enumerate(self.dag.nodes):
                if node.op is Op.MUL:
                    vals = [self.value[p] for p in self.dag.parents[i]]
                    self._zeros[i] = sum(1 for v in vals if v == 0)
                    self._nonzero[i] = _product(v for v in vals if v != 0)

    def recompute_all(self) -> float:
        """Rebuild every value bottom-up; return the largest deviation found."""
        old = self.value
        self._evaluate_all()
        return max((abs(a - b) for a, b in zip(old, self.value)), default=0.0)

    def reset(self):
        """Forget all evidence and re-initialize."""
        for i in self.esn_setting:
            self.esn_setting[i] = 1
        self._evaluate_all()

    # -- incremental ------------------------------------------------------

    def set_evidence(self, esn: int, new_value: int) -> int:
        """Set ESN node ``esn`` to 0 or 1 and propagate; return nodes visited."""
        dag = self.dag
        if not 0 <= esn < len(dag.nodes) or dag.nodes[esn].op is not Op.ESN:
            raise EvidenceError(f"not-an-esn-node: {esn}")
        if new_value not in (0, 1):
            raise ValueError(f"ESN values are 0 or 1, got {new_value!r}")
        c = self.counters
        c.calls += 1
        self.esn_setting[esn] = int(new_value)
        old, new = self.value[esn], float(new_value)
        if old == new:
            return 0
        self.value[esn] = new

        value, children = self.value, dag.children
        pending: dict[int, list[tuple[float, float]]] = {}
        heap: list[int] = []
        visited = 1
        edges = 0

        def notify(n, before, after):
            nonlocal edges
            for m in children[n]:
                edges += 1
                if m in pending:
                    pending[m].append((before, after))
                else:
                    pending[m] = [(before, after)]
                    heapq.heappush(heap, m)

        notify(esn, old, new)
        while heap:
            m = heapq.heappop(heap)
            changes = pending.pop(m)
            visited += 1
            before = value[m]
            if dag.nodes[m].op is Op.ADD:
                after = self._update_sum(m, before, changes)
            elif self.mode == "stabilized":
                after = self._update_tracked_product(m, changes)
            else:
                after = self._update_product(m, before, changes)
            if after != before:
                value[m] = after
                notify(m, before, after)

        c.nodes_visited += visited
        c.edges_traversed += edges
        return visited

    def _update_sum(self, m, before, changes):
        # The live-parent count keeps an all-zero sum exactly 0.0 despite rounding,
        # so a product downstream never sees a spurious 0 -> tiny transition.
        c = self.counters
        live = self._live[m]
        after = before
        for o, n in changes:
            after = after - o + n
            live += (n != 0) - (o != 0)
        c.arithmetic_ops += 2 * len(changes)
        self._live[m] = live
        if live == 0:
            return 0.0
        if after <= 0:
            ps = self.dag.parents[m]
            c.arithmetic_ops += len(ps)
            return _sum(self.value[p] for p in ps)
        return after

    def _update_product(self, m, before, changes):
        c = self.counters
        if any(o == 0 for o, _ in changes):
            # cannot divide out a zero: value-of-mul-node
            c.mul_recomputes += 1
            ps = self.dag.parents[m]
            c.arithmetic_ops += len(ps)
            return _product(self.value[p] for p in ps)
        after = before
        for o, n in changes:
            after = after / o * n
        c.arithmetic_ops += 2 * len(changes)
        return after

    def _update_tracked_product(self, m, changes):
        zeros, prod = self._zeros[m], self._nonzero[m]
        for o, n in changes:
            if o == 0:
                zeros -= 1
            else:
                prod /= o
            if n == 0:
                zeros += 1
            else:
                prod *= n
        self.counters.arithmetic_ops += 2 * len(changes)
        self._zeros[m], self._nonzero[m] = zeros, prod
        return 0.0 if zeros else prod

    # -- variable-level evidence -----------------------------------------

    def _check_observation(self, variable, state):
        if variable not in self.domains:
            raise EvidenceError(f"unknown-variable: {variable!r} has no evidence-specific nodes")
        if state not in self.domains[variable]:
            raise EvidenceError(f"unknown-state: {state!r} is not a state of {variable!r} "
                                f"(known: {', '.join(self.domains[variable])})")

    def observe(self, variable: str, state: str) -> int:
        """Observe ``variable = state``; return total nodes visited."""
        self._check_observation(variable, state)
        return sum(self.set_evidence(self.dag.esn_node(variable, s), int(s == state))
                   for s in self.domains[variable])

    def retract(self, variable: str) -> int:
        """Make ``variable`` unknown again; return total nodes visited."""
        if variable not in self.domains:
            raise EvidenceError(f"unknown-variable: {variable!r} has no evidence-specific nodes")
        return sum(self.set_evidence(self.dag.esn_node(variable, s), 1)
                   for s in self.domains[variable])

    @property
    def evidence(self) -> dict[str, str | tuple[str, ...] | None]:
        """Current status per variable.

        ``None`` when unknown, the observed state for a one-hot pattern, and
        the tuple of states still at 1 for any other ESN pattern (which only
        raw :meth:`set_evidence` calls can produce).
        """
        out = {}
        for var, states in self.domains.items():
            on = tuple(s for s in states if self.esn_setting[self.dag.esn_node(var, s)])
            if len(on) == len(states):
                out[var] = None
            elif len(on) == 1:
                out[var] = on[0]
            else:
                out[var] = on
        return out

    def query(self, variable: str, state: str) -> float:
        """Pr(variable = state, e) under the current evidence."""
        try:
            return self.value[self.dag.query_nodes[(variable, state)]]
        except KeyError:
            raise EvidenceError(f"unknown-query-node: ({variable}, {state})") from None

    def query_all(self, variable: str) -> dict[str, float]:
        states = self.dag.query_domains().get(variable)
        if not states:
            raise EvidenceError(f"unknown-query-node: no query nodes for {variable!r}")
        return {s: self.query(variable, s) for s in states}

    def posterior(self, variable: str) -> dict[str, float]:
        """Pr(variable | e) by normalizing the query values."""
        return normalize(self.query_all(variable))


def initialize(dag: QDag, mode: str = "paper") -> ValueState:
    """Evaluate ``dag`` with every evidence-specific node at 1."""
    return ValueState(dag, mode=mode)
