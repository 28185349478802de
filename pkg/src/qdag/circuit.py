"""Q-DAG data structure, structural validation and the ``.qdag`` text format.

A Q-DAG is an arithmetic circuit over four node kinds: numeric constants
(``NUM``), evidence-specific indicators (``ESN``), additions (``ADD``) and
multiplications (``MUL``).  Values flow from parents to children, so roots
are inputs and query nodes are outputs.

Node ids are dense integers and every node's parents have smaller ids than
the node itself, which makes ``range(len(dag))`` a topological order.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple

from .errors import ParseError, StructureError


class Op(str, Enum):
    NUM = "NUM"
    ESN = "ESN"
    ADD = "ADD"
    MUL = "MUL"


@dataclass(frozen=True)
class Node:
    op: Op
    label: float | None = None
    variable: str | None = None
    state: str | None = None

    @property
    def is_root(self) -> bool:
        return self.op in (Op.NUM, Op.ESN)

    def __repr__(self):
        if self.op is Op.NUM:
            return f"Num({self.label!r})"
        if self.op is Op.ESN:
            return f"Esn({self.variable}, {self.state})"
        return self.op.name.capitalize()


def Num(label: float) -> Node:
    return Node(Op.NUM, label=float(label))


def Esn(variable: str, state: str) -> Node:
    return Node(Op.ESN, variable=variable, state=state)


ADD = Node(Op.ADD)
MUL = Node(Op.MUL)


class Violation(NamedTuple):
    code: str
    node: int | None
    detail: str

    def __str__(self):
        at = f" at {self.node}" if self.node is not None else ""
        return f"{self.code}{at}: {self.detail}"


class QDag:
    """A parameterized arithmetic DAG with designated query nodes.

    ``parents`` and ``children`` are side tables indexed by node id and are
    kept as exact mirrors of each other.  ``query_nodes`` maps a
    ``(variable, state)`` pair to the node whose value is ``Pr(state, e)``.
    """

    def __init__(self):
        self.nodes: list[Node] = []
        self.parents: list[list[int]] = []
        self.children: list[list[int]] = []
        self.query_nodes: dict[tuple[str, str], int] = {}
        self._esn_index: dict[tuple[str, str], int] = {}

    def __len__(self):
        return len(self.nodes)

    def __repr__(self):
        return (f"<QDag nodes={self.num_nodes} edges={self.num_edges} "
                f"esns={len(self._esn_index)} queries={len(self.query_nodes)}>")

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return sum(len(p) for p in self.parents)

    # -- construction -----------------------------------------------------

    def add_node(self, kind: Node, parents: Iterable[int] = ()) -> int:
        parents = list(parents)
        n = len(self.nodes)
        if kind.is_root and parents:
            raise StructureError("root-kind-with-parents",
                                 f"{kind!r} cannot have parents {parents}")
        if not kind.is_root and not parents:
            raise StructureError("empty-parents", f"{kind!r} needs at least one parent")
        if len(set(parents)) != len(parents):
            raise StructureError("duplicate-parent", f"parents {parents} of new node {n}")
        for p in parents:
            if not isinstance(p, int) or not 0 <= p < n:
                raise StructureError("unknown-parent", f"{p!r} is not an existing node")
        if kind.op is Op.NUM and not (math.isfinite(kind.label) and kind.label >= 0):
            raise StructureError("bad-label", f"Num label {kind.label!r} must be finite and >= 0")
        if kind.op is Op.ESN:
            key = (kind.variable, kind.state)
            if key in self._esn_index:
                raise StructureError("duplicate-esn", f"Esn{key} already exists")
            self._esn_index[key] = n
        self.nodes.append(kind)
        self.parents.append(parents)
        self.children.append([])
        for p in parents:
            self.children[p].append(n)
        return n

    def num(self, label: float) -> int:
        return self.add_node(Num(label))

    def esn(self, variable: str, state: str) -> int:
        return self.add_node(Esn(variable, state))

    def add(self, *parents: int) -> int:
        return self.add_node(ADD, parents)

    def mul(self, *parents: int) -> int:
        return self.add_node(MUL, parents)

    def set_query(self, variable: str, state: str, node: int) -> None:
        if not 0 <= node < len(self.nodes):
            raise StructureError("unknown-node", f"query node {node} does not exist")
        self.query_nodes[(variable, state)] = node

    # -- in-place rewriting used by the reducer ---------------------------

    def remove_edge(self, parent: int, child: int) -> None:
        self.parents[child].remove(parent)
        self.children[parent].remove(child)

    def make_constant(self, n: int, label: float) -> int:
        """Turn node ``n`` into ``Num(label)``, dropping its incoming edges.

        Returns the number of edges removed.
        """
        if self.nodes[n].op is Op.ESN:
            del self._esn_index[(self.nodes[n].variable, self.nodes[n].state)]
        removed = self.parents[n]
        for p in removed:
            self.children[p].remove(n)
        self.parents[n] = []
        self.nodes[n] = Num(label)
        return len(removed)

    # -- queries ----------------------------------------------------------

    def op(self, n: int) -> Op:
        return self.nodes[n].op

    def esn_node(self, variable: str, state: str) -> int:
        return self._esn_index[(variable, state)]

    @property
    def esns(self) -> dict[tuple[str, str], int]:
        """ESN nodes keyed by ``(variable, state)``, in id order."""
        return dict(sorted(self._esn_index.items(), key=lambda kv: kv[1]))

    def esn_domains(self) -> dict[str, list[str]]:
        """States carrying an ESN, per variable, in node-id order."""
        domains: dict[str, list[str]] = {}
        for (var, state) in self.esns:
            domains.setdefault(var, []).append(state)
        return domains

    def query_domains(self) -> dict[str, list[str]]:
        domains: dict[str, list[str]] = {}
        for (var, state) in self.query_nodes:
            domains.setdefault(var, []).append(state)
        return domains

    def copy(self) -> "QDag":
        other = QDag()
        other.nodes = list(self.nodes)
        other.parents = [list(p) for p in self.parents]
        other.children = [list(c) for c in self.children]
        other.query_nodes = dict(self.query_nodes)
        other._esn_index = dict(self._esn_index)
        return other


def topological_order(dag: QDag) -> list[int]:
    """Kahn's algorithm with ascending-id tie-break."""
    n = len(dag.nodes)
    indegree = [len(p) for p in dag.parents]
    heap = [i for i in range(n) if indegree[i] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        i = heapq.heappop(heap)
        order.append(i)
        for c in dag.children[i]:
            indegree[c] -= 1
            if indegree[c] == 0:
                heapq.heappush(heap, c)
    if len(order) != n:
        raise StructureError("cycle-detected",
                             f"{n - len(order)} nodes lie on or behind a cycle")
    return order


def validate(dag: QDag) -> list[Violation]:
    out: list[Violation] = []
    n = len(dag.nodes)
    if len(dag.parents) != n or len(dag.children) != n:
        return [Violation("table-size", None, "parents/children tables do not match node count")]

    seen_esn: dict[tuple[str, str], int] = {}
    for i, node in enumerate(dag.nodes):
        ps = dag.parents[i]
        if len(set(ps)) != len(ps):
            out.append(Violation("duplicate-parent", i, f"parents {ps}"))
        for p in ps:
            if not 0 <= p < n:
                out.append(Violation("unknown-parent", i, f"parent {p}"))
            elif i not in dag.children[p]:
                out.append(Violation("mirror-mismatch", p, f"{p} in parents({i}) but {i} not in children({p})"))
        for c in dag.children[i]:
            if not 0 <= c < n:
                out.append(Violation("unknown-child", i, f"child {c}"))
            elif i not in dag.parents[c]:
                out.append(Violation("mirror-mismatch", i, f"{c} in children({i}) but {i} not in parents({c})"))
        if node.is_root and ps:
            out.append(Violation("root-kind-with-parents", i, repr(node)))
        if not node.is_root and not ps:
            out.append(Violation("empty-parents", i, repr(node)))
        if node.op is Op.NUM and not (node.label is not None and math.isfinite(node.label)
                                      and node.label >= 0):
            out.append(Violation("bad-label", i, repr(node.label)))
        if node.op is Op.ESN:
            key = (node.variable, node.state)
            if key in seen_esn:
                out.append(Violation("duplicate-esn", i, f"Esn{key} also at {seen_esn[key]}"))
            else:
                seen_esn[key] = i

    if seen_esn != dag._esn_index:
        out.append(Violation("esn-index", None, "ESN lookup table out of sync with nodes"))
    for key, q in dag.query_nodes.items():
        if not (isinstance(q, int) and 0 <= q < n):
            out.append(Violation("bad-query", None, f"query {key} -> {q!r}"))
    if not any(v.code == "unknown-parent" for v in out):
        on_cycle = _find_cycle(dag.parents)
        if on_cycle is not None:
            out.append(Violation("cycle", on_cycle, "node lies on a directed cycle"))
    return out


def _find_cycle(parents: list[list[int]]) -> int | None:
    """Iterative DFS over parent edges; return a node on a cycle, if any."""
    state = [0] * len(parents)  # 0 new, 1 on stack, 2 done
    for root in range(len(parents)):
        if state[root]:
            continue
        stack = [(root, iter(parents[root]))]
        state[root] = 1
        while stack:
            n, it = stack[-1]
            for p in it:
                if state[p] == 1:
                    return p
                if state[p] == 0:
                    state[p] = 1
                    stack.append((p, iter(parents[p])))
                    break
            else:
                state[n] = 2
                stack.pop()
    return None


def check(dag: QDag) -> None:
    """Raise ``StructureError`` listing every violation, if any."""
    problems = validate(dag)
    if problems:
        raise StructureError("invalid-qdag", "; ".join(map(str, problems)))


# -- text format --------------------------------------------------------------

def serialize(dag: QDag) -> str:
    order = topological_order(dag)
    new_id = {old: new for new, old in enumerate(order)}
    lines = [f"qdag v1 {len(order)}"]
    for old in order:
        node = dag.nodes[old]
        i = new_id[old]
        if node.op is Op.NUM:
            lines.append(f"{i} NUM {node.label!r}")
        elif node.op is Op.ESN:
            lines.append(f"{i} ESN {node.variable} {node.state}")
        else:
            ps = " ".join(str(new_id[p]) for p in dag.parents[old])
            lines.append(f"{i} {node.op.value} {ps}")
    for (var, state), q in dag.query_nodes.items():
        lines.append(f"query {new_id[q]} {var} {state}")
    return "\n".join(lines) + "\n"


def _int(tok: str, lineno: int) -> int:
    try:
        value = int(tok)
    except ValueError:
        raise ParseError(f"expected an integer, got {tok!r}", lineno) from None
    if value < 0:
        raise ParseError(f"negative id {value}", lineno)
    return value


def parse(text: str) -> QDag:
    dag = QDag()
    expected = None
    seen_query = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        if expected is None:
            if len(toks) != 3 or toks[0] != "qdag" or toks[1] != "v1":
                raise ParseError("expected header 'qdag v1 <node-count>'", lineno)
            expected = _int(toks[2], lineno)
            continue
        if toks[0] == "query":
            if len(toks) != 4:
                raise ParseError("expected 'query <id> <variable> <state>'", lineno)
            q = _int(toks[1], lineno)
            if q >= len(dag):
                raise ParseError(f"query refers to unknown node {q}", lineno)
            if (toks[2], toks[3]) in dag.query_nodes:
                raise ParseError(f"duplicate query ({toks[2]}, {toks[3]})", lineno)
            dag.set_query(toks[2], toks[3], q)
            seen_query = True
            continue
        if seen_query:
            raise ParseError("node line after query lines", lineno)
        if len(toks) < 2:
            raise ParseError(f"cannot parse {line!r}", lineno)
        i = _int(toks[0], lineno)
        if i != len(dag):
            raise ParseError(f"expected node id {len(dag)}, got {i}", lineno)
        kind, args = toks[1], toks[2:]
        try:
            if kind == "NUM":
                if len(args) != 1:
                    raise ParseError("NUM takes exactly one label", lineno)
                try:
                    label = float(args[0])
                except ValueError:
                    raise ParseError(f"bad number {args[0]!r}", lineno) from None
                dag.add_node(Num(label))
            elif kind == "ESN":
                if len(args) != 2:
                    raise ParseError("ESN takes <variable> <state>", lineno)
                dag.add_node(Esn(args[0], args[1]))
            elif kind in ("ADD", "MUL"):
                if not args:
                    raise ParseError(f"{kind} needs at least one parent", lineno)
                ps = [_int(a, lineno) for a in args]
                for p in ps:
                    if p >= i:
                        raise ParseError(f"forward-reference: parent {p} of node {i}", lineno)
                dag.add_node(ADD if kind == "ADD" else MUL, ps)
            else:
                raise ParseError(f"unknown node kind {kind!r}", lineno)
        except StructureError as exc:
            raise ParseError(str(exc), lineno) from None
    if expected is None:
        raise ParseError("empty input: missing header")
    if expected != len(dag):
        raise ParseError(f"header announces {expected} nodes, found {len(dag)}")
    check(dag)
    return dag
