"""Discrete belief networks and the ``.bn`` text format."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .errors import NetworkError

ROW_SUM_TOL = 1e-9


@dataclass(eq=False)
class BeliefNetwork:
    """Variables with ordered state lists, parent sets and CPTs.

    ``cpt[var]`` maps a tuple of parent states (in ``parents[var]`` order)
    to a tuple of probabilities, one per state of ``var``.
    """

    name: str = "network"
    variables: dict[str, tuple[str, ...]] = field(default_factory=dict)
    parents: dict[str, tuple[str, ...]] = field(default_factory=dict)
    cpt: dict[str, dict[tuple[str, ...], tuple[float, ...]]] = field(default_factory=dict)

    def states(self, var: str) -> tuple[str, ...]:
        return self.variables[var]

    def parent_configurations(self, var: str):
        """Parent-state tuples in canonical order (last parent cycles fastest)."""
        return itertools.product(*(self.variables[p] for p in self.parents[var]))

    def prob(self, var: str, state: str, assignment: dict[str, str]) -> float:
        row = self.cpt[var][tuple(assignment[p] for p in self.parents[var])]
        return row[self.variables[var].index(state)]

    def topological_variables(self) -> list[str]:
        """Variables ordered parents-first, ties by declaration order."""
        order, placed = [], set()
        remaining = list(self.variables)
        while remaining:
            for v in remaining:
                if all(p in placed for p in self.parents[v]):
                    order.append(v)
                    placed.add(v)
                    remaining.remove(v)
                    break
            else:
                raise NetworkError(f"cycle among variables {remaining}")
        return order

    def without(self, *names: str) -> "BeliefNetwork":
        """Drop leaf variables (no children) from the network."""
        for n in names:
            kids = [v for v in self.variables if n in self.parents[v] and v not in names]
            if kids:
                raise ValueError(f"cannot drop {n}: it is a parent of {kids}")
        keep = [v for v in self.variables if v not in names]
        return BeliefNetwork(
            name=self.name,
            variables={v: self.variables[v] for v in keep},
            parents={v: self.parents[v] for v in keep},
            cpt={v: dict(self.cpt[v]) for v in keep},
        )

    def check(self) -> None:
        for v, ps in self.parents.items():
            for p in ps:
                if p not in self.variables:
                    raise NetworkError(f"undeclared parent {p!r} of {v!r}")
        self.topological_variables()
        for v, states in self.variables.items():
            if v not in self.cpt:
                raise NetworkError(f"missing cpt for {v!r}")
            table = self.cpt[v]
            configs = list(self.parent_configurations(v))
            if len(table) != len(configs) or any(c not in table for c in configs):
                raise NetworkError(f"cpt for {v!r} must have exactly one row per parent configuration")
            for cfg, row in table.items():
                if len(row) != len(states):
                    raise NetworkError(f"cpt row {v}{list(cfg)} has {len(row)} entries, expected {len(states)}")
                if any(not 0.0 <= p <= 1.0 for p in row):
                    raise NetworkError(f"cpt row {v}{list(cfg)} has entries outside [0, 1]")
                if abs(sum(row) - 1.0) > ROW_SUM_TOL:
                    raise NetworkError(f"cpt row {v}{list(cfg)} sums to {sum(row)!r}, not 1")


def parse_network(text: str) -> BeliefNetwork:
    net = BeliefNetwork()
    current = None  # (var, rows) while inside a cpt block
    seen_header = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        head = toks[0]

        if current is not None:
            var, rows, row_lines = current
            if head == "end":
                if len(toks) != 1:
                    raise NetworkError("unexpected tokens after 'end'", lineno)
                configs = list(net.parent_configurations(var))
                missing = [c for c in configs if c not in rows]
                if missing:
                    raise NetworkError(f"cpt {var}: missing row {' '.join(missing[0]) or '<prior>'}", lineno)
                net.cpt[var] = {c: rows[c] for c in configs}
                current = None
            elif head == "row":
                _parse_row(net, var, toks[1:], rows, lineno)
            else:
                raise NetworkError(f"expected 'row' or 'end' inside cpt {var}, got {head!r}", lineno)
            continue

        if head == "network":
            if seen_header or len(toks) != 2:
                raise NetworkError("expected a single 'network <name>' line", lineno)
            net.name = toks[1]
            seen_header = True
        elif head == "variable":
            if len(toks) < 4 or toks[2] != ":":
                raise NetworkError("expected 'variable <name> : <state> ...'", lineno)
            name, states = toks[1], tuple(toks[3:])
            if name in net.variables:
                raise NetworkError(f"variable {name!r} declared twice", lineno)
            if len(set(states)) != len(states):
                raise NetworkError(f"variable {name!r} has duplicate states", lineno)
            net.variables[name] = states
        elif head == "cpt":
            if len(toks) < 2:
                raise NetworkError("expected 'cpt <var> [| <parents>]'", lineno)
            var = toks[1]
            if var not in net.variables:
                raise NetworkError(f"cpt for undeclared variable {var!r}", lineno)
            if var in net.cpt:
                raise NetworkError(f"duplicate cpt for {var!r}", lineno)
            if len(toks) == 2:
                ps: tuple[str, ...] = ()
            elif toks[2] == "|" and len(toks) > 3:
                ps = tuple(toks[3:])
            else:
                raise NetworkError("expected '|' followed by parent names", lineno)
            for p in ps:
                if p not in net.variables:
                    raise NetworkError(f"undeclared parent {p!r} of {var!r}", lineno)
            if len(set(ps)) != len(ps) or var in ps:
                raise NetworkError(f"bad parent list for {var!r}", lineno)
            net.parents[var] = ps
            current = (var, {}, {})
        else:
            raise NetworkError(f"unknown directive {head!r}", lineno)

    if current is not None:
        raise NetworkError(f"cpt {current[0]} not closed with 'end'")
    for v in net.variables:
        if v not in net.cpt:
            raise NetworkError(f"missing cpt for {v!r}")
    net.check()
    return net


def _parse_row(net, var, toks, rows, lineno):
    ps = net.parents[var]
    if ps:
        if ":" not in toks:
            raise NetworkError(f"row for {var!r} needs '<parent states> :' prefix", lineno)
        k = toks.index(":")
        cfg, probs = tuple(toks[:k]), toks[k + 1:]
        if len(cfg) != len(ps):
            raise NetworkError(f"row for {var!r} names {len(cfg)} parent states, expected {len(ps)}", lineno)
        for p, s in zip(ps, cfg):
            if s not in net.variables[p]:
                raise NetworkError(f"{s!r} is not a state of {p!r}", lineno)
    else:
        if ":" in toks:
            raise NetworkError(f"{var!r} has no parents; row takes no prefix", lineno)
        cfg, probs = (), toks
    if cfg in rows:
        raise NetworkError(f"duplicate row for {var}{list(cfg)}", lineno)
    try:
        values = tuple(float(p) for p in probs)
    except ValueError:
        raise NetworkError(f"bad probability in {probs}", lineno) from None
    n = len(net.variables[var])
    if len(values) != n:
        raise NetworkError(f"row has {len(values)} probabilities, {var!r} has {n} states", lineno)
    if any(not 0.0 <= p <= 1.0 for p in values):
        raise NetworkError(f"probabilities must lie in [0, 1]: {probs}", lineno)
    if abs(sum(values) - 1.0) > ROW_SUM_TOL:
        label = " ".join(cfg) or "<prior>"
        raise NetworkError(f"row-sum: row {var} [{label}] sums to {sum(values)!r}", lineno)
    rows[cfg] = values


def format_network(net: BeliefNetwork) -> str:
    lines = [f"network {net.name}"]
    for v, states in net.variables.items():
        lines.append(f"variable {v} : {' '.join(states)}")
    for v in net.variables:
        ps = net.parents[v]
        lines.append(f"cpt {v}" + (f" | {' '.join(ps)}" if ps else ""))
        for cfg in net.parent_configurations(v):
            probs = " ".join(repr(p) for p in net.cpt[v][cfg])
            lines.append(f"  row {' '.join(cfg)} : {probs}" if ps else f"  row {probs}")
        lines.append("end")
    return "\n".join(lines) + "\n"


def random_network(seed, n_vars=6, max_states=3, max_parents=2, zero_density=0.0,
                   max_log2_size=20.0) -> BeliefNetwork:
    """Seeded random network for tests and benchmarks.

    Each CPT entry is zeroed with probability ``zero_density`` (keeping at
    least one positive entry per row) before the row is renormalized.  State
    counts are trimmed so the joint state space stays below
    ``2 ** max_log2_size`` entries.
    """
    rng = random.Random(seed)
    net = BeliefNetwork(name=f"random{seed}")
    budget = 2.0 ** max_log2_size
    size = 1
    for i in range(n_vars):
        k = rng.randint(2, max_states)
        while k > 1 and size * k > budget:
            k -= 1
        size *= k
        net.variables[f"X{i}"] = tuple(f"s{j}" for j in range(k))
    names = list(net.variables)
    for i, v in enumerate(names):
        ps = sorted(rng.sample(names[:i], min(i, rng.randint(0, max_parents))),
                    key=names.index)
        net.parents[v] = tuple(ps)
        table = {}
        for cfg in net.parent_configurations(v):
            k = len(net.variables[v])
            row = [rng.random() + 0.01 for _ in range(k)]
            for j in range(k):
                if rng.random() < zero_density:
                    row[j] = 0.0
            if not any(row):
                row[rng.randrange(k)] = 1.0
            total = sum(row)
            table[cfg] = tuple(x / total for x in row)
        net.cpt[v] = table
    net.check()
    return net
