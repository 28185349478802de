import random

import pytest

from qdag import Op, QDag, parse_network, random_network
from qdag.network import BeliefNetwork

TINY_BN = """\
network tiny
variable A : on off
variable B : on off
cpt A
  row 0.5 0.5
end
cpt B | A
  row on  : 0.6  0.4
  row off : 0.28 0.72
end
"""


@pytest.fixture
def tiny_text():
    return TINY_BN


@pytest.fixture
def tiny():
    return parse_network(TINY_BN)


def chain_network(cpt_c=((0.3, 0.7), (0.1, 0.9))):
    """A -> B -> C over binary variables with easily recognised labels."""
    net = BeliefNetwork(name="chain")
    for v in "ABC":
        net.variables[v] = ("t", "f")
    net.parents = {"A": (), "B": ("A",), "C": ("B",)}
    net.cpt = {
        "A": {(): (0.6, 0.4)},
        "B": {("t",): (0.25, 0.75), ("f",): (0.8, 0.2)},
        "C": {("t",): cpt_c[0], ("f",): cpt_c[1]},
    }
    net.check()
    return net


def random_case(seed):
    """One network + query/evidence choice from the seeded random suite."""
    rng = random.Random(1000 + seed)
    net = random_network(
        seed,
        n_vars=rng.randint(3, 10),
        max_states=rng.randint(2, 4),
        max_parents=rng.randint(1, 3),
        zero_density=(0.0, 0.2, 0.5)[seed % 3],
    )
    names = list(net.variables)
    query = rng.sample(names, rng.randint(1, min(2, len(names))))
    evidence = rng.sample(names, rng.randint(1, min(4, len(names))))
    return net, query, evidence


def adversarial_dags():
    """Hand-built circuits aimed at the reducer's degenerate cases."""
    out = {}

    d = QDag()
    z1, z2 = d.num(0), d.num(0)
    d.set_query("Q", "a", d.add(z1, z2))
    out["empty-sum"] = d

    d = QDag()
    o1, o2 = d.num(1), d.num(1)
    d.set_query("Q", "a", d.mul(o1, o2))
    out["empty-product"] = d

    d = QDag()
    e = d.esn("E", "x")
    s = d.add(d.num(0), d.num(0))
    d.set_query("Q", "a", d.add(s, d.mul(d.num(0.5), e)))
    out["empty-sum-under-add"] = d

    d = QDag()
    e = d.esn("E", "x")
    p = d.mul(d.num(1), d.num(1))
    d.set_query("Q", "a", d.mul(p, e, d.num(0.25)))
    out["empty-product-under-mul"] = d

    # all-zero CPT row: every term of one branch is multiplied by 0
    d = QDag()
    ex, ey = d.esn("E", "x"), d.esn("E", "y")
    t1 = d.mul(d.num(0.0), ex)
    t2 = d.mul(d.num(0.0), ey)
    t3 = d.mul(d.num(0.4), ex)
    d.set_query("Q", "a", d.add(t1, t2))
    d.set_query("Q", "b", d.add(t1, t3))
    out["all-zero-row"] = d

    # barren chain: a sum of probabilities equal to 1 multiplied into the query path
    d = QDag()
    ex, ey = d.esn("E", "x"), d.esn("E", "y")
    barren = d.add(d.mul(d.num(0.5), d.add(d.num(0.3), d.num(0.7))),
                   d.mul(d.num(0.5), d.add(d.num(0.1), d.num(0.9))))
    d.set_query("Q", "a", d.add(d.mul(d.num(0.2), ex, barren), d.mul(d.num(0.6), ey, barren)))
    d.set_query("Q", "b", d.add(d.mul(d.num(0.8), ex), d.mul(d.num(0.4), ey)))
    out["barren-chain"] = d

    d = QDag()
    e = d.esn("E", "x")
    d.set_query("Q", "a", e)
    out["query-is-esn"] = d

    d = QDag()
    d.set_query("Q", "a", d.num(0.3))
    d.set_query("Q", "b", d.num(0.7))
    out["query-is-constant"] = d

    d = QDag()
    e = d.esn("E", "x")
    z = d.mul(d.num(0), e)
    d.set_query("Q", "a", d.mul(z, d.num(0.5)))
    out["zero-under-mul-chain"] = d

    d = QDag()
    ex, ey = d.esn("E", "x"), d.esn("E", "y")
    z = d.mul(d.num(0), ey)
    d.set_query("Q", "a", d.add(d.mul(z, ex), d.mul(d.num(0.5), ex)))
    out["esn-swept-by-zero"] = d

    d = QDag()
    e = d.esn("E", "x")
    deep = d.num(0.5)
    for _ in range(6):
        deep = d.mul(deep, d.num(1.0))
    d.set_query("Q", "a", d.mul(deep, e))
    out["deep-identity-chain"] = d

    d = QDag()
    e = d.esn("E", "x")
    a = d.add(d.num(0.25), d.num(0.75))
    m = d.mul(a, d.num(1.0))
    d.set_query("Q", "a", d.mul(m, e))
    out["fold-to-one-cascade"] = d

    d = QDag()
    ex, ey = d.esn("E", "x"), d.esn("E", "y")
    shared = d.add(ex, ey)
    d.set_query("Q", "a", d.mul(shared, d.num(0.5)))
    d.set_query("Q", "b", d.mul(shared, d.num(0.0)))
    out["zero-query-with-shared"] = d

    d = QDag()
    ex = d.esn("E", "x")
    d.esn("F", "unused")
    d.set_query("Q", "a", d.mul(ex, d.num(0.9)))
    out["orphan-esn"] = d

    d = QDag()
    ex, fy = d.esn("E", "x"), d.esn("F", "y")
    d.set_query("Q", "a", d.add(d.num(0.0), d.mul(ex, fy), d.num(0.0)))
    out["zeros-around-product"] = d

    d = QDag()
    ex, fy = d.esn("E", "x"), d.esn("F", "y")
    m1 = d.mul(ex, fy)
    m2 = d.mul(m1, d.num(0.0))
    m3 = d.add(m2, d.num(0.0))
    d.set_query("Q", "a", d.add(m3, d.mul(fy, d.num(0.125))))
    out["zero-cascade-through-add"] = d

    d = QDag()
    ex = d.esn("E", "x")
    d.set_query("Q", "a", d.mul(ex))
    d.set_query("Q", "b", d.add(ex))
    out["single-parent-nodes"] = d

    out.update(_random_adversarial(3))
    return out


def _random_adversarial(count):
    out = {}
    for seed in range(count):
        rng = random.Random(seed)
        d = QDag()
        for v in "EF":
            for s in "xy":
                d.esn(v, s)
        pool = list(range(len(d)))
        for _ in range(40):
            if rng.random() < 0.35:
                pool.append(d.num(rng.choice([0.0, 1.0, 0.5, 0.25, rng.random()])))
            else:
                ps = rng.sample(pool, rng.randint(1, min(3, len(pool))))
                pool.append(d.add(*ps) if rng.random() < 0.5 else d.mul(*ps))
        for i, n in enumerate(pool[-3:]):
            d.set_query("Q", f"s{i}", n)
        out[f"random-adversarial-{seed}"] = d
    return out


def completeness_violations(dag):
    """Structural scan for anything a fully reduced dag must not contain."""
    found = []
    is_num = [n.op is Op.NUM for n in dag.nodes]
    live = set(dag.query_nodes.values())
    stack = list(live)
    while stack:
        for p in dag.parents[stack.pop()]:
            if p not in live:
                live.add(p)
                stack.append(p)
    for i, node in enumerate(dag.nodes):
        labels = [dag.nodes[p].label for p in dag.parents[i] if is_num[p]]
        if node.op is Op.MUL and any(x in (0.0, 1.0) for x in labels):
            found.append(("mul-with-identity-or-zero", i))
        if node.op is Op.ADD and 0.0 in labels:
            found.append(("add-with-zero", i))
        if node.op in (Op.ADD, Op.MUL) and all(is_num[p] for p in dag.parents[i]):
            found.append(("all-numeric-parents", i))
        if i not in live:
            found.append(("unreachable", i))
    return found
