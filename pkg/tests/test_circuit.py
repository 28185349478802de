import struct

import pytest
from hypothesis import given, settings, strategies as st

from qdag import ADD, MUL, Esn, Num, QDag, parse, serialize, topological_order, validate
from qdag.errors import ParseError, StructureError


def test_add_node_first_insertion_and_mirror():
    d = QDag()
    assert d.add_node(Num(0.4), []) == 0
    assert d.add_node(MUL, [0]) == 1
    assert d.children[0] == [1]
    assert d.parents[1] == [0]


@pytest.mark.parametrize("kind, parents, code", [
    (MUL, [0, 0], "duplicate-parent"),
    (ADD, [7], "unknown-parent"),
    (Num(0.2), [0], "root-kind-with-parents"),
    (Esn("C", "on"), [], "duplicate-esn"),
    (ADD, [], "empty-parents"),
    (Num(-0.1), [], "bad-label"),
    (Num(float("nan")), [], "bad-label"),
])
def test_add_node_errors(kind, parents, code):
    d = QDag()
    d.num(0.4)
    d.esn("C", "on")
    with pytest.raises(StructureError) as err:
        d.add_node(kind, parents)
    assert err.value.code == code


def test_num_labels_above_one_allowed():
    d = QDag()
    d.num(1.7)
    assert validate(d) == []


@pytest.mark.parametrize("edges, expected", [
    ([(0, 2), (1, 2)], [0, 1, 2]),
    ([], [0]),
    ([(0, 1), (1, 2)], [0, 1, 2]),
])
def test_topological_order(edges, expected):
    d = QDag()
    n = 1 + max([b for _, b in edges], default=0)
    for i in range(n):
        ps = [a for a, b in edges if b == i]
        d.add_node(ADD if ps else Num(0.5), ps)
    assert topological_order(d) == expected


def test_topological_order_detects_cycle():
    d = QDag()
    d.num(0.5)
    d.add(0)
    d.add(1)
    # corrupt: 2 -> 1
    d.parents[1].append(2)
    d.children[2].append(1)
    with pytest.raises(StructureError, match="cycle"):
        topological_order(d)


def test_validate_well_formed_and_mirror_mismatch():
    d = QDag()
    d.num(0.5)
    d.num(0.5)
    d.add(0)
    assert validate(d) == []
    d.children[0] = []
    problems = validate(d)
    assert [(p.code, p.node) for p in problems] == [("mirror-mismatch", 0)]


def test_validate_duplicate_esn():
    d = QDag()
    d.esn("C", "on")
    d.nodes.append(Esn("C", "on"))
    d.parents.append([])
    d.children.append([])
    assert "duplicate-esn" in {p.code for p in validate(d)}


def chain3():
    d = QDag()
    a = d.num(0.25)
    b = d.mul(a)
    c = d.add(b)
    d.set_query("X", "x", c)
    return d


def test_serialize_chain_is_deterministic():
    text = serialize(chain3())
    assert text == "qdag v1 3\n0 NUM 0.25\n1 MUL 0\n2 ADD 1\nquery 2 X x\n"
    assert serialize(parse(text)) == text


def test_parse_label_roundtrip_exact():
    d = parse("qdag v1 1\n0 NUM 0.25\nquery 0 V v\n")
    assert d.nodes[0].label == 0.25


def test_parse_forward_reference():
    text = "qdag v1 6\n0 NUM 0.1\n1 NUM 0.1\n2 NUM 0.1\n3 ADD 5\n4 NUM 0.1\n5 NUM 0.1\n"
    with pytest.raises(ParseError, match="forward-reference") as err:
        parse(text)
    assert err.value.line == 5


@pytest.mark.parametrize("text, fragment", [
    ("", "header"),
    ("qdag v2 1\n0 NUM 1\n", "header"),
    ("qdag v1 2\n0 NUM 1\n", "announces"),
    ("qdag v1 1\n0 NUM x\n", "bad number"),
    ("qdag v1 1\n0 FOO 1\n", "unknown node kind"),
    ("qdag v1 2\n0 NUM 1\n0 NUM 1\n", "expected node id 1"),
    ("qdag v1 1\n0 NUM 1\nquery 3 V v\n", "unknown node"),
    ("qdag v1 2\n0 NUM 1\nquery 0 V v\n1 MUL 0\n", "after query"),
    ("qdag v1 2\n0 ESN A a\n1 ESN A a\n", "duplicate-esn"),
    ("qdag v1 2\n0 NUM 1\n1 ADD 0 0\n", "duplicate-parent"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(ParseError, match=fragment):
        parse(text)


def test_parse_ignores_comments_and_blank_lines():
    text = "# made by hand\nqdag v1 1\n\n# node\n0 ESN A a\nquery 0 A a\n"
    d = parse(text)
    assert d.query_nodes == {("A", "a"): 0}


def test_serialize_renumbers_into_canonical_order():
    d = QDag()
    a = d.num(0.5)
    b = d.esn("E", "e")
    m = d.mul(a, b)
    d.set_query("Q", "q", m)
    d2 = parse(serialize(d))
    assert [repr(n) for n in d2.nodes] == [repr(n) for n in d.nodes]
    assert d2.parents == d.parents


@st.composite
def dags(draw):
    d = QDag()
    n_esn = draw(st.integers(0, 3))
    for i in range(n_esn):
        d.esn(f"V{i}", "s")
    for _ in range(draw(st.integers(1, 4))):
        d.num(draw(st.floats(0, 2, allow_nan=False, allow_infinity=False)))
    for _ in range(draw(st.integers(0, 10))):
        ps = draw(st.lists(st.integers(0, len(d) - 1), min_size=1, max_size=3, unique=True))
        d.add_node(draw(st.sampled_from([ADD, MUL])), ps)
    d.set_query("Q", "q", len(d) - 1)
    return d


@settings(max_examples=60, deadline=None)
@given(dags())
def test_roundtrip_bit_exact(d):
    text = serialize(d)
    d2 = parse(text)
    assert serialize(d2) == text
    for a, b in zip(d.nodes, d2.nodes):
        if a.label is not None:
            assert struct.pack("<d", a.label) == struct.pack("<d", b.label)
    assert validate(d2) == []
