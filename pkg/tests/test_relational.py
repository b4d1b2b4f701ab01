import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from factorlp.errors import ParseError, SchemaError
from factorlp.relational import (
    Relation,
    Tuple,
    extensions,
    load_relation,
    natural_join,
    project_out,
    select_eq,
)

SAMPLE_CSV = "1,1,0\n1,0,1\n0,1,1\n0,1,0\n1,1,1\n"


def rel(attrs, *rows):
    return Relation.from_rows(attrs, rows)


def test_load_sample_relation():
    R = load_relation(io.StringIO(SAMPLE_CSV), "S", ["x", "y", "z"])
    assert len(R) == 5
    assert R.attributes == ("x", "y", "z")
    assert Tuple(x="0", y="1", z="0") in R


def test_load_empty_and_duplicates():
    assert len(load_relation("", "E", ["x"])) == 0
    assert len(load_relation("1,2\n1,2\n", "D", ["a", "b"])) == 1


def test_load_header_and_delimiter():
    R = load_relation("a;b\n1;2\n", "R", ["a", "b"], header=True, delimiter=";")
    assert R.rows() == [("1", "2")]


def test_load_arity_error_has_line_number():
    with pytest.raises(ParseError) as info:
        load_relation("1,2\n3\n", "R", ["a", "b"])
    assert info.value.line == 2


def test_load_rejects_empty_schema():
    with pytest.raises(SchemaError):
        load_relation("1\n", "R", [])


def test_values_are_opaque_tokens():
    R = load_relation("01,1.0\n", "R", ["a", "b"])
    assert R.rows() == [("01", "1.0")]


def test_select_eq(sample_relation):
    got = select_eq(sample_relation, "x", "1")
    assert set(got.rows()) == {("1", "1", "0"), ("1", "0", "1"), ("1", "1", "1")}
    assert len(select_eq(sample_relation, "x", "7")) == 0
    single = rel(("a",), ("1",))
    assert select_eq(single, "a", 1) == single
    with pytest.raises(SchemaError):
        select_eq(sample_relation, "q", "1")


def test_project_out(sample_relation):
    got = project_out(sample_relation, {"z"})
    assert got.attributes == ("x", "y")
    assert set(got.rows()) == {("1", "1"), ("1", "0"), ("0", "1")}
    assert project_out(sample_relation, set()) == sample_relation
    assert project_out(rel(("a", "b"), ("1", "2")), {"b"}) == rel(("a",), ("1",))
    with pytest.raises(SchemaError):
        project_out(sample_relation, {"x", "y", "z"})


def test_natural_join(projects_db):
    researchers = projects_db["researchers"]
    projects = projects_db["projects"]
    joined = natural_join(researchers, projects)
    assert len(joined) == 4
    assert set(joined.attributes) == {"rname", "field", "pname", "language"}
    assert len(natural_join(researchers, Relation(("field",), frozenset()))) == 0
    one = rel(("a",), ("1",))
    assert natural_join(one, one) == one


def test_join_without_shared_attributes_is_product():
    assert len(natural_join(rel(("a",), ("1",), ("2",)), rel(("b",), ("1",), ("2",), ("3",)))) == 6


def test_extensions(sample_relation):
    exts = extensions(sample_relation, ["z"], Tuple(x="1", y="1"))
    assert exts == {Tuple(z="0"), Tuple(z="1")}
    assert extensions(sample_relation, ["z"], Tuple(x="0", y="0")) == set()
    assert extensions(rel(("a", "b"), ("1", "2")), ["b"], Tuple(a="1")) == {Tuple(b="2")}


def test_attribute_order_does_not_affect_equality():
    assert rel(("a", "b"), ("1", "2")) == rel(("b", "a"), ("2", "1"))


def test_tuple_product_rejects_overlap():
    with pytest.raises(SchemaError):
        Tuple(a="1") * Tuple(a="2")


def test_relation_json_round_trip(sample_relation):
    assert Relation.from_json(sample_relation.to_json()) == sample_relation


# -- properties --------------------------------------------------------------

ATTRS = ("a", "b", "c")
relations = st.lists(st.tuples(*[st.sampled_from("012")] * 3), max_size=15).map(lambda rows: rel(ATTRS, *rows))


@settings(max_examples=60, deadline=None)
@given(R=relations, x=st.sampled_from(ATTRS))
def test_selections_partition(R, x):
    parts = [set(select_eq(R, x, d)) for d in R.active_domain(x)]
    assert sum(len(p) for p in parts) == len(R)
    assert set().union(*parts) == set(R)


@settings(max_examples=60, deadline=None)
@given(R=relations, Z=st.sets(st.sampled_from(ATTRS), min_size=1, max_size=2))
def test_projection_and_extensions_reconstruct(R, Z):
    P = project_out(R, Z)
    sizes = [len(extensions(R, sorted(Z), tp)) for tp in P]
    assert all(sizes)
    assert sum(sizes) == len(R)


sub_relations = st.sampled_from([("a", "b"), ("b", "c"), ("a", "c"), ("c",)]).flatmap(
    lambda attrs: st.lists(st.tuples(*[st.sampled_from("01")] * len(attrs)), max_size=6).map(
        lambda rows: rel(attrs, *rows)
    )
)


@settings(max_examples=60, deadline=None)
@given(R=sub_relations, S=sub_relations, T=sub_relations)
def test_join_commutative_and_associative(R, S, T):
    assert natural_join(R, S) == natural_join(S, R)
    assert natural_join(natural_join(R, S), T) == natural_join(R, natural_join(S, T))
