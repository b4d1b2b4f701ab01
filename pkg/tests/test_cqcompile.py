import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from factorlp.circuit import count, enumerate_relation, validate
from factorlp.cqcompile import (
    Atom,
    ConjunctiveQuery,
    JoinTree,
    compile_query,
    eval_naive,
    gyo_join_tree,
    hypergraph,
    parse_query,
)
from factorlp.errors import CompileError, NotAcyclicError, ParseError
from factorlp.generators import PROJECTS_QUERY, random_acyclic_query, star_schema_database
from factorlp.relational import Database, Relation, Tuple

TRIANGLE = "Q(x,y,z) :- R(x,y), S(y,z), T(z,x)."


def within_factor(ratio, ideal, factor=1.5):
    return ideal / factor <= ratio <= ideal * factor


def test_parse_query():
    Q = parse_query(PROJECTS_QUERY)
    assert Q.name == "Q"
    assert Q.free_vars == ("p", "r", "d", "f", "l")
    assert [a.relation for a in Q.atoms] == ["projects", "researchers", "developers"]
    assert Q.is_quantifier_free
    E = parse_query("Q(x) :- R(x, y)")
    assert E.existential_vars == ("y",)
    assert parse_query("% comment\nQ(x) :-\n  R(x).").atoms == (Atom("R", ("x",)),)


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as info:
        parse_query("Q(x) :-\n  R(x) S(x).")
    assert (info.value.line, info.value.column) == (2, 8)
    with pytest.raises(ParseError):
        parse_query("Q(x) :- R(y).")
    with pytest.raises(ParseError):
        parse_query("Q(x) :- R(x), $")


def test_hypergraph():
    vertices, edges = hypergraph(parse_query(PROJECTS_QUERY))
    assert vertices == {"p", "r", "d", "f", "l"}
    assert edges == [{"p", "f", "l"}, {"r", "f"}, {"d", "l"}]
    assert hypergraph(parse_query("Q(x,y) :- R(x,y)."))[1] == [{"x", "y"}]
    _, disjoint = hypergraph(parse_query("Q(x,y) :- R(x), S(y)."))
    assert disjoint == [{"x"}, {"y"}] and not disjoint[0] & disjoint[1]


def test_join_tree_of_motivating_query():
    Q = parse_query(PROJECTS_QUERY)
    T = gyo_join_tree(Q)
    assert Q.atoms[T.root].relation == "projects"
    assert sorted(Q.atoms[c].relation for c in T.children(T.root)) == ["developers", "researchers"]
    T.check(Q)


def test_triangle_is_not_acyclic():
    with pytest.raises(NotAcyclicError) as info:
        gyo_join_tree(parse_query(TRIANGLE))
    assert len(info.value.residual) == 3


def test_single_atom_tree():
    T = gyo_join_tree(parse_query("Q(x,y) :- R(x,y)."))
    assert T == JoinTree((None,), 0)


def test_invalid_join_tree_rejected(projects_db):
    Q = parse_query("Q(x,y,z) :- R(x,y), S(y,z), T(z,w).")
    bad = JoinTree((None, 2, 0), 0)  # y is split between R and S
    with pytest.raises(CompileError):
        bad.check(Q)


def test_compile_motivating_example(projects_db):
    Q = parse_query(PROJECTS_QUERY)
    C = compile_query(Q, projects_db)
    assert count(C) == 12
    assert enumerate_relation(C) == eval_naive(Q, projects_db)
    assert validate(C, check_disjointness=True).ok


def test_compile_single_atom():
    db = Database({"R": Relation.from_rows(("a", "b"), [("1", "2")])})
    C = compile_query(parse_query("Q(x,y) :- R(x,y)."), db)
    assert set(enumerate_relation(C)) == {Tuple(x="1", y="2")}


def test_single_atom_gate_count_is_linear():
    sizes = []
    for n in (10, 20, 40):
        db = Database({"R": Relation.from_rows(("a", "b"), [(str(i), str(i % 3)) for i in range(n)])})
        sizes.append(len(compile_query(parse_query("Q(x,y) :- R(x,y)."), db).gates))
    assert within_factor(sizes[1] / sizes[0], 2)
    assert within_factor(sizes[2] / sizes[1], 2)


def test_compile_empty_join():
    db = Database({
        "R": Relation.from_rows(("a", "b"), [("1", "2")]),
        "S": Relation.from_rows(("b", "c"), [("3", "4")]),
    })
    C = compile_query(parse_query("Q(x,y,z) :- R(x,y), S(y,z)."), db)
    assert count(C) == 0
    assert len(eval_naive(parse_query("Q(x,y,z) :- R(x,y), S(y,z)."), db)) == 0


def test_compile_errors(projects_db):
    with pytest.raises(CompileError):
        compile_query(parse_query("Q(x) :- missing(x)."), projects_db)
    with pytest.raises(CompileError):
        compile_query(parse_query("Q(x) :- researchers(x)."), projects_db)
    with pytest.raises(NotAcyclicError):
        compile_query(parse_query(TRIANGLE), projects_db)


def test_repeated_variable_filters():
    db = Database({"R": Relation.from_rows(("a", "b"), [("1", "1"), ("1", "2"), ("3", "3")])})
    Q = parse_query("Q(x) :- R(x,x).")
    assert set(enumerate_relation(compile_query(Q, db))) == {Tuple(x="1"), Tuple(x="3")}
    assert eval_naive(Q, db) == enumerate_relation(compile_query(Q, db))


def test_eval_naive_cases(projects_db):
    assert len(eval_naive(parse_query(PROJECTS_QUERY), projects_db)) == 12
    identity = eval_naive(parse_query("Q(a,b) :- researchers(a,b)."), projects_db)
    assert set(identity.rows()) == set(projects_db["researchers"].rows())
    nothing = eval_naive(parse_query("Q(p,f,l,r) :- projects(p,f,l), researchers(r,l)."), projects_db)
    assert len(nothing) == 0


def test_existential_query_compiles_over_all_variables(projects_db):
    Q = parse_query("Q(p) :- projects(p,f,l), developers(d,l).")
    C = compile_query(Q, projects_db)
    assert C.variables == {"p", "f", "l", "d"}
    assert set(eval_naive(Q, projects_db).rows()) == {("p1",), ("p2",)}


def test_star_schema_gate_growth_is_linear():
    Q = parse_query(PROJECTS_QUERY)
    sizes = {n: len(compile_query(Q, star_schema_database(n)).gates) for n in (10, 20, 40)}
    assert within_factor(sizes[20] / sizes[10], 2)
    assert within_factor(sizes[40] / sizes[20], 2)


def test_query_variables_must_be_in_body():
    with pytest.raises(ParseError):
        ConjunctiveQuery((Atom("R", ("x",)),), ("y",))


@settings(max_examples=120, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), existential=st.booleans())
def test_compile_matches_naive(seed, existential):
    Q, db = random_acyclic_query(random.Random(seed), max_atoms=4, existential=existential)
    T = gyo_join_tree(Q)
    T.check(Q)
    C = compile_query(Q, db, T)
    full = ConjunctiveQuery(Q.atoms, Q.variables)
    # an empty circuit has no attributes, so compare the tuple sets
    assert set(enumerate_relation(C)) == set(eval_naive(full, db))
    assert validate(C, check_disjointness=True).ok
