"""Conjunctive queries: parsing, GYO join trees and compilation into circuits.

Only alpha-acyclic queries are compiled. The circuit is built top-down along
a join tree after a full semi-join reduction: each node of the tree, for each
value of the key it shares with its parent, becomes a disjoint union over its
matching tuples, each tuple a product of the inputs for the attributes the
node introduces and of the (shared) gates of its children.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce

from .circuit import Circuit, CircuitBuilder
from .errors import CompileError, NotAcyclicError, ParseError
from .relational import Database, Relation, Tuple, natural_join, project_out


@dataclass(frozen=True)
class Atom:
    relation: str
    variables: tuple

    def __str__(self):
        return f"{self.relation}({','.join(self.variables)})"


@dataclass(frozen=True)
class ConjunctiveQuery:
    atoms: tuple
    free_vars: tuple
    name: str = "Q"

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "free_vars", tuple(self.free_vars))
        body = self.variables
        stray = [v for v in self.free_vars if v not in body]
        if stray:
            raise ParseError(f"head variables {stray} do not occur in the body")
        if len(set(self.free_vars)) != len(self.free_vars):
            raise ParseError("repeated head variable")

    @property
    def variables(self) -> tuple:
        seen = {}
        for atom in self.atoms:
            for v in atom.variables:
                seen.setdefault(v, None)
        return tuple(seen)

    @property
    def existential_vars(self) -> tuple:
        return tuple(v for v in self.variables if v not in self.free_vars)

    @property
    def is_quantifier_free(self) -> bool:
        return not self.existential_vars

    def __str__(self):
        return f"{self.name}({','.join(self.free_vars)}) :- {', '.join(map(str, self.atoms))}."


_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<punct>:-|[(),.]))")


def parse_query(text: str) -> ConjunctiveQuery:
    """Parse ``Q(x,y) :- R(x,z), S(z,y).`` (the trailing dot is optional)."""
    tokens = []
    pos = 0
    line_starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def where(p):
        line = max(i for i, s in enumerate(line_starts) if s <= p)
        return line + 1, p - line_starts[line] + 1

    while pos < len(text):
        if text[pos:].strip() == "":
            break
        if text[pos:].lstrip().startswith("%"):
            nl = text.find("\n", pos)
            pos = len(text) if nl < 0 else nl + 1
            continue
        m = _TOKEN.match(text, pos)
        if not m:
            stripped = len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[pos + stripped]!r}", *where(pos + stripped))
        kind = "name" if m.group("name") else "punct"
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    k = 0

    def expect(kind, value=None):
        nonlocal k
        tk = tokens[k]
        if tk[0] != kind or (value is not None and tk[1] != value):
            wanted = value or kind
            got = tk[1] or "end of input"
            raise ParseError(f"expected {wanted!r}, got {got!r}", *where(tk[2]))
        k += 1
        return tk[1]

    def atom():
        name = expect("name")
        expect("punct", "(")
        args = []
        if tokens[k][1] != ")":
            args.append(expect("name"))
            while tokens[k][1] == ",":
                expect("punct", ",")
                args.append(expect("name"))
        expect("punct", ")")
        return Atom(name, tuple(args))

    head = atom()
    expect("punct", ":-")
    body = [atom()]
    while tokens[k][1] == ",":
        expect("punct", ",")
        body.append(atom())
    if tokens[k][1] == ".":
        expect("punct", ".")
    expect("end")
    for a in body:
        if not a.variables:
            raise ParseError(f"atom {a} has no variables")
    return ConjunctiveQuery(tuple(body), head.variables, head.relation)


def hypergraph(Q: ConjunctiveQuery):
    """Vertices are the variables, one hyperedge per atom (as a frozenset)."""
    return frozenset(Q.variables), [frozenset(a.variables) for a in Q.atoms]


@dataclass(frozen=True)
class JoinTree:
    """Rooted tree over atom indices; ``parent[i]`` is None only for the root."""

    parent: tuple
    root: int

    def children(self, i) -> list:
        return [j for j, p in enumerate(self.parent) if p == i]

    def preorder(self) -> list:
        order, stack = [], [self.root]
        while stack:
            i = stack.pop()
            order.append(i)
            stack.extend(reversed(self.children(i)))
        return order

    def check(self, Q: ConjunctiveQuery):
        """Raise ``CompileError`` unless this is a join tree of ``Q``."""
        n = len(Q.atoms)
        if len(self.parent) != n or not 0 <= self.root < n or self.parent[self.root] is not None:
            raise CompileError("join tree does not match the query atoms")
        if len(self.preorder()) != n or sorted(self.preorder()) != list(range(n)):
            raise CompileError("join tree is not a tree over all atoms")
        edges = [frozenset(a.variables) for a in Q.atoms]
        for v in Q.variables:
            holding = {i for i in range(n) if v in edges[i]}
            tops = [i for i in holding if self.parent[i] not in holding]
            if len(tops) != 1:
                raise CompileError(f"running intersection fails for variable {v!r}")


def gyo_join_tree(Q: ConjunctiveQuery) -> JoinTree:
    """Ear removal. Raises ``NotAcyclicError`` with the stuck hyperedges."""
    _, edges = hypergraph(Q)
    n = len(edges)
    if n == 0:
        raise CompileError("query has no atoms")
    parent = [None] * n
    remaining = list(range(n))
    orphans = []
    while len(remaining) > 1:
        # smallest ears first, so wide atoms tend to end up near the root
        for e in sorted(remaining, key=lambda i: (len(edges[i]), i)):
            others = [o for o in remaining if o != e]
            shared = edges[e] & frozenset().union(*(edges[o] for o in others))
            if not shared:
                orphans.append(e)
                break
            witness = next((f for f in others if shared <= edges[f]), None)
            if witness is not None:
                parent[e] = witness
                break
        else:
            raise NotAcyclicError([edges[i] for i in remaining])
        remaining.remove(e)
    root = remaining[0]
    for e in orphans:
        parent[e] = root
    return JoinTree(tuple(parent), root)


def atom_relation(atom: Atom, db: Database) -> Relation:
    """The stored relation renamed to the atom's variables, with repeated
    variables turned into equality filters."""
    if atom.relation not in db:
        raise CompileError(f"database has no relation named {atom.relation!r}")
    stored = db[atom.relation]
    if len(stored.attributes) != len(atom.variables):
        raise CompileError(
            f"{atom} has {len(atom.variables)} arguments but {atom.relation} has arity {len(stored.attributes)}"
        )
    variables = tuple(dict.fromkeys(atom.variables))
    out = set()
    for t in stored:
        binding = {}
        for var, attr in zip(atom.variables, stored.attributes):
            if binding.setdefault(var, t[attr]) != t[attr]:
                break
        else:
            out.add(Tuple(binding))
    return Relation(variables, frozenset(out))


def eval_naive(Q: ConjunctiveQuery, db: Database) -> Relation:
    """Materialize ``Q(db)`` by nested natural joins, then project out existentials."""
    joined = reduce(natural_join, (atom_relation(a, db) for a in Q.atoms))
    if Q.existential_vars:
        joined = project_out(joined, Q.existential_vars)
    return joined


def _semijoin(left: Relation, right: Relation) -> Relation:
    shared = [a for a in left.attributes if a in right.attributes]
    keys = {tuple(t[a] for a in shared) for t in right}
    return Relation(left.attributes, frozenset(t for t in left if tuple(t[a] for a in shared) in keys))


def compile_query(Q: ConjunctiveQuery, db: Database, T: JoinTree | None = None) -> Circuit:
    """Circuit over all variables of ``Q`` whose relation is the full join."""
    if T is None:
        T = gyo_join_tree(Q)
    T.check(Q)
    rels = [atom_relation(a, db) for a in Q.atoms]
    order = T.preorder()
    for i in reversed(order):
        if T.parent[i] is not None:
            p = T.parent[i]
            rels[p] = _semijoin(rels[p], rels[i])
    for i in order:
        if T.parent[i] is not None:
            rels[i] = _semijoin(rels[i], rels[T.parent[i]])

    attrs = [set(r.attributes) for r in rels]
    key = [
        () if T.parent[i] is None else tuple(sorted(attrs[i] & attrs[T.parent[i]]))
        for i in range(len(rels))
    ]
    introduced = [
        tuple(a for a in rels[i].attributes if T.parent[i] is None or a not in attrs[T.parent[i]])
        for i in range(len(rels))
    ]
    kids = [T.children(i) for i in range(len(rels))]

    builder = CircuitBuilder()
    memo = {}

    def node_gate(i, k):
        # None means the unit relation {()} (nothing introduced below this point)
        if (i, k) in memo:
            return memo[(i, k)]
        alternatives = []
        matching = sorted(
            (t for t in rels[i] if tuple(t[a] for a in key[i]) == k),
            key=lambda t: tuple(t[a] for a in rels[i].attributes),
        )
        for t in matching:
            parts = [builder.input(a, t[a]) for a in introduced[i]]
            for c in kids[i]:
                g = node_gate(c, tuple(t[a] for a in key[c]))
                if g is not None:
                    parts.append(g)
            if not parts:
                alternatives = None
                break
            alternatives.append(parts[0] if len(parts) == 1 else builder.product(*parts))
        if alternatives is None:
            gate = None
        elif len(alternatives) == 1:
            gate = alternatives[0]
        else:
            gate = builder.union(*alternatives)
        memo[(i, k)] = gate
        return gate

    top = node_gate(T.root, ())
    if top is None:
        raise CompileError("query has no variables")
    return builder.build(top)
