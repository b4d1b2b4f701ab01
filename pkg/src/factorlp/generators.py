"""Random instances for property tests and the benchmark, plus the research-projects example."""
from __future__ import annotations

import random

from .caslp import CASLP, CASConstraint, CASVariable
from .circuit import INPUT, PRODUCT, UNION, Circuit, CircuitBuilder
from .cqcompile import Atom, ConjunctiveQuery
from .relational import Database, Relation, Tuple

ATTRIBUTE_NAMES = ("a", "b", "c", "d", "e", "f")


class _Node:
    __slots__ = ("kind", "children", "label", "rel", "fresh")

    def __init__(self, kind, children=(), label=None, rel=frozenset(), fresh=False):
        self.kind = kind
        self.children = tuple(children)
        self.label = label
        self.rel = rel
        self.fresh = fresh


def _product_rel(children):
    acc = [Tuple()]
    for c in children:
        acc = [a * b for a in acc for b in c.rel]
    return frozenset(acc)


class _CircuitSampler:
    def __init__(self, rng, values, sharing=0.7):
        self.rng = rng
        self.values = values
        self.sharing = sharing
        self.pool = {}

    def leaf(self, attr, value):
        fresh = self.rng.random() < 0.4
        return _Node(INPUT, label=(attr, value), rel=frozenset([Tuple({attr: value})]), fresh=fresh)

    def union(self, children):
        rel = frozenset().union(*(c.rel for c in children))
        return _Node(UNION, children, rel=rel)

    def product(self, children):
        return _Node(PRODUCT, children, rel=_product_rel(children))

    def gen(self, attrs, depth):
        rng = self.rng
        pooled = self.pool.get(attrs)
        if pooled and rng.random() < self.sharing:
            return rng.choice(pooled)
        node = self._fresh(attrs, depth)
        if rng.random() < 0.07:
            node = (self.union if rng.random() < 0.5 else self.product)([node])
        self.pool.setdefault(attrs, []).append(node)
        return node

    def _fresh(self, attrs, depth):
        rng = self.rng
        ordered = sorted(attrs)
        if len(ordered) == 1:
            (x,) = ordered
            k = rng.randint(1, len(self.values))
            picked = rng.sample(self.values, k)
            leaves = [self.leaf(x, d) for d in picked]
            return leaves[0] if k == 1 else self.union(leaves)
        choice = rng.random()
        if depth <= 0 or choice < 0.45:
            blocks = rng.randint(2, min(3, len(ordered)))
            rng.shuffle(ordered)
            cuts = sorted(rng.sample(range(1, len(ordered)), blocks - 1))
            parts = [frozenset(ordered[i:j]) for i, j in zip([0] + cuts, cuts + [len(ordered)])]
            return self.product([self.gen(p, depth - 1) for p in parts])
        if choice < 0.85:
            x = rng.choice(ordered)
            rest = attrs - {x}
            k = rng.randint(1, len(self.values))
            branches = [self.product([self.leaf(x, d), self.gen(rest, depth - 1)]) for d in rng.sample(self.values, k)]
            return branches[0] if k == 1 else self.union(branches)
        first = self.gen(attrs, depth - 1)
        second = self.gen(attrs, depth - 1)
        if first is second or first.rel & second.rel:
            return first
        return self.union([first, second])


def _emit(root: _Node) -> Circuit:
    builder = CircuitBuilder()
    ids = {}
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in ids:
            continue
        if node.kind == INPUT:
            ids[id(node)] = builder.input(*node.label, fresh=node.fresh)
            continue
        if not expanded:
            stack.append((node, True))
            stack.extend((c, False) for c in node.children if id(c) not in ids)
            continue
        kids = [ids[id(c)] for c in node.children]
        ids[id(node)] = builder.union(*kids) if node.kind == UNION else builder.product(*kids)
    return builder.build(ids[id(root)])


def random_circuit(rng: random.Random, max_gates=12, max_attrs=4, max_domain=3) -> Circuit:
    """A valid dd-circuit (not normalized) with at most ``max_gates`` gates."""
    while True:
        n_attrs = min(max_attrs, rng.choice((1, 2, 3, 3, 4, 4, 4)))
        values = [str(v) for v in range(rng.randint(1, max_domain))]
        sampler = _CircuitSampler(rng, values)
        root = sampler.gen(frozenset(ATTRIBUTE_NAMES[:n_attrs]), depth=3)
        C = _emit(root)
        if rng.random() < 0.4:
            C = _split_shared_input(C, rng)
        if len(C.gates) <= max_gates:
            return C


def _split_shared_input(C: Circuit, rng) -> Circuit:
    """Give one parent of a shared input its own copy (same label, new gate)."""
    shared = [g for g, outs in enumerate(C.out_edges) if C.gates[g].kind == INPUT and len(outs) > 1]
    if not shared:
        return C
    g = rng.choice(shared)
    parent = C.edges[rng.choice(C.out_edges[g])][1]
    gates = list(C.gates) + [C.gates[g]]
    old = gates[parent]
    gates[parent] = type(old)(old.kind, tuple(len(gates) - 1 if c == g else c for c in old.children))
    return Circuit(tuple(gates), C.root)


def random_caslp(rng: random.Random, attributes, domain, max_constraints=5, budget_probability=0.5) -> CASLP:
    """Random CAS-LP: coefficients in -2..2, bounds in [0, 5], any relation.

    With ``budget_probability`` one constraint caps the total weight, which
    makes bounded (Optimal) outcomes common.
    """
    attributes = tuple(attributes)
    domain = {a: tuple(domain[a]) for a in attributes}
    variables = [CASVariable(a, d) for a in attributes for d in domain[a]]

    def random_form(max_terms):
        form = {}
        for var in rng.sample(variables, rng.randint(1, min(max_terms, len(variables)))):
            coef = rng.randint(-2, 2)
            if coef:
                form[var] = float(coef)
        return form

    m = rng.randint(0, max_constraints)
    constraints = []
    if m and rng.random() < budget_probability:
        first = attributes[0]
        budget = {CASVariable(first, d): 1.0 for d in domain[first]}
        constraints.append(CASConstraint(budget, "<=", round(rng.uniform(0, 5), 2)))
    while len(constraints) < m:
        rel = rng.choice(["<=", "<=", "=", ">="])
        constraints.append(CASConstraint(random_form(3), rel, round(rng.uniform(0, 5), 2)))
    rng.shuffle(constraints)
    return CASLP(attributes, domain, random_form(4), constraints)


def random_relation(rng: random.Random, attributes, n_values=3, max_tuples=20) -> Relation:
    values = [str(v) for v in range(n_values)]
    rows = [[rng.choice(values) for _ in attributes] for _ in range(rng.randint(0, max_tuples))]
    return Relation.from_rows(attributes, rows)


def random_acyclic_query(rng: random.Random, max_atoms=4, existential=False):
    """Random alpha-acyclic query and a matching random database."""
    counter = iter(range(100))
    fresh = lambda: f"v{next(counter)}"  # noqa: E731
    atoms_vars = [[fresh() for _ in range(rng.randint(1, 3))]]
    for _ in range(rng.randint(1, max_atoms) - 1):
        parent = rng.choice(atoms_vars)
        shared = rng.sample(parent, rng.randint(0, len(parent)))
        new = shared + [fresh() for _ in range(rng.randint(0 if shared else 1, 2))]
        rng.shuffle(new)
        atoms_vars.append(new)
    rng.shuffle(atoms_vars)
    if rng.random() < 0.2:
        victim = rng.choice(atoms_vars)
        victim.append(rng.choice(victim))

    relations = {}
    atoms = []
    n_values = rng.randint(2, 3)
    for k, vs in enumerate(atoms_vars):
        same_arity = [name for name, rel in relations.items() if len(rel.attributes) == len(vs)]
        if same_arity and rng.random() < 0.2:
            name = rng.choice(same_arity)
        else:
            name = f"R{k}"
            relations[name] = random_relation(rng, [f"c{i}" for i in range(len(vs))], n_values)
        atoms.append(Atom(name, tuple(vs)))
    variables = list(dict.fromkeys(v for vs in atoms_vars for v in vs))
    free = variables
    if existential and len(variables) > 1:
        free = rng.sample(variables, rng.randint(1, len(variables) - 1))
    return ConjunctiveQuery(tuple(atoms), tuple(free)), Database(relations)


# -- research projects example --------------------------------------------

PROJECTS_QUERY = "Q(p,r,d,f,l) :- projects(p,f,l), researchers(r,f), developers(d,l)."

PROJECTS_CASLP = {
    "attributes": ["p", "r", "d", "f", "l"],
    "domain": "auto",
    "sense": "max",
    "objective": [{"attr": "p", "value": "*", "coef": 1}],
    "constraints": [
        {"forall": "r", "terms": [{"attr": "r", "value": "$", "coef": 1}], "rel": "<=", "bound": 100},
        {"forall": "d", "terms": [{"attr": "d", "value": "$", "coef": 1}], "rel": "<=", "bound": 100},
    ],
}


def projects_database() -> Database:
    return Database({
        "projects": Relation.from_rows(
            ("pname", "field", "language"), [("p1", "ML", "Python"), ("p2", "DBs", "Python")], "projects"
        ),
        "researchers": Relation.from_rows(
            ("rname", "field"),
            [("Alice", "ML"), ("Bob", "ML"), ("Carol", "ML"), ("David", "DBs")],
            "researchers",
        ),
        "developers": Relation.from_rows(
            ("dname", "language"), [("Eve", "Python"), ("Frida", "Python"), ("Guy", "Python")], "developers"
        ),
    })


def star_schema_database(n: int) -> Database:
    """``n`` projects, researchers and developers, all sharing one field and language."""
    return Database({
        "projects": Relation.from_rows(("pname", "field", "language"), [(f"p{i}", "f0", "l0") for i in range(n)]),
        "researchers": Relation.from_rows(("rname", "field"), [(f"r{i}", "f0") for i in range(n)]),
        "developers": Relation.from_rows(("dname", "language"), [(f"d{i}", "l0") for i in range(n)]),
    })


# -- small worked examples ---------------------------------------------------

EXAMPLE_ROWS = [("1", "1", "0"), ("1", "0", "1"), ("0", "1", "1"), ("0", "1", "0"), ("1", "1", "1")]
DWC_ROWS = [("1", "1", "0"), ("1", "0", "1"), ("0", "1", "1")]


def example_circuit() -> Circuit:
    """dd-circuit over x, y, z computing ``EXAMPLE_ROWS``; the z-union is shared."""
    b = CircuitBuilder()
    z_any = b.union(b.input("z", "0"), b.input("z", "1"))
    x1_part = b.union(b.product(b.input("y", "1"), z_any), b.product(b.input("y", "0"), b.input("z", "1")))
    x0_part = b.product(b.input("y", "1"), z_any)
    return b.build(b.union(b.product(b.input("x", "1"), x1_part), b.product(b.input("x", "0"), x0_part)))


def example_relation() -> Relation:
    return Relation.from_rows(("x", "y", "z"), EXAMPLE_ROWS, "S")


def dwc_example_relation() -> Relation:
    return Relation.from_rows(("x", "y", "z"), DWC_ROWS, "S")
