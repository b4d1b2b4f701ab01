"""{⊎,×}-circuits: construction, validation, normalization and semantics.

Gates live in a flat list and refer to their children by index. Edges are
derived, pointing from a child to its parent, and numbered parent-major,
child-position-minor. A *normalized* circuit has binary (or unary) internal
gates, at most one input per ``attr/value`` label, and a unary union sentinel
as root whose only ingoing edge is the output edge.
"""
from __future__ import annotations

import itertools
import json
from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property

from .errors import CircuitError, MembershipError, ParseError
from .relational import Relation, Tuple

INPUT = "input"
UNION = "union"
PRODUCT = "product"
KINDS = (INPUT, UNION, PRODUCT)


@dataclass(frozen=True)
class Gate:
    kind: str
    children: tuple = ()
    attr: str | None = None
    value: str | None = None

    @property
    def label(self):
        return (self.attr, self.value)

    def __repr__(self):
        if self.kind == INPUT:
            return f"Input({self.attr}/{self.value})"
        return f"{self.kind.capitalize()}{list(self.children)}"


@dataclass(frozen=True, eq=False)
class Circuit:
    gates: tuple
    root: int

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))

    # -- graph structure -------------------------------------------------

    @cached_property
    def edges(self) -> tuple:
        """``(child, parent)`` pairs indexed by edge id."""
        return tuple((c, p) for p, g in enumerate(self.gates) for c in g.children)

    @cached_property
    def in_edges(self) -> tuple:
        """Edge ids coming from the children of each gate, in child order."""
        out = [[] for _ in self.gates]
        for eid, (_, p) in enumerate(self.edges):
            out[p].append(eid)
        return tuple(tuple(x) for x in out)

    @cached_property
    def out_edges(self) -> tuple:
        out = [[] for _ in self.gates]
        for eid, (c, _) in enumerate(self.edges):
            out[c].append(eid)
        return tuple(tuple(x) for x in out)

    @property
    def size(self) -> int:
        return len(self.edges)

    @cached_property
    def topological_order(self) -> tuple:
        """Gate ids with every child before its parents. Raises on cycles."""
        state = [0] * len(self.gates)
        order = []
        for start in range(len(self.gates)):
            if state[start]:
                continue
            stack = [(start, iter(self.gates[start].children))]
            state[start] = 1
            while stack:
                g, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    stack.pop()
                    state[g] = 2
                    order.append(g)
                elif state[nxt] == 1:
                    raise CircuitError(f"cycle through gate {nxt}")
                elif state[nxt] == 0:
                    state[nxt] = 1
                    stack.append((nxt, iter(self.gates[nxt].children)))
        return tuple(order)

    @cached_property
    def gate_vars(self) -> tuple:
        """``var(C_u)`` for every gate ``u``."""
        out = [frozenset()] * len(self.gates)
        for g in self.topological_order:
            gate = self.gates[g]
            if gate.kind == INPUT:
                out[g] = frozenset([gate.attr])
            else:
                out[g] = frozenset().union(*(out[c] for c in gate.children))
        return tuple(out)

    @property
    def variables(self) -> frozenset:
        return self.gate_vars[self.root]

    def inputs(self, attr, value) -> list:
        value = str(value)
        return [i for i, g in enumerate(self.gates) if g.kind == INPUT and g.attr == attr and g.value == value]

    @cached_property
    def input_index(self) -> Mapping:
        """``(attr, value) -> [gate ids]`` over all input gates."""
        index = {}
        for i, g in enumerate(self.gates):
            if g.kind == INPUT:
                index.setdefault(g.label, []).append(i)
        return index

    @property
    def output_edge(self) -> int:
        root = self.gates[self.root]
        if root.kind != UNION or len(root.children) != 1:
            raise CircuitError("circuit has no output edge; normalize it first")
        return self.in_edges[self.root][0]

    @cached_property
    def is_normalized(self) -> bool:
        try:
            self.topological_order
        except CircuitError:
            return False
        root = self.gates[self.root]
        if root.kind != UNION or len(root.children) != 1:
            return False
        if any(len(v) > 1 for v in self.input_index.values()):
            return False
        for i, g in enumerate(self.gates):
            if g.kind == INPUT:
                continue
            if len(g.children) > 2:
                return False
            if not g.children and not (g.kind == UNION and i == root.children[0]):
                return False
            if self.root in g.children:
                return False
        return True

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        gates = []
        for i, g in enumerate(self.gates):
            entry = {"id": i, "kind": g.kind}
            if g.kind == INPUT:
                entry["attr"] = g.attr
                entry["value"] = g.value
            else:
                entry["children"] = list(g.children)
            gates.append(entry)
        return {"gates": gates, "root": self.root}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, data) -> Circuit:
        if isinstance(data, str):
            data = json.loads(data)
        try:
            ids = {}
            for pos, entry in enumerate(data["gates"]):
                if entry["id"] in ids:
                    raise ParseError(f"duplicate gate id {entry['id']!r}")
                ids[entry["id"]] = pos
            gates = []
            for entry in data["gates"]:
                kind = entry["kind"]
                if kind not in KINDS:
                    raise ParseError(f"unknown gate kind {kind!r}")
                if kind == INPUT:
                    gates.append(Gate(INPUT, (), str(entry["attr"]), str(entry["value"])))
                else:
                    children = tuple(ids[c] for c in entry.get("children", []))
                    gates.append(Gate(kind, children))
            return cls(tuple(gates), ids[data["root"]])
        except KeyError as exc:
            raise ParseError(f"circuit JSON is missing or references unknown key {exc}") from None


class CircuitBuilder:
    """Incremental construction. Inputs are shared per label unless ``fresh``."""

    def __init__(self):
        self.gates = []
        self._inputs = {}

    def input(self, attr, value, fresh=False) -> int:
        label = (str(attr), str(value))
        if not fresh and label in self._inputs:
            return self._inputs[label]
        self.gates.append(Gate(INPUT, (), *label))
        gid = len(self.gates) - 1
        self._inputs.setdefault(label, gid)
        return gid

    def union(self, *children) -> int:
        self.gates.append(Gate(UNION, tuple(children)))
        return len(self.gates) - 1

    def product(self, *children) -> int:
        self.gates.append(Gate(PRODUCT, tuple(children)))
        return len(self.gates) - 1

    def build(self, root) -> Circuit:
        return Circuit(tuple(self.gates), root)


# -- validation ------------------------------------------------------------


@dataclass
class ValidationReport:
    structural_ok: bool = True
    violations: list = field(default_factory=list)
    disjointness_checked: bool = False
    disjointness_ok: bool | None = None

    def add(self, rule, where, message):
        self.violations.append((rule, where, message))

    @property
    def ok(self) -> bool:
        return self.structural_ok and self.disjointness_ok is not False

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "structural_ok": self.structural_ok,
            "disjointness_checked": self.disjointness_checked,
            "disjointness_ok": self.disjointness_ok,
            "violations": [{"rule": r, "at": w, "message": m} for r, w, m in self.violations],
        }


def validate(C: Circuit, check_disjointness=False) -> ValidationReport:
    """Check the structural circuit rules; optionally brute-force disjointness."""
    report = ValidationReport()
    n = len(C.gates)
    if not 0 <= C.root < n:
        report.add("root", C.root, "root index out of range")
        report.structural_ok = False
        return report
    for i, g in enumerate(C.gates):
        if g.kind not in KINDS:
            report.add("kind", i, f"unknown gate kind {g.kind!r}")
        for c in g.children:
            if not 0 <= c < n:
                report.add("child-index", i, f"child {c} out of range")
        if g.kind == INPUT and (g.children or g.attr is None or g.value is None):
            report.add("input", i, "inputs carry an attr/value label and no children")
    if report.violations:
        report.structural_ok = False
        return report
    try:
        C.topological_order
    except CircuitError as exc:
        report.add("acyclic", None, str(exc))
        report.structural_ok = False
        return report

    sinks = [i for i in range(n) if not C.out_edges[i]]
    if sinks != [C.root]:
        report.add("single-root", sinks, f"gates without parents {sinks}, expected only the root {C.root}")
    root = C.gates[C.root]
    for i, g in enumerate(C.gates):
        if g.kind == INPUT:
            continue
        if not g.children:
            empty_ok = g.kind == UNION and (
                i == C.root or (root.kind == UNION and root.children == (i,))
            )
            if not empty_ok:
                report.add("empty-gate", i, "only the root (or its sole child) may be an empty union")
            continue
        child_vars = [C.gate_vars[c] for c in g.children]
        if g.kind == UNION and len(set(child_vars)) > 1:
            report.add("union-vars", i, f"children of union have different attributes {[sorted(v) for v in child_vars]}")
        if g.kind == PRODUCT:
            for a, b in itertools.combinations(range(len(child_vars)), 2):
                common = child_vars[a] & child_vars[b]
                if common:
                    report.add("product-vars", i, f"children {g.children[a]} and {g.children[b]} share {sorted(common)}")
    report.structural_ok = not report.violations
    if check_disjointness and report.structural_ok:
        report.disjointness_checked = True
        report.disjointness_ok = True
        rels = _all_relations(C)
        for i, g in enumerate(C.gates):
            if g.kind != UNION:
                continue
            for a, b in itertools.combinations(range(len(g.children)), 2):
                common = rels[g.children[a]] & rels[g.children[b]]
                if common:
                    report.disjointness_ok = False
                    report.add("union-disjoint", i, f"children {g.children[a]} and {g.children[b]} share {sorted(common, key=repr)[0]!r}")
    return report


def require_valid(C: Circuit):
    report = validate(C)
    if not report.structural_ok:
        rule, where, msg = report.violations[0]
        raise CircuitError(f"invalid circuit ({rule} at {where}): {msg}")


def require_normalized(C: Circuit):
    if not C.is_normalized:
        raise CircuitError("operation needs a normalized circuit; call normalize() first")


# -- normalization ---------------------------------------------------------


def normalize(C: Circuit) -> Circuit:
    return normalize_with_map(C)[0]


def normalize_with_map(C: Circuit):
    """Binarize, merge duplicate inputs and add the sentinel root.

    Returns the new circuit and a map from old edge ids to new edge ids.
    Already-normalized circuits come back unchanged with the identity map.
    """
    require_valid(C)
    if C.is_normalized:
        return C, {e: e for e in range(C.size)}

    gates = []
    new_id = {}
    canonical_input = {}
    # (new parent, position) for every old edge, resolved to ids at the end
    slot_of_edge = {}

    for g in C.topological_order:
        gate = C.gates[g]
        if gate.kind == INPUT:
            if gate.label not in canonical_input:
                gates.append(Gate(INPUT, (), gate.attr, gate.value))
                canonical_input[gate.label] = len(gates) - 1
            new_id[g] = canonical_input[gate.label]
            continue
        kids = [new_id[c] for c in gate.children]
        olds = C.in_edges[g]
        if len(kids) <= 2:
            gates.append(Gate(gate.kind, tuple(kids)))
            gid = len(gates) - 1
            for pos, e in enumerate(olds):
                slot_of_edge[e] = (gid, pos)
        else:
            gates.append(Gate(gate.kind, (kids[0], kids[1])))
            gid = len(gates) - 1
            slot_of_edge[olds[0]] = (gid, 0)
            slot_of_edge[olds[1]] = (gid, 1)
            for k in range(2, len(kids)):
                gates.append(Gate(gate.kind, (gid, kids[k])))
                gid = len(gates) - 1
                slot_of_edge[olds[k]] = (gid, 1)
        new_id[g] = gid

    gates.append(Gate(UNION, (new_id[C.root],)))
    out = Circuit(tuple(gates), len(gates) - 1)
    lookup = {}
    for eid in range(out.size):
        c, p = out.edges[eid]
        lookup[(p, out.in_edges[p].index(eid))] = eid
    edge_map = {e: lookup[slot] for e, slot in slot_of_edge.items()}
    return out, edge_map


# -- semantics -------------------------------------------------------------


def _all_relations(C: Circuit) -> list:
    """``[[C]]_u`` as frozensets of tuples, for every gate."""
    rels = [None] * len(C.gates)
    for g in C.topological_order:
        gate = C.gates[g]
        if gate.kind == INPUT:
            rels[g] = frozenset([Tuple({gate.attr: gate.value})])
        elif gate.kind == UNION:
            rels[g] = frozenset().union(*(rels[c] for c in gate.children))
        else:
            acc = [Tuple()]
            for c in gate.children:
                acc = [a * b for a in acc for b in rels[c]]
            rels[g] = frozenset(acc)
    return rels


def enumerate_relation(C: Circuit, gate: int | None = None) -> Relation:
    """``[[C]]_u`` by the inductive semantics (default: the root)."""
    gate = C.root if gate is None else gate
    rels = _all_relations(C)
    return Relation(tuple(sorted(C.gate_vars[gate])), rels[gate])


def count(C: Circuit) -> int:
    """``|[[C]]|`` in one bottom-up pass; assumes every union is disjoint."""
    sizes = [0] * len(C.gates)
    for g in C.topological_order:
        gate = C.gates[g]
        if gate.kind == INPUT:
            sizes[g] = 1
        elif gate.kind == UNION:
            sizes[g] = sum(sizes[c] for c in gate.children)
        else:
            prod = 1
            for c in gate.children:
                prod *= sizes[c]
            sizes[g] = prod
    return sizes[C.root]


def membership(C: Circuit, t: Tuple) -> list:
    """For every gate ``u``: is ``t`` restricted to ``var(C_u)`` in ``[[C]]_u``?"""
    member = [False] * len(C.gates)
    for g in C.topological_order:
        gate = C.gates[g]
        if gate.kind == INPUT:
            member[g] = t.get(gate.attr) == gate.value
        elif gate.kind == UNION:
            member[g] = any(member[c] for c in gate.children)
        else:
            member[g] = all(member[c] for c in gate.children)
    return member


def contains(C: Circuit, t: Tuple) -> bool:
    return t.attributes == C.variables and membership(C, t)[C.root]


@dataclass(frozen=True)
class ProofTree:
    gates: frozenset
    edges: frozenset


def proof_tree(C: Circuit, t: Tuple) -> ProofTree:
    """Subcircuit witnessing ``t``: keep child ``v`` iff ``t|var(C_v)`` is in ``[[C]]_v``."""
    if not isinstance(t, Tuple):
        t = Tuple(t)
    if t.attributes != C.variables:
        raise MembershipError(f"{t!r} is not over the circuit attributes {sorted(C.variables)}")
    member = membership(C, t)
    if not member[C.root]:
        raise MembershipError(f"{t!r} is not in the relation of the circuit")
    gates = {C.root}
    edges = set()
    stack = [C.root]
    while stack:
        u = stack.pop()
        for e in C.in_edges[u]:
            v = C.edges[e][0]
            if member[v]:
                edges.add(e)
                if v not in gates:
                    gates.add(v)
                    stack.append(v)
    return ProofTree(frozenset(gates), frozenset(edges))


def edge_relation(C: Circuit, e: int) -> Relation:
    """``S(e)``: tuples whose proof-tree contains edge ``e`` (enumerates; desk scale)."""
    if not 0 <= e < C.size:
        raise IndexError(f"edge {e} out of range (circuit has {C.size} edges)")
    full = enumerate_relation(C)
    keep = frozenset(t for t in full if e in proof_tree(C, t).edges)
    return Relation(full.attributes, keep)
