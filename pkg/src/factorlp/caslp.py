"""Linear programs over common-attribute-sum variables and their two groundings.

A CAS variable ``S[x=d]`` stands for the total weight of the answer tuples
whose attribute ``x`` has value ``d``. Grounding over an explicit relation
gives one LP variable per tuple; rewriting over a normalized circuit gives
one LP variable per edge, plus flow ("soundness") constraints.
"""
from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import dataclass, field

from .circuit import INPUT, PRODUCT, UNION, Circuit, require_normalized
from .errors import ParseError, SchemaError
from .linprog import LinearConstraint, LinearProgram, canonical_relation
from .relational import Relation, Tuple


def _escape(token: str) -> str:
    return token.replace("\\", "\\\\").replace("=", "\\=").replace(",", "\\,").replace("]", "\\]")


@dataclass(frozen=True, order=True)
class CASVariable:
    attr: str
    value: str

    def __post_init__(self):
        object.__setattr__(self, "attr", str(self.attr))
        object.__setattr__(self, "value", str(self.value))

    def __str__(self):
        return f"S[{_escape(self.attr)}={_escape(self.value)}]"


S = CASVariable


@dataclass(frozen=True)
class CASConstraint:
    form: Mapping  # CASVariable -> coefficient
    rel: str
    bound: float

    def __post_init__(self):
        object.__setattr__(self, "form", dict(self.form))
        object.__setattr__(self, "rel", canonical_relation(self.rel))
        object.__setattr__(self, "bound", float(self.bound))


@dataclass
class CASLP:
    attributes: tuple
    domain: dict
    objective: dict
    constraints: list = field(default_factory=list)
    sense: str = "max"

    def __post_init__(self):
        self.attributes = tuple(self.attributes)
        self.domain = {a: tuple(str(v) for v in self.domain.get(a, ())) for a in self.attributes}
        self.constraints = list(self.constraints)
        for form in [self.objective] + [c.form for c in self.constraints]:
            for var in form:
                if var.attr not in self.domain:
                    raise SchemaError(f"{var} uses unknown attribute {var.attr!r}")
                if var.value not in self.domain[var.attr]:
                    raise SchemaError(f"{var} uses a value outside the domain of {var.attr!r}")

    @property
    def m(self) -> int:
        return len(self.constraints)

    def with_attributes(self, extra) -> CASLP:
        """Same program over a wider attribute set (new attributes are unconstrained)."""
        attrs = self.attributes + tuple(a for a in extra if a not in self.attributes)
        return CASLP(attrs, dict(self.domain), dict(self.objective), list(self.constraints), self.sense)

    def to_json(self) -> dict:
        def terms(form):
            return [{"attr": v.attr, "value": v.value, "coef": c} for v, c in form.items()]

        return {
            "attributes": list(self.attributes),
            "domain": {a: list(vs) for a, vs in self.domain.items()},
            "sense": self.sense,
            "objective": terms(self.objective),
            "constraints": [{"terms": terms(c.form), "rel": c.rel, "bound": c.bound} for c in self.constraints],
        }


def tuple_variable(t: Tuple) -> str:
    inner = ",".join(f"{_escape(a)}={_escape(t[a])}" for a in sorted(t))
    return f"w[{inner}]"


def edge_variable(e: int) -> str:
    return f"e{e}"


def _substitute(form, expansion) -> dict:
    out = {}
    for var, coef in form.items():
        for name in expansion.get(var, ()):
            out[name] = out.get(name, 0.0) + coef
    return out


# -- grounding -------------------------------------------------------------


def ground(L: CASLP, R: Relation) -> LinearProgram:
    """``L(R)``: one nonnegative variable per tuple of ``R``."""
    missing = set(L.attributes) - set(R.attributes)
    if missing:
        raise SchemaError(f"program attributes {sorted(missing)} are not in the relation")
    tuples = R.sorted_tuples()
    names = [tuple_variable(t) for t in tuples]
    expansion = {}
    for t, name in zip(tuples, names):
        for a in L.attributes:
            expansion.setdefault(CASVariable(a, t[a]), []).append(name)
    constraints = [LinearConstraint(_substitute(c.form, expansion), c.rel, c.bound) for c in L.constraints]
    constraints += [LinearConstraint({name: 1.0}, ">=", 0.0) for name in names]
    return LinearProgram(names, _substitute(L.objective, expansion), constraints, L.sense)


def dwc_caslp(attributes, domain) -> CASLP:
    """The dependency-weighted count as a CAS-LP.

    Every tuple has exactly one value on the first attribute, so summing the
    CAS variables of that attribute sums all tuple weights.
    """
    attributes = tuple(attributes)
    if not attributes:
        raise SchemaError("dependency weighted count needs at least one attribute")
    first = attributes[0]
    objective = {CASVariable(first, d): 1.0 for d in domain.get(first, ())}
    constraints = [
        CASConstraint({CASVariable(a, d): 1.0}, "<=", 1.0)
        for a in attributes
        for d in domain.get(a, ())
    ]
    return CASLP(attributes, domain, objective, constraints)


def dwc_ground(R: Relation) -> LinearProgram:
    """Max total tuple weight with every ``attr = value`` group summing to at most 1."""
    if not R.attributes:
        raise SchemaError("dependency weighted count needs at least one attribute")
    tuples = R.sorted_tuples()
    names = [tuple_variable(t) for t in tuples]
    constraints = [LinearConstraint({name: 1.0}, ">=", 0.0) for name in names]
    for a in R.attributes:
        groups = {}
        for t, name in zip(tuples, names):
            groups.setdefault(t[a], []).append(name)
        for d in sorted(groups):
            constraints.append(LinearConstraint({n: 1.0 for n in groups[d]}, "<=", 1.0))
    return LinearProgram(names, {n: 1.0 for n in names}, constraints, "max")


# -- rewriting over circuits -----------------------------------------------


def soundness_constraints(C: Circuit) -> list:
    """Positivity of every edge plus the flow conditions at every gate."""
    require_normalized(C)
    ev = edge_variable
    out = [LinearConstraint({ev(e): 1.0}, ">=", 0.0) for e in range(C.size)]
    for u, gate in enumerate(C.gates):
        ins, outs = C.in_edges[u], C.out_edges[u]
        is_root = u == C.root
        if gate.kind == UNION and not is_root:
            form = {}
            for i in ins:
                form[ev(i)] = form.get(ev(i), 0.0) + 1.0
            for o in outs:
                form[ev(o)] = form.get(ev(o), 0.0) - 1.0
            out.append(LinearConstraint(form, "=", 0.0))
        elif gate.kind == PRODUCT:
            for a, b in zip(ins, ins[1:]):
                out.append(LinearConstraint({ev(a): 1.0, ev(b): -1.0}, "=", 0.0))
            if not is_root and ins:
                form = {ev(ins[0]): 1.0}
                for o in outs:
                    form[ev(o)] = form.get(ev(o), 0.0) - 1.0
                out.append(LinearConstraint(form, "=", 0.0))
    return out


def _input_expansion(C: Circuit) -> dict:
    return {
        CASVariable(*label): [edge_variable(e) for g in gates for e in C.out_edges[g]]
        for label, gates in C.input_index.items()
    }


def rewrite(L: CASLP, C: Circuit) -> LinearProgram:
    """Equivalent LP over the edges of a normalized circuit.

    Constraint order: the ``m`` substituted constraints of ``L`` first, then
    the soundness constraints.
    """
    require_normalized(C)
    if C.variables and set(L.attributes) != set(C.variables):
        raise SchemaError(
            f"program attributes {sorted(L.attributes)} differ from circuit attributes {sorted(C.variables)}"
        )
    expansion = _input_expansion(C)
    names = [edge_variable(e) for e in range(C.size)]
    constraints = [LinearConstraint(_substitute(c.form, expansion), c.rel, c.bound) for c in L.constraints]
    constraints += soundness_constraints(C)
    return LinearProgram(names, _substitute(L.objective, expansion), constraints, L.sense)


def dwc_circuit(C: Circuit) -> LinearProgram:
    """Maximize the output edge under soundness and unit capacity per input."""
    require_normalized(C)
    names = [edge_variable(e) for e in range(C.size)]
    constraints = soundness_constraints(C)
    for u, gate in enumerate(C.gates):
        if gate.kind == INPUT and C.out_edges[u]:
            constraints.append(LinearConstraint({edge_variable(e): 1.0 for e in C.out_edges[u]}, "<=", 1.0))
    return LinearProgram(names, {edge_variable(C.output_edge): 1.0}, constraints, "max")


# -- JSON format -----------------------------------------------------------

FORALL_PLACEHOLDER = "$"


def parse_caslp(text, auto_domain=None, allow_minimize=False) -> CASLP:
    """Parse the CAS-LP JSON format.

    ``"value": "*"`` expands a term over the attribute's domain. A constraint
    with ``"forall": attr`` is repeated for each value ``v`` of that attribute,
    with ``"$"`` in term values standing for ``v``. ``"domain": "auto"`` takes
    the domain from ``auto_domain`` (attribute -> values).
    """
    try:
        data = json.loads(text) if isinstance(text, str) else text
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from None
    if not isinstance(data, Mapping):
        raise ParseError("CAS-LP must be a JSON object")
    attributes = data.get("attributes")
    if not isinstance(attributes, list) or not all(isinstance(a, str) for a in attributes):
        raise ParseError("'attributes' must be a list of names")
    raw_domain = data.get("domain", "auto")
    if raw_domain == "auto":
        if auto_domain is None:
            raise ParseError("domain is 'auto' but no data was supplied to infer it from")
        domain = {a: [str(v) for v in auto_domain.get(a, ())] for a in attributes}
    elif isinstance(raw_domain, Mapping):
        unknown = set(raw_domain) - set(attributes)
        if unknown:
            raise ParseError(f"domain lists unknown attributes {sorted(unknown)}")
        domain = {a: [str(v) for v in raw_domain.get(a, [])] for a in attributes}
    else:
        raise ParseError("'domain' must be an object or \"auto\"")

    sense = data.get("sense", "max")
    if sense not in ("max", "min"):
        raise ParseError(f"unknown sense {sense!r}")
    if sense == "min" and not allow_minimize:
        raise ParseError("minimization is an extension; enable it explicitly")

    def expand_terms(terms, where, bound_value=None):
        form = {}
        if not isinstance(terms, list):
            raise ParseError(f"{where}: terms must be a list")
        for term in terms:
            try:
                attr, value = term["attr"], term.get("value", FORALL_PLACEHOLDER)
                coef = float(term.get("coef", 1.0))
            except (KeyError, TypeError, ValueError, AttributeError):
                raise ParseError(f"{where}: malformed term {term!r}") from None
            if attr not in domain:
                raise ParseError(f"{where}: unknown attribute {attr!r}")
            if value == "*":
                values = domain[attr]
            elif value == FORALL_PLACEHOLDER:
                if bound_value is None:
                    raise ParseError(f"{where}: '$' is only allowed inside a forall constraint")
                values = [bound_value]
            else:
                value = str(value)
                if value not in domain[attr]:
                    raise ParseError(f"{where}: value {value!r} is not in the domain of {attr!r}")
                values = [value]
            for v in values:
                var = CASVariable(attr, v)
                form[var] = form.get(var, 0.0) + coef
        return form

    objective = expand_terms(data.get("objective", []), "objective")
    constraints = []
    for k, raw in enumerate(data.get("constraints", [])):
        where = f"constraint {k}"
        try:
            rel = canonical_relation(raw["rel"])
            bound = float(raw["bound"])
        except (KeyError, TypeError, ValueError):
            raise ParseError(f"{where}: needs 'rel' and numeric 'bound'") from None
        forall = raw.get("forall")
        if forall is None:
            constraints.append(CASConstraint(expand_terms(raw.get("terms", []), where), rel, bound))
            continue
        if forall not in domain:
            raise ParseError(f"{where}: forall over unknown attribute {forall!r}")
        for v in domain[forall]:
            constraints.append(CASConstraint(expand_terms(raw.get("terms", []), where, v), rel, bound))
    return CASLP(tuple(attributes), domain, objective, constraints, sense)
