"""Tuples, relations and databases with plain set semantics.

Domain values are opaque string tokens: anything handed in is passed
through ``str`` once, at construction time, and never parsed back.
The relational algebra here is deliberately naive; it is the ground
truth the circuit machinery is tested against.
"""
from __future__ import annotations

import csv
import io
import json
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field

from .errors import ParseError, SchemaError


class Tuple(Mapping):
    """Immutable total map from attribute names to domain values."""

    __slots__ = ("_items", "_hash")

    def __init__(self, bindings=(), **kwargs):
        items = dict(bindings)
        items.update(kwargs)
        self._items = {str(k): str(v) for k, v in items.items()}
        self._hash = None

    def __getitem__(self, key):
        return self._items[key]

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._items.items()))
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Tuple):
            return self._items == other._items
        return NotImplemented

    def __repr__(self):
        inner = ", ".join(f"{k}/{v}" for k, v in sorted(self._items.items()))
        return f"[{inner}]"

    @property
    def attributes(self) -> frozenset:
        return frozenset(self._items)

    def restrict(self, attributes: Iterable[str]) -> Tuple:
        return Tuple({a: self._items[a] for a in attributes})

    def drop(self, attributes: Iterable[str]) -> Tuple:
        gone = set(attributes)
        return Tuple({a: v for a, v in self._items.items() if a not in gone})

    def __mul__(self, other: Tuple) -> Tuple:
        """Combine two tuples over disjoint attribute sets."""
        if self.attributes & other.attributes:
            raise SchemaError(f"cannot combine {self!r} and {other!r}: overlapping attributes")
        merged = dict(self._items)
        merged.update(other._items)
        return Tuple(merged)

    def agrees_with(self, other: Tuple) -> bool:
        return all(other._items.get(a, v) == v for a, v in self._items.items())


@dataclass(frozen=True, eq=False)
class Relation:
    """A finite set of tuples, all total on ``attributes``.

    Attribute order only matters for serialization; equality compares the
    attribute *set* and the tuple set.
    """

    attributes: tuple
    tuples: frozenset = field(default_factory=frozenset)
    name: str | None = None

    def __post_init__(self):
        attrs = tuple(str(a) for a in self.attributes)
        if len(set(attrs)) != len(attrs):
            raise SchemaError(f"duplicate attribute in {attrs}")
        object.__setattr__(self, "attributes", attrs)
        tuples = frozenset(t if isinstance(t, Tuple) else Tuple(t) for t in self.tuples)
        schema = frozenset(attrs)
        for t in tuples:
            if t.attributes != schema:
                raise SchemaError(f"tuple {t!r} is not total on {attrs}")
        object.__setattr__(self, "tuples", tuples)

    @classmethod
    def from_rows(cls, attributes, rows, name=None) -> Relation:
        attributes = tuple(attributes)
        out = []
        for row in rows:
            row = tuple(row)
            if len(row) != len(attributes):
                raise SchemaError(f"row {row} does not match attributes {attributes}")
            out.append(Tuple(zip(attributes, row)))
        return cls(attributes, frozenset(out), name)

    def __len__(self):
        return len(self.tuples)

    def __iter__(self) -> Iterator[Tuple]:
        return iter(self.tuples)

    def __contains__(self, t):
        return t in self.tuples

    def __eq__(self, other):
        if not isinstance(other, Relation):
            return NotImplemented
        return set(self.attributes) == set(other.attributes) and self.tuples == other.tuples

    def __hash__(self):
        return hash((frozenset(self.attributes), self.tuples))

    def __repr__(self):
        label = self.name or "Relation"
        return f"<{label} {self.attributes} with {len(self)} tuples>"

    def rows(self) -> list:
        """Tuples as value lists aligned to ``attributes``, sorted."""
        return sorted(tuple(t[a] for a in self.attributes) for t in self.tuples)

    def sorted_tuples(self) -> list:
        return [Tuple(zip(self.attributes, r)) for r in self.rows()]

    def active_domain(self, attribute: str | None = None):
        if attribute is not None:
            self._require(attribute)
            return sorted({t[attribute] for t in self.tuples})
        return {a: sorted({t[a] for t in self.tuples}) for a in self.attributes}

    def _require(self, attribute):
        if attribute not in self.attributes:
            raise SchemaError(f"unknown attribute {attribute!r}; relation has {self.attributes}")

    def to_json(self) -> dict:
        return {"name": self.name, "attributes": list(self.attributes), "tuples": [list(r) for r in self.rows()]}

    @classmethod
    def from_json(cls, data: Mapping) -> Relation:
        return cls.from_rows(data["attributes"], data.get("tuples", []), data.get("name"))


@dataclass(frozen=True)
class Database:
    relations: Mapping = field(default_factory=dict)

    def __getitem__(self, name) -> Relation:
        return self.relations[name]

    def __contains__(self, name):
        return name in self.relations

    @property
    def size(self) -> int:
        return sum(len(r) for r in self.relations.values())


def load_relation(source, name, attributes, *, header=False, delimiter=",") -> Relation:
    """Read a delimited text stream into a deduplicated relation.

    ``source`` may be a file object or a string. With ``header=True`` the
    first line is skipped (its field count still has to match).
    """
    attributes = list(attributes)
    if not attributes:
        raise SchemaError("a relation needs at least one attribute")
    if isinstance(source, str):
        source = io.StringIO(source)
    rows = []
    for lineno, record in enumerate(csv.reader(source, delimiter=delimiter), start=1):
        if not record or (len(record) == 1 and not record[0].strip()):
            continue
        if len(record) != len(attributes):
            raise ParseError(f"expected {len(attributes)} fields, got {len(record)}", line=lineno)
        if header and lineno == 1:
            continue
        rows.append([v.strip() for v in record])
    return Relation.from_rows(attributes, rows, name)


def read_header(source, delimiter=","):
    line = source.readline()
    return [h.strip() for h in next(csv.reader([line], delimiter=delimiter))]


def load_relation_json(text: str) -> Relation:
    return Relation.from_json(json.loads(text))


def select_eq(R: Relation, x: str, d) -> Relation:
    R._require(x)
    d = str(d)
    return Relation(R.attributes, frozenset(t for t in R if t[x] == d), R.name)


def project_out(R: Relation, Z: Iterable[str]) -> Relation:
    Z = set(Z)
    for z in Z:
        R._require(z)
    keep = tuple(a for a in R.attributes if a not in Z)
    if not keep:
        raise SchemaError("projecting out every attribute is not supported")
    return Relation(keep, frozenset(t.restrict(keep) for t in R))


def natural_join(R1: Relation, R2: Relation) -> Relation:
    shared = [a for a in R1.attributes if a in R2.attributes]
    attrs = R1.attributes + tuple(a for a in R2.attributes if a not in R1.attributes)
    index = {}
    for t in R2:
        index.setdefault(tuple(t[a] for a in shared), []).append(t)
    out = set()
    for t1 in R1:
        for t2 in index.get(tuple(t1[a] for a in shared), ()):
            merged = dict(t2)
            merged.update(t1)
            out.add(Tuple(merged))
    return Relation(attrs, frozenset(out))


def extensions(R: Relation, Z: Iterable[str], partial: Tuple) -> set:
    """All Z-parts completing ``partial`` to a tuple of ``R``."""
    Z = tuple(Z)
    return {t.restrict(Z) for t in R if partial.agrees_with(t)}
