"""Linear programs over named variables, a dense two-phase simplex, LP-file export.

Variables are free unless a constraint says otherwise. Single-variable
constraints of the shape ``a*x >= 0`` (a > 0) are recognized by the solver and
turned into sign bounds instead of tableau rows, which keeps the positivity
constraints of grounded programs cheap.
"""
from __future__ import annotations

import enum
import math
import re
import shlex
import subprocess
import tempfile
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FactorLPError, NumericError, ParseError, SolverError

EPS_FEAS = 1e-7
EPS_OBJ = 1e-6
EPS_PIVOT = 1e-9

RELATIONS = ("<=", "=", ">=")
_REL_ALIASES = {"<=": "<=", "=<": "<=", "=": "=", "==": "=", ">=": ">=", "=>": ">="}

LinearForm = dict  # variable name -> coefficient; absent means 0


class EvaluationError(FactorLPError):
    pass


def canonical_relation(rel: str) -> str:
    if rel in ("<", ">"):
        raise ParseError(f"strict relation {rel!r} is not supported; use <= or >=")
    try:
        return _REL_ALIASES[rel]
    except KeyError:
        raise ParseError(f"unknown relation {rel!r}") from None


@dataclass(frozen=True)
class LinearConstraint:
    form: Mapping
    rel: str
    bound: float

    def __post_init__(self):
        object.__setattr__(self, "rel", canonical_relation(self.rel))
        object.__setattr__(self, "form", dict(self.form))
        object.__setattr__(self, "bound", float(self.bound))

    def satisfied(self, assignment, tol=EPS_FEAS) -> bool:
        return self.violation(assignment) <= tol

    def violation(self, assignment) -> float:
        lhs = evaluate(self.form, assignment)
        if self.rel == "<=":
            return max(0.0, lhs - self.bound)
        if self.rel == ">=":
            return max(0.0, self.bound - lhs)
        return abs(lhs - self.bound)

    def __str__(self):
        return f"{format_form(self.form)} {self.rel} {self.bound:g}"


@dataclass
class LinearProgram:
    variables: list
    objective: dict
    constraints: list = field(default_factory=list)
    sense: str = "max"

    def __post_init__(self):
        self.variables = list(self.variables)
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', not {self.sense!r}")
        known = set(self.variables)
        if len(known) != len(self.variables):
            raise ValueError("duplicate variable names")
        for form in [self.objective] + [c.form for c in self.constraints]:
            unknown = set(form) - known
            if unknown:
                raise ValueError(f"form mentions undeclared variables {sorted(unknown)[:5]}")

    @property
    def size(self) -> int:
        """``|X| * |constraints|``."""
        return len(self.variables) * len(self.constraints)

    def __str__(self):
        lines = [f"{self.sense} {format_form(self.objective)}", "subject to"]
        lines += [f"  {c}" for c in self.constraints]
        return "\n".join(lines)


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"

    def __str__(self):
        return self.value


@dataclass
class Solution:
    status: Status
    assignment: dict | None = None
    objective_value: float | None = None
    max_violation: float | None = None
    iterations: int = 0

    def to_json(self) -> dict:
        return {
            "status": str(self.status),
            "objective_value": self.objective_value,
            "assignment": self.assignment,
        }


def format_form(form) -> str:
    if not form:
        return "0"
    parts = []
    for name, coef in form.items():
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        term = name if mag == 1 else f"{mag:g} {name}"
        parts.append((sign, term))
    head = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    return " ".join([head] + [f"{s} {t}" for s, t in parts[1:]])


def evaluate(form, assignment) -> float:
    total = 0.0
    for name, coef in form.items():
        try:
            total += coef * assignment[name]
        except KeyError:
            raise EvaluationError(f"assignment has no value for {name!r}") from None
    return total


# -- simplex ---------------------------------------------------------------


def _pivot(T, r, c):
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _run(T, basis, allowed):
    """Bland's-rule primal simplex on tableau ``T`` (last row = reduced costs).

    Returns ``(finished, iterations)``; ``finished`` is False when unbounded.
    """
    m = T.shape[0] - 1
    iterations = 0
    while True:
        z = T[-1, :-1]
        entering = np.flatnonzero((z < -EPS_PIVOT) & allowed)
        if entering.size == 0:
            return True, iterations
        j = int(entering[0])
        col = T[:m, j]
        rows = np.flatnonzero(col > EPS_PIVOT)
        if rows.size == 0:
            return False, iterations
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        tied = rows[ratios <= best + EPS_PIVOT * max(1.0, abs(best))]
        r = int(min(tied, key=lambda i: basis[i]))
        _pivot(T, r, j)
        basis[r] = j
        iterations += 1


def solve(lp: LinearProgram) -> Solution:
    """Two-phase tableau simplex with Bland's anti-cycling rule."""
    for form in [lp.objective] + [c.form for c in lp.constraints]:
        for v in form.values():
            if not math.isfinite(v):
                raise NumericError(f"non-finite coefficient {v}")
    for c in lp.constraints:
        if not math.isfinite(c.bound):
            raise NumericError(f"non-finite bound {c.bound}")

    index = {v: i for i, v in enumerate(lp.variables)}
    nonneg = [False] * len(lp.variables)
    rows = []
    for con in lp.constraints:
        terms = {k: v for k, v in con.form.items() if v != 0.0}
        if not terms:
            if LinearConstraint({}, con.rel, con.bound).violation({}) > EPS_FEAS:
                return Solution(Status.INFEASIBLE)
            continue
        if len(terms) == 1 and con.bound == 0.0:
            (name, a), = terms.items()
            if (a > 0 and con.rel == ">=") or (a < 0 and con.rel == "<="):
                nonneg[index[name]] = True
                continue
        rows.append((terms, con.rel, con.bound))

    # structural columns: x or (x+, x-)
    columns = []
    for i, v in enumerate(lp.variables):
        columns.append((i, 1.0))
        if not nonneg[i]:
            columns.append((i, -1.0))
    col_of = {}
    for j, (i, s) in enumerate(columns):
        col_of.setdefault(i, []).append((j, s))
    n_struct = len(columns)
    sign = -1.0 if lp.sense == "min" else 1.0
    cost = np.zeros(n_struct)
    for name, coef in lp.objective.items():
        for j, s in col_of[index[name]]:
            cost[j] = sign * coef * s

    m = len(rows)
    A = np.zeros((m, n_struct))
    b = np.zeros(m)
    rels = []
    for r, (terms, rel, bound) in enumerate(rows):
        for name, coef in terms.items():
            for j, s in col_of[index[name]]:
                A[r, j] = coef * s
        b[r] = bound
        if bound < 0:
            A[r] *= -1
            b[r] = -bound
            rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
        rels.append(rel)

    n_slack = sum(rel != "=" for rel in rels)
    n_art = sum(rel != "<=" for rel in rels)
    width = n_struct + n_slack + n_art
    T = np.zeros((m + 1, width + 1))
    T[:m, :n_struct] = A
    T[:m, -1] = b
    basis = [0] * m
    s_col = n_struct
    a_col = n_struct + n_slack
    artificial = np.zeros(width, dtype=bool)
    for r, rel in enumerate(rels):
        if rel == "<=":
            T[r, s_col] = 1.0
            basis[r] = s_col
            s_col += 1
        else:
            if rel == ">=":
                T[r, s_col] = -1.0
                s_col += 1
            T[r, a_col] = 1.0
            artificial[a_col] = True
            basis[r] = a_col
            a_col += 1

    iterations = 0
    if n_art:
        T[-1, :] = 0.0
        T[-1, :width][artificial] = 1.0
        for r in range(m):
            if artificial[basis[r]]:
                T[-1] -= T[r]
        _, it = _run(T, basis, np.ones(width, dtype=bool))
        iterations += it
        if T[-1, -1] < -EPS_FEAS * max(1.0, float(np.abs(b).max(initial=0.0))):
            return Solution(Status.INFEASIBLE, iterations=iterations)
        # drive remaining artificials out of the basis, dropping redundant rows
        keep = []
        for r in range(m):
            if artificial[basis[r]]:
                cand = np.flatnonzero((np.abs(T[r, :width]) > EPS_PIVOT) & ~artificial)
                if cand.size:
                    _pivot(T, r, int(cand[0]))
                    basis[r] = int(cand[0])
                    keep.append(r)
            else:
                keep.append(r)
        T = np.vstack([T[keep], T[-1:]])
        basis = [basis[r] for r in keep]
        m = len(keep)

    allowed = ~artificial
    T[-1, :] = 0.0
    T[-1, :n_struct] = -cost
    for r in range(m):
        j = basis[r]
        if j < n_struct and cost[j] != 0.0:
            T[-1] += cost[j] * T[r]
    finished, it = _run(T, basis, allowed)
    iterations += it
    if not finished:
        return Solution(Status.UNBOUNDED, iterations=iterations)

    x = np.zeros(width)
    for r in range(m):
        x[basis[r]] = T[r, -1]
    values = [0.0] * len(lp.variables)
    for j, (i, s) in enumerate(columns):
        values[i] += s * float(x[j])
    assignment = dict(zip(lp.variables, values))
    value = evaluate(lp.objective, assignment)
    violation = max((c.violation(assignment) for c in lp.constraints), default=0.0)
    return Solution(Status.OPTIMAL, assignment, value, violation, iterations)


# -- LP file export --------------------------------------------------------

_LP_NAME = re.compile(r"^[A-DF-Za-df-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class LPText:
    text: str
    names: dict  # name used in the file -> original variable name


def _lp_number(v: float) -> str:
    return repr(float(v))


def _lp_terms(form, rename, fallback):
    items = [(rename[k], v) for k, v in form.items() if v != 0.0]
    if not items:
        return [f"0 {fallback}"] if fallback else []
    out = []
    for pos, (name, coef) in enumerate(items):
        op = "-" if coef < 0 else "+"
        if pos == 0 and op == "+":
            out.append(f"{_lp_number(abs(coef))} {name}")
        else:
            out.append(f"{op} {_lp_number(abs(coef))} {name}")
    return out


def _wrap(head, terms, tail=""):
    lines = []
    for k in range(0, max(len(terms), 1), 6):
        chunk = " ".join(terms[k:k + 6])
        lines.append((" " + head + " " if k == 0 else "    ") + chunk)
    if tail:
        lines[-1] += " " + tail
    return lines


def export_lp_text(lp: LinearProgram) -> LPText:
    """Render ``lp`` in the CPLEX LP file format.

    Names are kept when every variable already is a safe LP identifier
    (no leading ``e``/``E``, which LP readers treat as an exponent);
    otherwise all variables become ``x0, x1, ...`` in declaration order.
    """
    if all(_LP_NAME.match(v) for v in lp.variables):
        rename = {v: v for v in lp.variables}
    else:
        rename = {v: f"x{i}" for i, v in enumerate(lp.variables)}
    fallback = rename[lp.variables[0]] if lp.variables else None
    out = ["\\ linear program exported by factorlp"]
    out.append("Maximize" if lp.sense == "max" else "Minimize")
    out += _wrap("obj:", _lp_terms(lp.objective, rename, fallback))
    out.append("Subject To")
    for k, con in enumerate(lp.constraints):
        terms = _lp_terms(con.form, rename, fallback)
        if not terms:
            out.append(f"\\ c{k} has no variables: 0 {con.rel} {_lp_number(con.bound)}")
            continue
        out += _wrap(f"c{k}:", terms, f"{con.rel} {_lp_number(con.bound)}")
    out.append("Bounds")
    for v in lp.variables:
        out.append(f" {rename[v]} free")
    out.append("End")
    return LPText("\n".join(out) + "\n", {new: old for old, new in rename.items()})


def solve_external(lp: LinearProgram, command: str, timeout: float = 600.0) -> Solution:
    """Pipe ``lp`` through an external solver command.

    The LP file path replaces ``{lp}`` in ``command`` (or is appended). The
    command must print ``status <optimal|infeasible|unbounded>``, optionally
    ``objective <value>``, and one ``<variable> <value>`` line per variable.
    """
    exported = export_lp_text(lp)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "model.lp"
        path.write_text(exported.text)
        argv = shlex.split(command)
        if any("{lp}" in a for a in argv):
            argv = [a.replace("{lp}", str(path)) for a in argv]
        else:
            argv.append(str(path))
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise SolverError(f"external solver could not run: {exc}") from None
    if proc.returncode != 0:
        raise SolverError(f"external solver exited with {proc.returncode}: {proc.stderr.strip()}")
    status, value, assignment = None, None, {}
    for line in proc.stdout.splitlines():
        parts = line.split()
        if len(parts) != 2:
            continue
        key, raw = parts
        if key == "status":
            try:
                status = Status(raw.lower())
            except ValueError:
                raise SolverError(f"external solver reported unknown status {raw!r}") from None
        elif key == "objective":
            value = float(raw)
        elif key in exported.names:
            assignment[exported.names[key]] = float(raw)
    if status is None:
        raise SolverError("external solver printed no status line")
    if status != Status.OPTIMAL:
        return Solution(status)
    if assignment and len(assignment) == len(lp.variables):
        value = evaluate(lp.objective, assignment)
        violation = max((c.violation(assignment) for c in lp.constraints), default=0.0)
        return Solution(status, assignment, value, violation)
    return Solution(status, None, value)
