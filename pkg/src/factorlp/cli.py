"""Command-line front end.

    factorlp compile --query q.txt --db data/ -o circuit.json
    factorlp solve --caslp lp.json --circuit circuit.json --compare -o weights.json
    factorlp reconstruct --circuit circuit.json --weights weights.json < tuples.txt
    factorlp dwc --relation s.csv
    factorlp bench --sizes 5,10,20

Exit codes: 0 success, 2 usage, 3 bad data or input, 4 query not acyclic,
5 solver failure, 6 the two LP paths disagree.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .caslp import dwc_circuit, dwc_ground, edge_variable, ground, parse_caslp, rewrite
from .circuit import Circuit, count, enumerate_relation, normalize, validate
from .cqcompile import compile_query, eval_naive, gyo_join_tree, parse_query
from .errors import FactorLPError, NotAcyclicError, NumericError, SolverError
from .generators import PROJECTS_CASLP, PROJECTS_QUERY, star_schema_database
from .linprog import EPS_OBJ, Status, solve, solve_external
from .reconstruct import (
    edge_weighting_from_json,
    edge_weighting_to_json,
    reconstruct,
    tuple_weights,
    weighting_to_json,
)
from .relational import Database, Relation, Tuple, load_relation, load_relation_json, project_out, read_header

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NOT_ACYCLIC, EXIT_SOLVER, EXIT_MISMATCH = 0, 2, 3, 4, 5, 6

MODES = ("compile", "solve", "dwc", "count", "reconstruct", "validate", "bench")


class UsageError(FactorLPError):
    pass


class OracleMismatch(FactorLPError):
    pass


@dataclass
class RunManifest:
    """Everything a command needs; built from argv or by hand in tests."""

    mode: str
    query: str | None = None
    database: str | None = None
    caslp: str | None = None
    circuit: str | None = None
    relation: str | None = None
    weights: str | None = None
    output: str | None = None
    external_solver: str | None = None
    seed: int = 0
    format: str = "text"
    compare: bool = False
    enumerate: bool = False
    minimize: bool = False
    disjointness: bool = False
    timing: bool = True
    sizes: list = field(default_factory=lambda: [5, 10, 20])

    def check(self):
        if self.mode not in MODES:
            raise UsageError(f"unknown mode {self.mode!r}")
        has_query = self.query is not None and self.database is not None
        if (self.query is None) != (self.database is None):
            raise UsageError("--query and --db go together")
        if self.mode == "compile" and not has_query:
            raise UsageError("compile needs --query and --db")
        if self.mode in ("solve", "count", "reconstruct", "validate") and not (has_query or self.circuit):
            raise UsageError(f"{self.mode} needs --circuit or --query with --db")
        if self.mode == "solve" and not self.caslp:
            raise UsageError("solve needs --caslp")
        if self.mode == "dwc" and not (has_query or self.circuit or self.relation):
            raise UsageError("dwc needs --circuit, --relation or --query with --db")
        if self.mode == "reconstruct" and not self.weights:
            raise UsageError("reconstruct needs --weights")
        if self.mode == "bench" and (not self.sizes or min(self.sizes) < 1):
            raise UsageError("bench sizes must be positive")
        if self.format not in ("json", "text"):
            raise UsageError("--format is json or text")


# -- loading ---------------------------------------------------------------


def load_relation_file(path) -> Relation:
    """``.json`` relation files, or delimited text whose first line names the attributes."""
    path = Path(path)
    if path.suffix == ".json":
        return load_relation_json(path.read_text())
    delimiter = "\t" if path.suffix == ".tsv" else ","
    with path.open(newline="") as fh:
        attributes = read_header(fh, delimiter)
        fh.seek(0)  # re-read the header so error line numbers match the file
        return load_relation(fh, path.stem, attributes, header=True, delimiter=delimiter)


def load_database(directory) -> Database:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"database directory {directory} does not exist")
    relations = {}
    for path in sorted(directory.iterdir()):
        if path.suffix in (".csv", ".tsv", ".json"):
            rel = load_relation_file(path)
            relations[path.stem] = Relation(rel.attributes, rel.tuples, path.stem)
    return Database(relations)


def _read_query(spec: str):
    path = Path(spec)
    text = path.read_text() if path.exists() else spec
    return parse_query(text)


def load_circuit(path) -> Circuit:
    return Circuit.from_json(json.loads(Path(path).read_text()))


def _circuit_and_query(m: RunManifest):
    """Normalized circuit for the manifest, plus the query and database when given."""
    if m.circuit:
        return normalize(load_circuit(m.circuit)), None, None
    Q = _read_query(m.query)
    db = load_database(m.database)
    return normalize(compile_query(Q, db)), Q, db


def _circuit_domain(C: Circuit) -> dict:
    domain = {}
    for attr, value in sorted(C.input_index):
        domain.setdefault(attr, []).append(value)
    return domain


def _solve(lp, m: RunManifest):
    if m.external_solver:
        return solve_external(lp, m.external_solver)
    return solve(lp)


def _agree(a, b) -> bool:
    if a.status != b.status:
        return False
    if a.status != Status.OPTIMAL:
        return True
    return abs(a.objective_value - b.objective_value) <= EPS_OBJ * max(1.0, abs(b.objective_value))


def _lp_summary(lp, sol) -> dict:
    return {
        "variables": len(lp.variables),
        "constraints": len(lp.constraints),
        "status": str(sol.status),
        "objective": sol.objective_value,
    }


class _Clock:
    def __init__(self):
        self.start = time.perf_counter()

    def ms(self):
        return round((time.perf_counter() - self.start) * 1000.0, 3)


# -- commands --------------------------------------------------------------


def cmd_compile(m: RunManifest) -> dict:
    Q = _read_query(m.query)
    db = load_database(m.database)
    clock = _Clock()
    T = gyo_join_tree(Q)
    C = compile_query(Q, db, T)
    elapsed = clock.ms()
    if m.output:
        Path(m.output).write_text(C.dumps())
    report = {
        "gates": len(C.gates),
        "edges": C.size,
        "count": count(C),
        "database_tuples": db.size,
        "atoms": len(Q.atoms),
        "join_tree_root": str(Q.atoms[T.root]),
        "existential": list(Q.existential_vars),
    }
    if m.timing:
        report["compile_ms"] = elapsed
    return report


def cmd_solve(m: RunManifest) -> dict:
    C, Q, db = _circuit_and_query(m)
    L = parse_caslp(Path(m.caslp).read_text(), auto_domain=_circuit_domain(C), allow_minimize=m.minimize)
    hidden = sorted(set(C.variables) - set(L.attributes))
    wide = L.with_attributes(hidden) if hidden else L
    lp = rewrite(wide, C)
    sol = _solve(lp, m)
    report = {"circuit": {"gates": len(C.gates), "edges": C.size}, "rewrite": _lp_summary(lp, sol)}
    report["status"] = str(sol.status)
    report["objective"] = sol.objective_value
    if m.output and sol.status == Status.OPTIMAL:
        W = [max(0.0, sol.assignment[edge_variable(e)]) for e in range(C.size)]
        Path(m.output).write_text(json.dumps(edge_weighting_to_json(W), indent=1) + "\n")
    if m.compare:
        if Q is not None:
            R = eval_naive(Q, db)
        else:
            R = enumerate_relation(C)
            if hidden:
                R = project_out(R, hidden)
        ground_lp = ground(L, R)
        ground_sol = _solve(ground_lp, m)
        report["ground"] = _lp_summary(ground_lp, ground_sol)
        report["agree"] = _agree(sol, ground_sol)
    return report


def cmd_dwc(m: RunManifest) -> dict:
    if m.relation and not (m.circuit or m.query):
        R = load_relation_file(m.relation)
        lp = dwc_ground(R)
        sol = _solve(lp, m)
        return {"path": "relation", "dwc": sol.objective_value, "status": str(sol.status), "variables": len(lp.variables)}
    C, _, _ = _circuit_and_query(m)
    lp = dwc_circuit(C)
    sol = _solve(lp, m)
    report = {"path": "circuit", "dwc": sol.objective_value, "status": str(sol.status), "variables": len(lp.variables)}
    if m.compare:
        ground_lp = dwc_ground(enumerate_relation(C))
        ground_sol = _solve(ground_lp, m)
        report["ground"] = _lp_summary(ground_lp, ground_sol)
        report["agree"] = _agree(sol, ground_sol)
    return report


def cmd_count(m: RunManifest) -> dict:
    C, _, _ = _circuit_and_query(m)
    report = {"count": count(C), "gates": len(C.gates), "edges": C.size}
    if m.enumerate:
        report["tuples"] = [dict(t) for t in enumerate_relation(C).sorted_tuples()]
    return report


def parse_tuple_line(line: str) -> Tuple:
    """A JSON object, or ``attr=value`` pairs separated by commas."""
    line = line.strip()
    if line.startswith("{"):
        return Tuple({str(k): v for k, v in json.loads(line).items()})
    pairs = {}
    for part in line.split(","):
        attr, sep, value = part.partition("=")
        if not sep:
            raise UsageError(f"cannot read tuple {line!r}; expected attr=value pairs")
        pairs[attr.strip()] = value.strip()
    return Tuple(pairs)


def cmd_reconstruct(m: RunManifest, stdin=None) -> dict:
    C, _, _ = _circuit_and_query(m)
    W = edge_weighting_from_json(json.loads(Path(m.weights).read_text()))
    if m.enumerate:
        omega = reconstruct(C, W)
    else:
        stdin = sys.stdin if stdin is None else stdin
        queries = [parse_tuple_line(line) for line in stdin if line.strip()]
        omega = tuple_weights(C, W, queries)
    rows = weighting_to_json(omega)
    return {"tuples": rows, "total": sum(r["weight"] for r in rows)}


def cmd_validate(m: RunManifest) -> dict:
    if m.circuit:
        C = load_circuit(m.circuit)
    else:
        C = compile_query(_read_query(m.query), load_database(m.database))
    return validate(C, check_disjointness=m.disjointness).to_json()


def cmd_bench(m: RunManifest) -> dict:
    Q = parse_query(PROJECTS_QUERY)
    rows = []
    for n in m.sizes:
        db = star_schema_database(n)

        clock = _Clock()
        C = normalize(compile_query(Q, db))
        L = parse_caslp(PROJECTS_CASLP, auto_domain=_circuit_domain(C))
        rewritten = rewrite(L, C)
        rewrite_sol = _solve(rewritten, m)
        rewrite_ms = clock.ms()

        clock = _Clock()
        grounded = ground(L, eval_naive(Q, db))
        ground_sol = _solve(grounded, m)
        ground_ms = clock.ms()

        row = {
            "N": n,
            "ground_vars": len(grounded.variables),
            "rewrite_vars": len(rewritten.variables),
            "ground_ms": ground_ms,
            "rewrite_ms": rewrite_ms,
            "ground_opt": ground_sol.objective_value,
            "rewrite_opt": rewrite_sol.objective_value,
            "agree": _agree(rewrite_sol, ground_sol),
        }
        if not m.timing:
            del row["ground_ms"], row["rewrite_ms"]
        rows.append(row)
    report = {"rows": rows, "agree": all(r["agree"] for r in rows)}
    if m.output:
        Path(m.output).write_text(bench_csv(rows))
    return report


def bench_csv(rows) -> str:
    columns = [c for c in ("N", "ground_vars", "rewrite_vars", "ground_ms", "rewrite_ms") if c in rows[0]]
    lines = [",".join(columns)]
    lines += [",".join(str(r[c]) for c in columns) for r in rows]
    return "\n".join(lines) + "\n"


COMMANDS = {
    "compile": cmd_compile,
    "solve": cmd_solve,
    "dwc": cmd_dwc,
    "count": cmd_count,
    "reconstruct": cmd_reconstruct,
    "validate": cmd_validate,
    "bench": cmd_bench,
}


# -- argument parsing ------------------------------------------------------


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # the same flags are accepted before and after the subcommand; the
    # subcommand copies default to SUPPRESS so they never clobber earlier values
    def default(v):
        return argparse.SUPPRESS if suppress else v

    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=default(0))
    p.add_argument("--format", choices=("json", "text"), default=default("text"))
    p.add_argument("--external-solver", metavar="CMD", default=default(None),
                   help="solver command; gets the LP file path (or substitutes {lp})")
    p.add_argument("--compare", action="store_true", default=default(False),
                   help="also solve the ground program over the enumerated answers and check agreement")
    p.add_argument("--enumerate", action="store_true", default=default(False),
                   help="materialize the full answer set (count, reconstruct)")
    p.add_argument("--no-timing", dest="timing", action="store_false", default=default(True),
                   help="leave wall-clock fields out so output is byte-stable")
    return p


def _sizes(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="factorlp", description=__doc__.split("\n")[0],
                                     parents=[_global_flags(False)])
    sub = parser.add_subparsers(dest="mode", required=True)
    flags = _global_flags(True)

    def add(name, help_text):
        return sub.add_parser(name, help=help_text, parents=[flags])

    def inputs(p, relation=False):
        p.add_argument("--circuit", help="circuit JSON file")
        p.add_argument("--query", help="query file (or the query text itself)")
        p.add_argument("--db", dest="database", help="directory of <relation>.csv / .json files")
        if relation:
            p.add_argument("--relation", help="relation file (.csv with header, or .json)")

    p = add("compile", "compile an acyclic query into a circuit")
    p.add_argument("--query", required=True)
    p.add_argument("--db", dest="database", required=True)
    p.add_argument("-o", "--output", help="write the circuit JSON here")

    p = add("solve", "rewrite a CAS-LP over a circuit and solve it")
    inputs(p)
    p.add_argument("--caslp", required=True, help="CAS-LP JSON file")
    p.add_argument("--minimize", action="store_true", help="accept sense 'min' (extension)")
    p.add_argument("-o", "--output", help="write the optimal edge weighting here")

    p = add("dwc", "dependency weighted count")
    inputs(p, relation=True)

    p = add("count", "number of tuples represented by a circuit")
    inputs(p)

    p = add("reconstruct", "tuple weights from an edge weighting")
    inputs(p)
    p.add_argument("--weights", required=True, help="edge weighting JSON file")

    p = add("validate", "check the structural rules of a circuit")
    inputs(p)
    p.add_argument("--disjointness", action="store_true", help="also check unions by enumeration")

    p = add("bench", "ground vs rewritten LP sizes on the star schema")
    p.add_argument("--sizes", type=_sizes, default=[5, 10, 20])
    p.add_argument("-o", "--output", help="write the CSV here (default: stdout)")
    return parser


def manifest_from_args(args: argparse.Namespace) -> RunManifest:
    known = RunManifest.__dataclass_fields__
    return RunManifest(**{k: v for k, v in vars(args).items() if k in known})


# -- output ----------------------------------------------------------------


def _flatten(prefix, value, out):
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    else:
        out.append(f"{prefix}: {value}")


def render(mode: str, report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True)
    if mode == "reconstruct":
        lines = [",".join(f"{a}={v}" for a, v in sorted(r["tuple"].items())) + f"\t{r['weight']!r}"
                 for r in report["tuples"]]
        return "\n".join(lines + [f"total\t{report['total']!r}"])
    if mode == "bench":
        return bench_csv(report["rows"]).rstrip("\n")
    if mode == "count" and "tuples" in report:
        report = dict(report)
        tuples = report.pop("tuples")
        head = []
        _flatten("", report, head)
        return "\n".join(head + [",".join(f"{a}={v}" for a, v in sorted(t.items())) for t in tuples])
    if mode == "validate":
        lines = [f"ok: {report['ok']}"]
        lines += [f"{v['rule']} at {v['at']}: {v['message']}" for v in report["violations"]]
        return "\n".join(lines)
    lines = []
    _flatten("", report, lines)
    return "\n".join(lines)


def run(m: RunManifest, stdout=None, stdin=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    m.check()
    random.seed(m.seed)
    if m.mode == "reconstruct":
        report = cmd_reconstruct(m, stdin)
    else:
        report = COMMANDS[m.mode](m)
    print(render(m.mode, report, m.format), file=stdout)
    if report.get("agree") is False:
        raise OracleMismatch("rewritten and ground programs disagree; see the report above")
    if m.mode == "validate" and not report["ok"]:
        return EXIT_DATA
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return run(manifest_from_args(args))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotAcyclicError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_ACYCLIC
    except OracleMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (NumericError, SolverError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (FactorLPError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
