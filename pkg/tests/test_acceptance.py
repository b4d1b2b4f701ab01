"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) for just the verdict
lines; under pytest the verdicts are also repeated in the terminal summary.
"""
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from _support import (  # noqa: E402
    caslp_for,
    circuit_suite,
    partition_violations,
    proof_tree_violations,
    random_omega,
)
from factorlp.caslp import dwc_circuit, dwc_ground, ground, parse_caslp, rewrite, tuple_variable  # noqa: E402
from factorlp.circuit import count, edge_relation, enumerate_relation, normalize  # noqa: E402
from factorlp.cli import RunManifest, cmd_bench  # noqa: E402
from factorlp.cqcompile import compile_query, eval_naive, gyo_join_tree, parse_query  # noqa: E402
from factorlp.generators import (  # noqa: E402
    PROJECTS_CASLP,
    PROJECTS_QUERY,
    dwc_example_relation,
    example_circuit,
    projects_database,
    random_acyclic_query,
    random_caslp,
    random_relation,
)
from factorlp.linprog import Status, evaluate, solve  # noqa: E402
from factorlp.reconstruct import (  # noqa: E402
    induce_edge_weighting,
    is_sound,
    lift_weighting,
    project_weighting,
    reconstruct,
    reconstruct_table,
    tuple_weight,
)
from factorlp.relational import Database, Relation, project_out  # noqa: E402

N_CIRCUITS = 200
N_PROJECTION = 100
N_QUERIES = 100


def verdict(number, label, ok, detail=""):
    line = f"[criterion {number:2d}] {label}: {'PASS' if ok else 'FAIL'}"
    print(line + (f" ({detail})" if detail else ""))
    assert ok, detail or label


_SUITE = None


def suite():
    global _SUITE
    if _SUITE is None:
        _SUITE = circuit_suite(N_CIRCUITS, seed=1)
    return _SUITE


def test_criterion_01_dwc_example_value():
    start = time.perf_counter()
    R = dwc_example_relation()
    via_relation = solve(dwc_ground(R)).objective_value
    via_circuit = solve(dwc_circuit(normalize(compile_query(parse_query("S(x,y,z) :- S(x,y,z)."), Database({"S": R}))))).objective_value
    elapsed = time.perf_counter() - start
    ok = abs(via_relation - 1.5) <= 1e-6 and abs(via_circuit - 1.5) <= 1e-6 and elapsed < 1.0
    verdict(1, "dwc example value", ok, f"ground {via_relation}, circuit {via_circuit}, {elapsed:.3f}s")


def test_criterion_02_rewriting_equivalence():
    start = time.perf_counter()
    bad = []
    statuses = {}
    for k, (_, C, R) in enumerate(suite()):
        L = caslp_for(random.Random(7000 + k), C)
        a = solve(rewrite(L, C))
        b = solve(ground(L, R))
        statuses[str(b.status)] = statuses.get(str(b.status), 0) + 1
        if a.status != b.status or (a.status == Status.OPTIMAL and abs(a.objective_value - b.objective_value) > 1e-6):
            bad.append((k, a.status, a.objective_value, b.status, b.objective_value))
    elapsed = time.perf_counter() - start
    verdict(2, "rewriting equivalence", not bad and elapsed < 60, f"{statuses}, {elapsed:.1f}s, mismatches {bad[:3]}")


def test_criterion_03_size_bound():
    bad = []
    for k, (_, C, _) in enumerate(suite()):
        L = caslp_for(random.Random(7000 + k), C)
        lp = rewrite(L, C)
        if len(lp.variables) != C.size or len(lp.constraints) > L.m + 3 * C.size:
            bad.append((k, len(lp.variables), C.size, len(lp.constraints), L.m))
    verdict(3, "size bound", not bad, f"violations {bad[:3]}")


def test_criterion_04_soundness():
    bad = []
    for k, (_, C, R) in enumerate(suite()):
        omega = random_omega(random.Random(8000 + k), R)
        if not is_sound(C, induce_edge_weighting(C, omega), tol=1e-9):
            bad.append(k)
    verdict(4, "soundness of induced weightings", not bad, f"unsound at {bad[:5]}")


def _edge_mass_violations(C, W):
    table = reconstruct_table(C, W)
    omega = table[C.output_edge]
    problems = []
    for e in range(C.size):
        if abs(sum(table[e].values()) - W[e]) > 1e-9:
            problems.append(f"edge mass mismatch at edge {e}")
        child = C.edges[e][0]
        sums = {}
        for t in edge_relation(C, e):
            key = t.restrict(C.gate_vars[child])
            sums[key] = sums.get(key, 0.0) + omega[t]
        for tp, w in table[e].items():
            if abs(w - sums.get(tp, 0.0)) > 1e-9:
                problems.append(f"value split mismatch at edge {e} (gate {child})")
                break
    return problems


def test_criterion_05_round_trip():
    bad = []
    for k, (_, C, R) in enumerate(suite()):
        W = induce_edge_weighting(C, random_omega(random.Random(9000 + k), R))
        omega = {t: tuple_weight(C, W, t) for t in R}
        again = induce_edge_weighting(C, omega)
        if any(abs(a - b) > 1e-9 for a, b in zip(W, again)):
            bad.append((k, "round trip"))
        full = reconstruct(C, W)
        if any(abs(full[t] - omega[t]) > 1e-9 for t in R):
            bad.append((k, "lazy and materialized weights differ"))
        bad += [(k, p) for p in _edge_mass_violations(C, W)]
    verdict(5, "round trip and edge masses", not bad, f"{bad[:3]}")


def test_criterion_06_proof_tree_and_partitions():
    bad = []
    checked = 0
    for k, (_, C, R) in enumerate(suite()):
        for t in R:
            checked += 1
            bad += [(k, t, p) for p in proof_tree_violations(C, t)]
        bad += [(k, None, p) for p in partition_violations(C)]
    verdict(6, "proof-tree structure and partitions", not bad, f"{checked} proof-trees, {bad[:3]}")


def test_criterion_07_counting():
    bad = [k for k, (raw, C, R) in enumerate(suite()) if count(raw) != len(R) or count(C) != len(R)]
    sample = count(example_circuit())
    verdict(7, "counting", not bad and sample == 5, f"sample count {sample}, mismatches {bad[:5]}")


def test_criterion_08_projection():
    bad = []
    statuses = {}
    attributes = ("a", "b", "c", "d")
    for k in range(N_PROJECTION):
        rng = random.Random(10_000 + k)
        attrs = attributes[: rng.randint(2, 4)]
        R = random_relation(rng, attrs, n_values=3, max_tuples=20)
        if not len(R):
            R = Relation.from_rows(attrs, [["0"] * len(attrs)])
        Z = rng.sample(attrs, rng.randint(1, len(attrs) - 1))
        keep = [a for a in attrs if a not in Z]
        L = random_caslp(rng, keep, {a: ("0", "1", "2") for a in keep})
        Rp = project_out(R, Z)
        full_lp, proj_lp = ground(L, R), ground(L, Rp)
        a, b = solve(full_lp), solve(proj_lp)
        statuses[str(a.status)] = statuses.get(str(a.status), 0) + 1
        if a.status != b.status or (a.status == Status.OPTIMAL and abs(a.objective_value - b.objective_value) > 1e-6):
            bad.append((k, "optima", a.status, a.objective_value, b.status, b.objective_value))
            continue
        omega = {t: rng.uniform(0, 2) for t in R}
        if a.status == Status.OPTIMAL:
            omega = {t: a.assignment[tuple_variable(t)] for t in R}
        omega_p = project_weighting(omega, Z)
        lifted = lift_weighting(omega_p, R, Z)
        v_full = evaluate(full_lp.objective, {tuple_variable(t): w for t, w in omega.items()})
        v_proj = evaluate(proj_lp.objective, {tuple_variable(t): w for t, w in omega_p.items()})
        v_lift = evaluate(full_lp.objective, {tuple_variable(t): w for t, w in lifted.items()})
        if abs(v_full - v_proj) > 1e-9 or abs(v_proj - v_lift) > 1e-9:
            bad.append((k, "objective transfer", v_full, v_proj, v_lift))
        if project_weighting(lifted, Z).keys() != omega_p.keys() or any(
            abs(project_weighting(lifted, Z)[t] - w) > 1e-9 for t, w in omega_p.items()
        ):
            bad.append((k, "project after lift"))
        if a.status == Status.OPTIMAL:
            assign_p = {tuple_variable(t): w for t, w in omega_p.items()}
            if max((c.violation(assign_p) for c in proj_lp.constraints), default=0.0) > 1e-6:
                bad.append((k, "projected weighting infeasible"))
    verdict(8, "existential projection", not bad, f"{statuses}, {bad[:3]}")


def test_criterion_09_motivating_example():
    db = projects_database()
    Q = parse_query(PROJECTS_QUERY)
    C = normalize(compile_query(Q, db))
    domain = {}
    for attr, value in sorted(C.input_index):
        domain.setdefault(attr, []).append(value)
    L = parse_caslp(PROJECTS_CASLP, auto_domain=domain)
    sol = solve(rewrite(L, C))
    oracle = solve(ground(L, eval_naive(Q, db)))
    W = [max(0.0, sol.assignment[f"e{e}"]) for e in range(C.size)]
    R = enumerate_relation(C)
    weights = {t: tuple_weight(C, W, t) for t in R}
    total = sum(weights.values())
    caps_ok = True
    for attr in ("r", "d"):
        for v in domain[attr]:
            load = sum(w for t, w in weights.items() if t[attr] == v)
            caps_ok &= load <= 100 + 1e-6
    ok = (
        len(R) == 12
        and abs(sol.objective_value - 300) <= 1e-6
        and abs(oracle.objective_value - 300) <= 1e-6
        and abs(total - 300) <= 1e-6
        and caps_ok
        and all(w >= -1e-12 for w in weights.values())
    )
    verdict(9, "motivating example end-to-end", ok, f"rewrite {sol.objective_value}, ground {oracle.objective_value}, reconstructed total {total}")


def test_criterion_10_scaling():
    rows = cmd_bench(RunManifest("bench", sizes=[5, 10, 20]))["rows"]
    by_n = {r["N"]: r for r in rows}

    def within(ratio, ideal):
        return ideal / 1.5 <= ratio <= ideal * 1.5

    ok = all(r["agree"] for r in rows) and all(r["ground_vars"] == r["N"] ** 3 for r in rows)
    ratios = []
    for small, big in ((5, 10), (10, 20)):
        g = by_n[big]["ground_vars"] / by_n[small]["ground_vars"]
        w = by_n[big]["rewrite_vars"] / by_n[small]["rewrite_vars"]
        ratios.append((g, w))
        ok &= within(g, (big / small) ** 3) and within(w, big / small)
    table = ", ".join(f"N={r['N']}: {r['ground_vars']} vs {r['rewrite_vars']}" for r in rows)
    verdict(10, "scaling demonstration", ok, f"{table}; ratios {ratios}")


def test_criterion_11_compiler_correctness():
    bad = []
    empty = 0
    for k in range(N_QUERIES):
        rng = random.Random(20_000 + k)
        Q, db = random_acyclic_query(rng, max_atoms=4)
        T = gyo_join_tree(Q)
        C = compile_query(Q, db, T)
        got, want = enumerate_relation(C), eval_naive(Q, db)
        empty += not len(want)
        if set(got) != set(want):
            bad.append(str(Q))
    verdict(11, "compiler correctness", not bad, f"{N_QUERIES} queries, {empty} with empty answers, {bad[:2]}")


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failures += 1
    sys.exit(1 if failures else 0)
