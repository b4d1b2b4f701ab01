"""Moving weights between the tuples of a circuit's relation and its edges.

An edge weighting ``W`` induced by a tuple weighting ``omega`` puts on each
edge the total weight of the tuples whose proof-tree uses that edge. Going
back, every sound ``W`` is induced by at least one ``omega``; we build one
by the bottom-up partial weightings ``omega[e]`` and can evaluate it on a
single tuple without enumerating the relation.
"""
from __future__ import annotations

from dataclasses import dataclass

from .circuit import INPUT, PRODUCT, UNION, Circuit, membership, proof_tree, require_normalized, _all_relations
from .errors import MembershipError, SchemaError, SoundnessError
from .relational import Relation, Tuple, extensions, project_out

EPS_FLOW = 1e-9
EPS_ZERO = 1e-12


@dataclass
class SoundnessCheck:
    sound: bool
    gate: int | None = None
    message: str = ""

    def __bool__(self):
        return self.sound


def _as_list(C: Circuit, W) -> list:
    if isinstance(W, dict):
        try:
            return [float(W[e]) for e in range(C.size)]
        except KeyError as exc:
            raise SchemaError(f"edge weighting has no weight for edge {exc}") from None
    W = [float(w) for w in W]
    if len(W) != C.size:
        raise SchemaError(f"edge weighting has {len(W)} entries, circuit has {C.size} edges")
    return W


def is_sound(C: Circuit, W, tol=EPS_FLOW) -> SoundnessCheck:
    """Check the flow condition at every gate (and nonnegativity of every edge)."""
    W = _as_list(C, W)
    for e, w in enumerate(W):
        if w < -tol:
            return SoundnessCheck(False, C.edges[e][0], f"edge {e} has negative weight {w}")
    for u, gate in enumerate(C.gates):
        ins = [W[e] for e in C.in_edges[u]]
        out_sum = sum(W[e] for e in C.out_edges[u])
        is_root = u == C.root
        if gate.kind == UNION and not is_root and abs(sum(ins) - out_sum) > tol:
            return SoundnessCheck(False, u, f"union gate {u}: in {sum(ins)} != out {out_sum}")
        if gate.kind == PRODUCT:
            if ins and max(ins) - min(ins) > tol:
                return SoundnessCheck(False, u, f"product gate {u}: ingoing weights differ {ins}")
            if ins and not is_root and abs(ins[0] - out_sum) > tol:
                return SoundnessCheck(False, u, f"product gate {u}: in {ins[0]} != out {out_sum}")
    return SoundnessCheck(True)


def require_sound(C: Circuit, W):
    check = is_sound(C, W)
    if not check:
        raise SoundnessError(check.message)


def induce_edge_weighting(C: Circuit, omega) -> list:
    """``W(e)`` = sum of ``omega`` over tuples whose proof-tree contains ``e``."""
    W = [0.0] * C.size
    for t, w in omega.items():
        if not isinstance(t, Tuple):
            t = Tuple(t)
        for e in proof_tree(C, t).edges:
            W[e] += w
    return W


def _child_weight(W, C, u):
    """Total weight entering gate ``u`` from its children (the ``Case 2`` denominator)."""
    return sum(W[e] for e in C.in_edges[u])


def reconstruct_table(C: Circuit, W) -> list:
    """Materialize ``omega[e]`` over ``[[C]]_u`` for every edge ``e = (u -> v)``.

    Enumerates every subcircuit relation, so only for small circuits.
    """
    require_normalized(C)
    W = _as_list(C, W)
    require_sound(C, W)
    rels = _all_relations(C)
    per_gate = [None] * len(C.gates)  # unscaled omega[e] / W(e) shared by all out-edges of u
    for u in C.topological_order:
        gate = C.gates[u]
        ins = C.in_edges[u]
        if gate.kind == INPUT:
            per_gate[u] = {t: 1.0 for t in rels[u]}
        elif gate.kind == UNION:
            denom = _child_weight(W, C, u)
            if denom <= EPS_ZERO:
                per_gate[u] = {t: 0.0 for t in rels[u]}
            else:
                shares = {}
                for e in ins:
                    child = C.edges[e][0]
                    for t, w in _scaled(per_gate[child], W[e]).items():
                        shares[t] = shares.get(t, 0.0) + w / denom
                per_gate[u] = shares
        else:
            if any(W[e] <= EPS_ZERO for e in ins):
                per_gate[u] = {t: 0.0 for t in rels[u]}
            else:
                acc = {Tuple(): 1.0}
                for e in ins:
                    child = C.edges[e][0]
                    # omega[e_i](t_i) / W(e_i) is exactly the unscaled child table
                    acc = {a * b: wa * wb for a, wa in acc.items() for b, wb in per_gate[child].items()}
                per_gate[u] = acc
    return [_scaled(per_gate[C.edges[e][0]], W[e]) for e in range(C.size)]


def _scaled(table, factor):
    return {t: factor * w for t, w in table.items()}


def reconstruct(C: Circuit, W) -> dict:
    """A tuple weighting of ``[[C]]`` inducing ``W`` (full enumeration)."""
    return reconstruct_table(C, W)[C.output_edge]


def tuple_weight(C: Circuit, W, t, *, check=True) -> float:
    """``omega(t)`` for the reconstructed weighting, walking only ``t``'s proof-tree."""
    require_normalized(C)
    W = _as_list(C, W)
    if check:
        require_sound(C, W)
    if not isinstance(t, Tuple):
        t = Tuple(t)
    if t.attributes != C.variables:
        raise MembershipError(f"{t!r} is not over the circuit attributes {sorted(C.variables)}")
    member = membership(C, t)
    if not member[C.root]:
        raise MembershipError(f"{t!r} is not in the relation of the circuit")

    memo = {}

    def unit(u):
        # omega[e](t|var(C_u)) / W(e) for any out-edge e of u
        if u in memo:
            return memo[u]
        gate = C.gates[u]
        ins = C.in_edges[u]
        if gate.kind == INPUT:
            val = 1.0
        elif gate.kind == UNION:
            denom = _child_weight(W, C, u)
            if denom <= EPS_ZERO:
                val = 0.0
            else:
                e = next(e for e in ins if member[C.edges[e][0]])
                val = W[e] * unit(C.edges[e][0]) / denom
        else:
            if any(W[e] <= EPS_ZERO for e in ins):
                val = 0.0
            else:
                val = 1.0
                for e in ins:
                    val *= unit(C.edges[e][0])
        memo[u] = val
        return val

    o = C.output_edge
    # iterative warm-up keeps recursion shallow on deep circuits
    for u in C.topological_order:
        if member[u]:
            unit(u)
    return W[o] * unit(C.edges[o][0])


def tuple_weights(C: Circuit, W, tuples) -> dict:
    W = _as_list(C, W)
    require_sound(C, W)
    return {t: tuple_weight(C, W, t, check=False) for t in tuples}


# -- existential projection ------------------------------------------------


def project_weighting(omega: dict, Z) -> dict:
    """Sum weights over the extensions of each projected tuple."""
    Z = set(Z)
    out = {}
    for t, w in omega.items():
        missing = Z - t.attributes
        if missing:
            raise SchemaError(f"cannot project out {sorted(missing)} from {t!r}")
        key = t.drop(Z)
        out[key] = out.get(key, 0.0) + w
    return out


def lift_weighting(omega_proj: dict, R: Relation, Z) -> dict:
    """Spread each projected weight uniformly over its extensions in ``R``."""
    Z = tuple(Z)
    if not Z:
        return dict(omega_proj)
    projected = project_out(R, Z)
    out = {}
    for tp in projected:
        exts = extensions(R, Z, tp)
        share = omega_proj.get(tp, 0.0) / len(exts)
        for ext in exts:
            out[tp * ext] = share
    return out


def weighting_to_json(omega: dict) -> list:
    rows = sorted(omega.items(), key=lambda kv: sorted(kv[0].items()))
    return [{"tuple": dict(t), "weight": w} for t, w in rows]


def edge_weighting_to_json(W) -> list:
    return [{"edge": e, "weight": float(w)} for e, w in enumerate(W)]


def edge_weighting_from_json(data) -> dict:
    return {int(item["edge"]): float(item["weight"]) for item in data}
