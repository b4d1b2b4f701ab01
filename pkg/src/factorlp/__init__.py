"""Linear programs over conjunctive query answers, solved on factorized circuits."""
from .caslp import (
    CASLP,
    CASConstraint,
    CASVariable,
    dwc_caslp,
    dwc_circuit,
    dwc_ground,
    ground,
    parse_caslp,
    rewrite,
    soundness_constraints,
)
from .circuit import (
    Circuit,
    CircuitBuilder,
    Gate,
    ValidationReport,
    count,
    edge_relation,
    enumerate_relation,
    normalize,
    normalize_with_map,
    proof_tree,
    validate,
)
from .cqcompile import (
    ConjunctiveQuery,
    JoinTree,
    compile_query,
    eval_naive,
    gyo_join_tree,
    hypergraph,
    parse_query,
)
from .errors import (
    CircuitError,
    CompileError,
    FactorLPError,
    MembershipError,
    NotAcyclicError,
    NumericError,
    ParseError,
    SchemaError,
    SolverError,
    SoundnessError,
)
from .linprog import (
    LinearConstraint,
    LinearProgram,
    Solution,
    Status,
    evaluate,
    export_lp_text,
    solve,
    solve_external,
)
from .reconstruct import (
    induce_edge_weighting,
    is_sound,
    lift_weighting,
    project_weighting,
    reconstruct,
    reconstruct_table,
    tuple_weight,
)
from .relational import (
    Database,
    Relation,
    Tuple,
    extensions,
    load_relation,
    natural_join,
    project_out,
    select_eq,
)

__version__ = "0.1.0"
