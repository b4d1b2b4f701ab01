"""Exception hierarchy shared by all modules."""


class FactorLPError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(FactorLPError):
    """Attribute sets do not line up (unknown attribute, arity, empty schema)."""


class ParseError(FactorLPError):
    """Malformed input text. Carries an optional line (and column) number."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class CircuitError(FactorLPError):
    """Structurally invalid circuit, or an operation needing a normalized one."""


class MembershipError(FactorLPError):
    """A tuple was expected to belong to a relation and does not."""


class NotAcyclicError(FactorLPError):
    """GYO reduction got stuck; ``residual`` holds the remaining hyperedges."""

    def __init__(self, residual):
        self.residual = [tuple(sorted(e)) for e in residual]
        super().__init__(f"query is not alpha-acyclic; residual hyperedges: {self.residual}")


class CompileError(FactorLPError):
    """Query cannot be compiled against the given database / join tree."""


class SoundnessError(FactorLPError):
    """Edge weighting violates a flow condition."""


class NumericError(FactorLPError):
    """NaN or infinite coefficient handed to the solver."""


class SolverError(FactorLPError):
    """An external solver failed or produced unreadable output."""
