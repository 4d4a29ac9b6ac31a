"""Exception hierarchy shared by all simulator modules."""


class IsacSimError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(IsacSimError):
    """Structural problem with inputs: wrong shape, non-Hermitian coefficient,
    inconsistent dimensions, undeclared variable reference."""


class ParseError(IsacSimError):
    """Config file could not be parsed.  Carries file/line diagnostics."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}:"
            if line is not None:
                loc += f"{line}:"
            loc += " "
        super().__init__(loc + message)
        self.path = path
        self.line = line


class RangeError(IsacSimError):
    """A parsed value violates a config invariant (out of range, wrong order)."""


class InfeasibleError(IsacSimError):
    """An SDP subproblem was certified (heuristically) infeasible."""


class SolverError(IsacSimError):
    """The embedded solver failed to reach the requested tolerances."""


class DegenerateBeamformer(IsacSimError):
    """Rank-1 recovery denominator underflow: the relaxed solution does not
    serve this user (h_k^H C_k h_k ~ 0)."""


class NotPSD(IsacSimError):
    """A matrix required to be positive semidefinite has an eigenvalue below
    the accepted tolerance; indicates an upstream solver failure."""
