"""Exception hierarchy. Every error carries a stable ``code`` string."""


class BFRBError(Exception):
    code = "BFRB_ERROR"


class DomainViolation(BFRBError, ValueError):
    code = "DOMAIN_VIOLATION"


class DimensionMismatch(BFRBError, ValueError):
    code = "DIMENSION_MISMATCH"


class EmptySamples(BFRBError, ValueError):
    code = "EMPTY_SAMPLES"


class NoClosedForm(BFRBError, NotImplementedError):
    code = "NO_CLOSED_FORM"


class EmptyConstraint(BFRBError, ValueError):
    code = "EMPTY_CONSTRAINT"


class InadmissibleParameters(BFRBError, ValueError):
    code = "INADMISSIBLE_PARAMETERS"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class MissingLipschitz(BFRBError, ValueError):
    code = "MISSING_L"


class NoTrace(BFRBError, ValueError):
    code = "NO_TRACE"


class NoReferenceSolution(BFRBError, ValueError):
    code = "NO_REFERENCE_SOLUTION"


class OracleFailure(BFRBError, RuntimeError):
    code = "ORACLE_FAILURE"


class InvalidSpec(BFRBError, ValueError):
    code = "INVALID_SPEC"


class TauNonpositive(BFRBError, ValueError):
    code = "TAU_NONPOSITIVE"


class ConfigError(BFRBError, ValueError):
    code = "CONFIG_PARSE_ERROR"
