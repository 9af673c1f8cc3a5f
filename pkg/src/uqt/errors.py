"""Exception hierarchy.

Every exception carries a short machine-readable ``code`` so the command line
front end can print a greppable prefix and choose an exit status.
"""


class UQTError(Exception):
    code = "E_UQT"


class ValidationError(UQTError, ValueError):
    """Malformed input: bad shapes, non-simplex vectors, corrupt files."""

    code = "E_VALIDATION"


class UndefinedMeasureError(UQTError, ValueError):
    """A measure/rule combination the framework leaves undefined."""

    code = "E_UNDEFINED"


class CentralPredictionUndefinedError(UndefinedMeasureError):
    code = "E_CENTRAL_UNDEFINED"


class DegenerateLabelsError(UQTError, ValueError):
    """AUROC cannot be computed: only one class of labels is present."""

    code = "E_DEGENERATE"


class InvariantViolation(UQTError, ArithmeticError):
    """A numerical invariant that must hold by construction was violated."""

    code = "E_INVARIANT"
