"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: validation problems exit 2, a violated
proven inequality exits 3 (that always indicates an implementation bug, never
bad input), and solver non-convergence exits 4.
"""


class ThermoError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ThermoError):
    """Invalid input data, model, or parameters."""


class NotZeroOne(ValidationError):
    """Transition matrix entry outside {0, 1}."""


class DeadSymbol(ValidationError):
    """Transition matrix has an all-zero row or column."""


class NotAperiodic(ValidationError):
    """No power of the transition matrix up to the Wielandt bound is positive."""


class LengthMismatch(ValidationError):
    """Words of unequal length where equal length is required."""


class BadTheta(ValidationError):
    """Metric parameter theta outside (0, 1)."""


class MissingWord(ValidationError):
    """A potential table lacks an admissible word."""


class InadmissibleWord(ValidationError):
    """A word violates the transition constraints."""


class WordTooShort(ValidationError):
    """Word does not determine all coordinates a computation needs."""


class ModelMismatch(ValidationError):
    """Operands built over different shift spaces or metric parameters."""


class CohomologousConstant(ValidationError):
    """Observable is (numerically) cohomologous to a constant; the rate
    function degenerates and queries against it are refused."""


class Delta0OutOfRange(ValidationError):
    """delta0 outside the open interval where the certificate is defined."""


class Infeasible(ValidationError):
    """Exact computation would exceed the memory budget."""


class ParseError(ValidationError):
    """Config file is not valid JSON."""


class SchemaError(ValidationError):
    """Config file is valid JSON but violates the model schema."""


class NoConvergence(ThermoError):
    """Iterative solver hit its iteration cap above tolerance."""


class BoundViolated(ThermoError):
    """A numerically checked proven inequality failed.

    Carries the offending report (when available) as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
