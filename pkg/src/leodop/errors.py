"""Exception hierarchy.

Every exception carries a stable ``code`` (its class name) so the CLI can
emit machine-greppable one-line failures and map categories to exit codes.
"""


class LeodopError(Exception):
    """Base class for all package errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# --- input / parse errors -------------------------------------------------

class TleError(LeodopError):
    pass


class ChecksumMismatch(TleError):
    def __init__(self, line_number, expected, computed):
        self.line_number = line_number
        super().__init__(
            f"TLE checksum mismatch on line {line_number}: "
            f"expected {expected}, computed {computed}"
        )


class MalformedField(TleError):
    def __init__(self, field, columns, reason=""):
        self.field = field
        self.columns = columns
        msg = f"malformed TLE field '{field}' (columns {columns[0]}-{columns[1]})"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class TruncatedInput(TleError):
    pass


class ScenarioError(LeodopError):
    pass


class ParseError(ScenarioError):
    def __init__(self, line_number, text):
        self.line_number = line_number
        super().__init__(f"line {line_number}: cannot parse {text!r}")


class ValidationError(ScenarioError):
    def __init__(self, key, reason):
        self.key = key
        super().__init__(f"invalid value for '{key}': {reason}")


class UnknownKey(ScenarioError):
    def __init__(self, key, suggestion=None):
        self.key = key
        msg = f"unknown key '{key}'"
        if suggestion:
            msg += f" (did you mean '{suggestion}'?)"
        super().__init__(msg)


# --- orbit / geometry errors ----------------------------------------------

class PropagationDiverged(LeodopError):
    pass


class EpochOutOfRange(LeodopError):
    pass


class TargetUnreachable(LeodopError):
    pass


class NearSingularOrigin(LeodopError):
    pass


class DegenerateState(LeodopError):
    pass


class NoPassInWindow(LeodopError):
    pass


class MultipleMinima(LeodopError):
    pass


# --- measurement model errors ----------------------------------------------

class CoincidentPoints(LeodopError):
    pass


class ZeroElevation(LeodopError):
    pass


# --- estimation / analysis errors -------------------------------------------

class MissingAcceleration(LeodopError):
    pass


class SingularNormalMatrix(LeodopError):
    def __init__(self, condition):
        self.condition = condition
        super().__init__(f"normal matrix is numerically singular (cond ~ {condition:.3e})")


class SingularGeometry(LeodopError):
    def __init__(self, direction=None):
        self.direction = direction
        msg = "scaled geometry matrix is numerically singular"
        if direction is not None:
            msg += f"; weakest scaled direction {direction}"
        super().__init__(msg)


class OrbitBelowSurface(LeodopError):
    pass


class DegenerateCovariance(LeodopError):
    pass


class DegenerateSamples(LeodopError):
    pass


class TooFewConverged(LeodopError):
    def __init__(self, converged, total):
        self.converged = converged
        self.total = total
        super().__init__(f"only {converged}/{total} Monte Carlo trials converged")


# --- experiment errors -------------------------------------------------------

class WindowNotVisible(LeodopError):
    pass


class PassExceeded(LeodopError):
    pass


class EmptyGrid(LeodopError):
    pass
