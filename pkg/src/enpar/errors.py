"""Exception hierarchy.

Every error carries a stable ``code`` that the CLI reports on stderr and maps
to an exit status.
"""


class EnparError(Exception):
    code = "EnparError"
    exit_status = 3

    stage = None

    def to_json(self):
        out = {"error": self.code, "message": str(self)}
        if self.stage:
            out["stage"] = self.stage
        return out


class InputError(EnparError):
    """Malformed game, strategy or configuration."""

    code = "InputError"
    exit_status = 1


class DanglingEdge(InputError):
    code = "DanglingEdge"


class EmptySuccessorSet(InputError):
    code = "EmptySuccessorSet"


class BadDistribution(InputError):
    code = "BadDistribution"


class ColorOutOfRange(InputError):
    code = "ColorOutOfRange"


class DuplicateEdge(InputError):
    code = "DuplicateEdge"


class BadReward(InputError):
    code = "BadReward"


class BadJumpTable(InputError):
    code = "BadJumpTable"


class SchemaError(InputError):
    code = "SchemaError"


class LimitError(EnparError):
    """A configured budget or limit was exhausted."""

    code = "LimitError"
    exit_status = 2


class BudgetExceeded(LimitError):
    code = "BudgetExceeded"


class Divergence(LimitError):
    code = "Divergence"


class CapLimit(LimitError):
    code = "CapLimit"


class CapTooSmallSuspected(LimitError):
    code = "CapTooSmallSuspected"


class InvariantViolation(EnparError):
    """Internal consistency check failed; signals a bug, not bad input."""

    code = "InvariantViolation"
    exit_status = 3


class UniformityViolated(InvariantViolation):
    code = "UniformityViolated"


class SynthesisGapDetected(InvariantViolation):
    code = "SynthesisGapDetected"

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class EnergyTrackOverflow(InvariantViolation):
    code = "EnergyTrackOverflow"


class SingularSystem(InvariantViolation):
    code = "SingularSystem"
