"""Exception types shared across the toolkit."""


class StsExoError(Exception):
    """Base class for all toolkit errors."""


class RangeError(StsExoError):
    """Input outside its documented supported range."""


class SchemaError(StsExoError):
    """Malformed data file (missing columns, bad rows, wrong segment set)."""


class NumericError(StsExoError):
    """Non-finite state or parameters fed to a numeric routine."""


class SingularityError(StsExoError):
    """Operation undefined for this model (zero total mass, singular inertia)."""


class GeometryError(StsExoError):
    """Degenerate mechanism geometry (non-positive pulley radius, undefined wire direction)."""


class CouplingInfeasible(StsExoError):
    """Wire-length constraint has no hip angle solution inside the allowed range."""


class SlackWireError(StsExoError):
    """Required wire tension is negative: the circuit is disengaged for this load direction."""


class StrokeError(StsExoError):
    """Gas spring compression outside [0, stroke]."""


class StallError(StsExoError):
    """Transition cannot proceed past some knee angle.

    Carries `stall_angle` (rad) and, when available, the partial `trace`.
    """

    def __init__(self, message, stall_angle=None, trace=None):
        super().__init__(message)
        self.stall_angle = stall_angle
        self.trace = trace


class DivisionGuard(StsExoError):
    """Objective undefined because a knee moment crossed zero inside a sweep."""


class NoFeasibleDesign(StsExoError):
    """Optimizer finished with zero feasible candidates.

    Carries `best_violation` and the corresponding design vector for diagnostics.
    """

    def __init__(self, message, best_violation=None, best_design=None):
        super().__init__(message)
        self.best_violation = best_violation
        self.best_design = best_design


class NoFeasibleActuator(StsExoError):
    """No (spring, count, mounting) combination satisfies the transition constraints."""


class ParseError(StsExoError):
    """Malformed row in an input log; carries the 1-based line number."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
