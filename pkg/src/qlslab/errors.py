"""Exception types shared across the package."""


class QlsLabError(Exception):
    """Base class for package-specific failures."""


class InvalidGateError(QlsLabError, ValueError):
    """A gate definition violates its invariants (bad matrix, overlap, ...)."""


class InvalidCircuitError(QlsLabError, ValueError):
    """A circuit references qubits it does not have, or mismatches a state."""


class ZeroProbabilityError(QlsLabError, ArithmeticError):
    """Post-selection on an outcome whose probability is numerically zero."""


class InvalidProblemError(QlsLabError, ValueError):
    """A linear-system instance violates its invariants."""


class SingularProblemError(QlsLabError, ValueError):
    """The system matrix is numerically singular."""


class EmptyEstimateError(QlsLabError, RuntimeError):
    """No eigenvalue estimate survived the relevance threshold."""


class AliasingError(QlsLabError, RuntimeError):
    """The time-scale search could not rule out grid overflow."""


class EmptyPlanError(QlsLabError, RuntimeError):
    """Every candidate rotation was filtered out of an inversion plan."""


class DegenerateRunError(QlsLabError, RuntimeError):
    """A solver run post-selected onto a zero-probability branch."""


class InsufficientShotsError(QlsLabError, RuntimeError):
    """No shots survived conditioning, so an estimator is undefined."""


class CapacityError(QlsLabError, RuntimeError):
    """The requested circuit exceeds the simulator's qubit budget."""
