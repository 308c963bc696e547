"""Exception types shared across the package.

Every failure mode that callers are expected to handle gets a named type;
plain ValueError is reserved for programming errors (bad shapes, invalid
enum values) that indicate a bug at the call site.
"""


class DomainError(ValueError):
    """Argument outside the mathematical domain of a special function."""


class SingularError(ValueError):
    """Evaluation requested on top of a kernel singularity."""


class DegenerateError(RuntimeError):
    """Point cloud cannot be partitioned: more than ncrit coincident points
    would force the tree beyond its maximum depth."""


class BreakdownError(RuntimeError):
    """Krylov recurrence produced an exact zero it cannot continue from."""


class FactorizationError(RuntimeError):
    """Incomplete factorization failed for every diagonal shift tried."""


class InnerSolveError(RuntimeError):
    """Inner boundary solve hit its iteration cap.

    Carries the partial flux so the caller can decide whether to accept it.
    """

    def __init__(self, message, flux=None, residual=None):
        super().__init__(message)
        self.flux = flux
        self.residual = residual


class SizeError(ValueError):
    """Problem size exceeds a hard limit of a dense code path."""


class NoConvergenceError(RuntimeError):
    """Iterative eigenvalue sweep exceeded its sweep budget."""
