"""Exception types shared across catforge."""


class CatforgeError(Exception):
    """Base class for all catforge errors."""


class TruncationError(CatforgeError):
    """The Fock-space cutoff is too small for the requested state."""


class DegenerateStateError(CatforgeError):
    """A construction produced (or would produce) the zero vector."""


class HeadroomError(CatforgeError):
    """An operator would push amplitude beyond the truncation."""


class InfeasibleError(CatforgeError):
    """A constrained optimization could not find a feasible point."""


class OptimizationError(CatforgeError):
    """All optimizer restarts failed to produce a finite value."""
