"""Exception types shared across the package."""


class VmeError(Exception):
    """Base class for all package errors."""


class NonHermitianInput(VmeError):
    """A matrix violates the Hermiticity tolerance."""


class DimensionMismatch(VmeError):
    """Operands have incompatible dimensions."""


class ConvergenceFailure(VmeError):
    """An iterative routine stalled before reaching its tolerance."""


class UnsupportedDimension(VmeError):
    """The ansatz only covers state dimensions 2 and 4."""


class NormViolation(VmeError):
    """A state expected to be normalized is not."""


class NearZeroEnergy(VmeError):
    """|<phi|H|phi>| fell below the division guard."""


class SingularSystem(VmeError):
    """A linear system is too ill-conditioned to solve reliably."""


class MaxIterations(VmeError):
    """An iteration budget was exhausted without convergence."""


class ComplexResidue(VmeError):
    """A value that must be real (or purely imaginary) has a residue above tolerance."""


class CacheMiss(VmeError):
    """An overlap cache does not cover the requested elements."""


class BoundViolation(VmeError):
    """A value to be estimated lies outside its stated bound."""


class EmptyGroup(VmeError):
    """A statistic was requested over an empty group of runs."""
