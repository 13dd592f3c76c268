"""Exception types shared across the package."""


class SparseSwapsError(Exception):
    """Base class for all errors raised by this package."""


# --- tensor file format ---

class MalformedHeader(SparseSwapsError):
    """File header is not a valid SSWT header."""


class DimensionOverflow(SparseSwapsError):
    """Declared dimensions exceed the supported element budget."""


class TruncatedPayload(SparseSwapsError):
    """Payload holds fewer values than the header declares."""


class NonFiniteValue(SparseSwapsError):
    """A loaded matrix contains NaN or infinity."""


class NonBinaryEntry(SparseSwapsError):
    """A loaded mask contains a value other than exactly 0.0 or 1.0."""


class IoFailure(SparseSwapsError):
    """Underlying OS-level read or write failed."""


# --- numerics / shapes ---

class ShapeMismatch(SparseSwapsError):
    """Operands have incompatible dimensions."""


class DecompositionFailure(SparseSwapsError):
    """A matrix factorization did not converge."""


# --- constraints and refinement ---

class IncompatibleConstraint(SparseSwapsError):
    """Sparsity constraint cannot apply to the given dimensions."""


class InfeasibleWarmstart(SparseSwapsError):
    """Initial mask violates the sparsity constraint."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class IndexNotInSet(SparseSwapsError):
    """Swap index is not in the required pruned/kept set."""


class EmptySet(SparseSwapsError):
    """Operation requires a non-empty pruned and kept set."""


class TooLarge(SparseSwapsError):
    """Exhaustive enumeration would exceed the allowed budget."""


class InvalidConfig(SparseSwapsError):
    """Configuration values are out of range or inconsistent."""
