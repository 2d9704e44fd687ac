"""Exception types shared across the package."""


class ToposError(Exception):
    """Base class for every error raised by toposcx."""


class NonNormalInput(ToposError, ValueError):
    pass


class NonHermitianInput(ToposError, ValueError):
    pass


class NoConvergence(ToposError, RuntimeError):
    pass


class InvalidFamily(ToposError, ValueError):
    pass


class ComplexEigenvalue(ToposError, ValueError):
    pass


class DimensionMismatch(ToposError, ValueError):
    pass


class EmptySet(ToposError, ValueError):
    pass


class NotDirected(ToposError, ValueError):
    pass


class NonCommuting(ToposError, ValueError):
    def __init__(self, i, j, residual=None):
        self.pair = (i, j)
        self.residual = residual
        msg = f"operators {i} and {j} do not commute"
        if residual is not None:
            msg += f" (||[A,B]||_F = {residual:.3e})"
        super().__init__(msg)


class TrivialContext(ToposError, ValueError):
    """The generated algebra would be C*1, which is excluded as a context."""


class NotASubcontext(ToposError, ValueError):
    pass


class OperatorNotInContext(ToposError, ValueError):
    pass


class TooManyAtoms(ToposError, ValueError):
    pass


class TooLarge(ToposError, ValueError):
    pass


class NotASublattice(ToposError, ValueError):
    pass


class FamilyLatticeMismatch(ToposError, ValueError):
    pass


class NotNormalized(ToposError, ValueError):
    pass


class InconsistentFamily(ToposError, RuntimeError):
    pass


class PointNotInContext(ToposError, ValueError):
    pass


class DownSetMismatch(ToposError, ValueError):
    pass


class OutsideMonoid(ToposError, ValueError):
    """A representative left the monoid (lost its monotonicity)."""


class BranchAmbiguity(ToposError, ValueError):
    pass


class InconsistentSamples(ToposError, ValueError):
    pass


class InsufficientSamples(ToposError, ValueError):
    pass


class ParseError(ToposError, ValueError):
    pass


class GoldenMismatch(ToposError, AssertionError):
    def __init__(self, diffs):
        self.diffs = list(diffs)
        super().__init__("; ".join(self.diffs))


class NotInImage(ToposError, ValueError):
    """Value has no preimage under the requested map."""
