"""Exception types raised by the solvers.

Non-admissibility, folds and blow-up that are *outcomes* of a computation are
returned as data; the classes below are reserved for conditions under which an
operation cannot deliver its contract.
"""


class MILatticeError(Exception):
    """Base class for all package errors."""


class TailOverflow(MILatticeError):
    """Discarded Fourier tail is larger than the configured fraction of the norm."""


class SingularSymbol(MILatticeError):
    """A diagonal symbol entry vanishes on the working mode range (resonance)."""


class NotAdmissible(MILatticeError):
    """The forcing violates the smallness condition of the contraction argument."""


class NonContraction(MILatticeError):
    """Fixed-point iteration failed to contract."""


class NotSimpleResonance(MILatticeError):
    pass


class DegenerateLinearPart(MILatticeError):
    pass


class ComplexBranch(MILatticeError):
    pass


class NoConvergence(MILatticeError):
    pass


class SingularJacobian(MILatticeError):
    """Newton matrix is numerically singular; usually a fold of the branch."""


class StepUnderflow(MILatticeError):
    pass


class MassSingular(MILatticeError):
    """The state dependent mass operator of the lattice cannot be inverted."""


class EigenFailure(MILatticeError):
    pass


class ConfigError(MILatticeError):
    """Invalid run configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
