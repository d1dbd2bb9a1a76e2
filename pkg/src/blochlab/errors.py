"""Exception hierarchy shared by all blochlab modules."""


class BlochLabError(Exception):
    """Base class for every error raised by blochlab."""


class ConfigError(BlochLabError, ValueError):
    """Invalid user input: bad shapes, bad parameters, bad config files."""


class CertificationError(BlochLabError, RuntimeError):
    """A numerical result could not be certified to the requested tolerance."""


# lattice
class DegeneratePotential(ConfigError):
    pass


class ShapeMismatch(ConfigError):
    pass


# laurent
class DimensionMismatch(BlochLabError, ValueError):
    pass


class ZeroVariable(BlochLabError, ValueError):
    pass


# floquet
class NonzeroDiagonalResidual(BlochLabError, AssertionError):
    pass


class EigensolverFailure(CertificationError):
    pass


class DiscOverlap(BlochLabError, ValueError):
    """Gershgorin discs intersect, so bands cannot be labeled by potential."""


class AmbiguousAssignment(CertificationError):
    pass


class SingularQ(CertificationError):
    pass


# perturb
class CombinatorialBlowup(BlochLabError, ValueError):
    pass


class InvariantViolation(BlochLabError, AssertionError):
    def __init__(self, message, n=None, r=None, j=None):
        super().__init__(message)
        self.n = n
        self.r = r
        self.j = j


# velocity
class DegenerateBandCrossing(BlochLabError, RuntimeWarning):
    pass


class NoConvergence(CertificationError):
    pass


class InsufficientPoints(ConfigError):
    pass


class PoorFit(RuntimeWarning):
    pass


# evolve
class QuadratureNotConverged(CertificationError):
    pass


class BoxTooSmall(CertificationError):
    pass


class FrontNotLinear(RuntimeWarning):
    pass


class InadmissibleCoupling(BlochLabError, ValueError):
    pass
