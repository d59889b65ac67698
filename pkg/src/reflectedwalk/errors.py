"""Exception types shared across the package."""


class ReflectedWalkError(Exception):
    """Base class for all package errors."""


class SpecParseError(ReflectedWalkError):
    """A distribution/barrier/penalty spec string could not be parsed."""


class NoPositiveDrift(ReflectedWalkError):
    """The increment mean is >= 0, so no positive root of the mgf equation exists."""


class NoRoot(ReflectedWalkError):
    """All support points are <= 0; the mgf is strictly decreasing on theta > 0."""


class InfiniteMgf(ReflectedWalkError):
    """The mgf is infinite (overflows) at the requested tilt parameter."""


class CapExceeded(ReflectedWalkError):
    """A first-passage simulation did not cross the level within the step cap."""


class NonLattice(ReflectedWalkError):
    """A lattice-only operation received a non-lattice increment model."""


class NonPositiveDrift(ReflectedWalkError):
    """An operation requiring positive drift received a model with mean <= 0."""


class PositiveAuxDrift(ReflectedWalkError):
    """The auxiliary walk for a linear barrier has nonnegative drift; its maximum is infinite."""


class LatticeMismatch(ReflectedWalkError):
    """A barrier value does not lie on the increment lattice."""


class InfiniteByCriterion(ReflectedWalkError):
    """The finiteness criterion classifies the reflected maximum as infinite."""


class DivergedSum(ReflectedWalkError):
    """A partial sum exceeded its theoretical upper bound; indicates an internal bug."""


class NonNegativeMeanScore(ReflectedWalkError):
    """The induced pair-score mean is >= 0; the significance pipeline refuses to run."""
