"""Exception hierarchy shared by the library and the command line."""


class RegobsError(Exception):
    """Base class for all library errors."""


class GeometryError(RegobsError, ValueError):
    """A domain, region, support or point is invalid or out of bounds."""


class BasisError(RegobsError, ValueError):
    """Bases or states that do not fit together."""


class SensorError(RegobsError, ValueError):
    """Invalid sensor definition or sensor suite."""


class ObservabilityError(RegobsError):
    """Precondition of an observability computation is not met."""


class SingularGramianError(ObservabilityError):
    """The Gramian is not positive definite at the requested threshold."""


class UnderdeterminedError(ObservabilityError):
    """The reconstruction system has no unique solution."""


class PredicateError(RegobsError, ValueError):
    """Hypotheses of a placement predicate are not met."""


class ConfigError(RegobsError, ValueError):
    """Configuration document failed validation."""
