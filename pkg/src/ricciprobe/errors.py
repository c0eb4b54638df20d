"""Exception and warning types shared across the package."""


class RicciProbeError(Exception):
    """Base class for all package errors."""


class SpaceMismatch(RicciProbeError):
    """Points or measures from different model spaces were combined."""


class ConjugatePair(RicciProbeError):
    """The minimizing geodesic between the two points is not unique."""


class VertexCurvature(RicciProbeError):
    """Curvature requested at the cone vertex, where it is not defined."""


class ResourceLimit(RicciProbeError):
    """A configured size cap (grid points, solver support) would be exceeded."""


class Infeasible(RicciProbeError):
    """Transport problem with incompatible marginals."""


class NonConvergence(RicciProbeError):
    """Iterative solver exhausted its iteration budget."""


class TruncationError(RicciProbeError):
    """Heat mass lost to grid truncation exceeds the hard budget."""


class InfiniteEntropy(RicciProbeError):
    """Entropy of a genuinely atomic measure was requested."""


class ConfigError(RicciProbeError):
    """Experiment configuration could not be interpreted."""


class TruncationWarning(UserWarning):
    """Estimated series tail exceeds the soft accuracy target."""


class ConjugateWarning(UserWarning):
    """Estimate produced near a conjugate pair; treat with care."""
