"""Exception types shared across the package."""


class ScherklabError(Exception):
    """Base class for all package errors."""


class NonFinite(ScherklabError):
    """A NaN or infinity showed up where a finite real was required."""


class NotPositiveDefinite(ScherklabError):
    """A metric evaluation failed its positivity check."""


class InvalidForModel(ScherklabError):
    """An operation was requested for a model matrix that does not support it."""


class StepCountTooSmall(ScherklabError):
    """An integrator was asked to run with too few steps."""


class InvalidConfig(ScherklabError):
    """A configuration object violates its own constraints."""


class AExceedsBound(ScherklabError):
    """The side length is at or above the admissible threshold."""


class AssumptionViolated(ScherklabError):
    """A standing inequality required by a construction does not hold."""


class InvalidPreset(ScherklabError):
    """A contour preset was given parameters outside its domain."""


class MeshFailure(ScherklabError):
    """Triangulation could not produce a conforming, good-quality mesh."""


class DegenerateTriangle(ScherklabError):
    """A triangle with vanishing metric area element was encountered."""


class NoConvergence(ScherklabError):
    """A solver stopped without meeting its tolerance."""


class PinchDetected(ScherklabError):
    """A free-boundary-value solve collapsed part of the mesh to zero area."""


class WeldFailure(ScherklabError):
    """Reflection welding found no boundary vertices on the claimed axis."""
