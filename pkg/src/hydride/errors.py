"""Exception types shared across the engine.

All engine failures are typed so the CLI can map them onto exit codes:
configuration problems, invariant violations detected at runtime, and
solver breakdowns are distinct failure channels.
"""


class HydrideError(Exception):
    """Base class for all package errors."""


class DomainError(HydrideError):
    """An argument lies outside the mathematical domain of an operation."""


class AdmissibilityError(HydrideError):
    """The plateau curve fails the parabolicity margin (c_s <= 0).

    A model built with such a curve loses the monotone structure the
    temperature solve relies on; the run must refuse to start.
    """


class GraphError(HydrideError):
    """A user-supplied prox callback of a custom monotone graph failed."""


class GraphInconsistency(HydrideError):
    """A recovered constraint reaction violates graph membership."""


class NoConvergence(HydrideError):
    """An iterative solve exhausted its budget without meeting tolerance."""


class MaxIterations(NoConvergence):
    """The conjugate-gradient loop hit its iteration cap."""


class PositivityViolation(HydrideError):
    """Pressure or normalized density lost strict positivity (fatal)."""


class FieldError(HydrideError):
    """A field carries NaN/Inf values or lives on the wrong grid."""


class ParseError(HydrideError):
    """A configuration file is malformed or carries unknown keys."""


class MMSDomainError(HydrideError):
    """A manufactured phase profile touches the constraint interval."""
