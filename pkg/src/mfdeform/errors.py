"""Exception types raised by the deformation engine.

Every error carries a stable ``code`` (its class name) so the CLI and the
session service can report structured diagnostics.
"""


class MfdError(Exception):
    """Base class for all engine errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# domain construction
class DegenerateInput(MfdError):
    """Fewer than two sample points."""


class DuplicatePoints(MfdError):
    """Two samples coincide within the duplicate tolerance."""


class EmptyDomain(MfdError):
    """Operation requires a non-empty domain."""


# distances / partition
class EmptySources(MfdError):
    """Shortest-path query with no source samples."""


class UncoveredComponent(MfdError):
    """A connected component of the domain has no finite distance to any handle."""


# basis functions
class DegreeTooLow(MfdError):
    """Bezier basis degree below the C2 minimum of five."""


class NonMonotoneControls(MfdError):
    """Control ordinates out of [0, 1] or not non-increasing."""


# weights
class UncoveredSample(MfdError):
    """A sample lies outside every handle's support (zero blending denominator)."""


class UnresolvedSupportViolation(MfdError):
    """A handle's cell radius exceeds its separation; insert virtual handles first."""


# virtual handles
class InsertionBudgetExceeded(MfdError):
    """Virtual handle insertion looped past its insertion budget."""


class IsolatedVirtualHandle(MfdError):
    """A virtual handle is unreachable from every real handle on the handle graph."""


class NonConvergence(MfdError):
    """Iterative harmonic solve hit the iteration cap before the tolerance."""


class NonRigidRealTransform(MfdError):
    """Transform propagation needs rigid real transforms (quaternion blending)."""


class DegenerateBlend(MfdError):
    """Blended quaternion collapsed to (near) zero norm."""


# transforms / deformation
class NonRigid(MfdError):
    """Matrix has no rigid decomposition within tolerance."""


class MissingTransform(MfdError):
    """A handle in the weight field has no transform assigned."""


# service
class StaleWeights(MfdError):
    """The handle set changed since the cached weights were computed."""


class UnknownSession(MfdError):
    """No session with the requested id."""


class ProtocolError(MfdError):
    """Malformed service request."""
