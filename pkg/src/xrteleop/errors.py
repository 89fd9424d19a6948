"""Exception hierarchy shared across the toolkit.

Every error raised by this package derives from :class:`XrTeleopError` so
callers can catch the whole family at a process boundary while tests can
assert on the precise class.
"""


class XrTeleopError(Exception):
    """Base class for all errors raised by xrteleop."""


# --- kinematic chain / description parsing ---------------------------------

class MalformedDocument(XrTeleopError):
    """Chain description markup could not be parsed or is structurally broken."""


class DanglingReference(XrTeleopError):
    """A joint names a link that is not declared in the document."""


class CyclicStructure(XrTeleopError):
    """The parent graph of the chain is not a rooted tree."""


class UnsupportedJointType(XrTeleopError):
    """Joint type outside the supported set {revolute, prismatic, fixed}."""


class UnknownFrame(XrTeleopError):
    """A task or query references a link name the chain does not define."""


class DimensionMismatch(XrTeleopError):
    """A vector's length does not match the chain's degrees of freedom."""


# --- ik / retargeting --------------------------------------------------------

class InfeasibleBounds(XrTeleopError):
    """Velocity box became empty (lower > upper) after the limit-horizon shrink.

    The solver does not raise this; it reports an :class:`InfeasibleBoundsWarning`
    and relaxes the offending variable. The class exists for callers that want
    to re-raise from the relaxed status.
    """


class InfeasibleBoundsWarning(UserWarning):
    """Warning emitted when the solver relaxes an empty velocity box."""


class InactiveFrame(XrTeleopError):
    """Hand retargeting was asked to consume a frame with tracking inactive."""


# --- protocol ---------------------------------------------------------------

class ProtocolError(XrTeleopError):
    """Base class for tracking-packet codec errors."""


class MalformedJson(ProtocolError):
    """Input bytes are not a valid UTF-8 JSON document."""


class SchemaViolation(ProtocolError):
    """JSON parsed but required keys, types, or arities are wrong."""


class RangeViolation(ProtocolError):
    """A numeric field is outside its documented range."""


class ArityError(SchemaViolation):
    """A fixed-size array (e.g. the 7-float pose) has the wrong length."""


class NonFiniteValue(RangeViolation):
    """A numeric field is NaN or infinite."""


class DegenerateQuaternion(RangeViolation):
    """Quaternion norm below 1e-6; orientation is unrecoverable."""


class InvariantViolation(ProtocolError):
    """A packet value violates a construction invariant (encode-side)."""


class UnknownConvention(ProtocolError):
    """Frame-convention name is not registered."""


class StaleSequence(ProtocolError):
    """Packet sequence did not increase; surfaced to the stream layer."""


# --- streaming / teleop / sim -------------------------------------------------

class BindFailure(XrTeleopError):
    """Publisher could not bind its address."""


class ConnectFailure(XrTeleopError):
    """Subscriber exhausted its reconnect budget."""


class SerializationFailure(XrTeleopError):
    """A packet could not be encoded for the wire."""


class EmptyWindow(XrTeleopError):
    """Latency measurement requested over a window with no samples."""


class EmptyStream(XrTeleopError):
    """Episode recording requested over an empty input stream."""


class DimensionDrift(XrTeleopError):
    """State vector length changed mid-episode."""


class UnreliableTracking(XrTeleopError):
    """Head tracking status is 0; the head-derived command must be held."""
