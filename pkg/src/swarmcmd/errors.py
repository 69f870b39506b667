"""Exception types shared across the package."""

from __future__ import annotations


class SwarmCmdError(Exception):
    """Base class for all errors raised by this package."""


class EmptyKeywords(SwarmCmdError):
    """Input text produced no usable keyword tokens."""


class MalformedMessage(SwarmCmdError):
    """A wire payload was not valid canonical JSON for its schema."""


class MissingField(MalformedMessage):
    """A required field was absent from a decoded message."""

    def __init__(self, field: str):
        super().__init__(f"missing field: {field}")
        self.field = field


class BadModality(MalformedMessage):
    """A modality string outside the closed Text/Voice/Teleop set."""

    def __init__(self, value: object):
        super().__init__(f"unknown modality: {value!r}")
        self.value = value


class UndefinedSimilarity(SwarmCmdError):
    """Jaccard similarity requested for two empty token sets."""


class InvalidRatio(SwarmCmdError):
    """A ratio outside [0, 1] was passed where a Jaccard value was expected."""


class UnknownRobot(SwarmCmdError):
    """Target robot id is not in the configured registry."""

    def __init__(self, robot_id: str):
        super().__init__(f"unknown robot: {robot_id!r}")
        self.robot_id = robot_id


class UnknownKey(SwarmCmdError):
    """Teleop key outside the nine-key map."""

    def __init__(self, key: str):
        super().__init__(f"unknown teleop key: {key!r}")
        self.key = key


class UnrecognizedCommand(SwarmCmdError):
    """Free-text command matched no motion keyword."""


class MissingTeleopKey(SwarmCmdError):
    """Teleop dispatch attempted without a key."""


class InvalidSessionState(SwarmCmdError):
    """Operation not legal in the session's current status."""


class NotConnected(SwarmCmdError):
    """Bus operation attempted on a closed or unconnected client."""


class BrokerError(SwarmCmdError):
    """The broker rejected a frame or reported a failure."""


class ExternalProviderUnavailable(SwarmCmdError):
    """The external context endpoint failed; callers fall back to templates."""
