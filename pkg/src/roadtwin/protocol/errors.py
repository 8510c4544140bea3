"""Typed codec errors.

Every failure mode of decode() maps to exactly one of these; arbitrary
byte input must never escape with anything else (the fuzz suite enforces
this). Encode failures raise EncodeError.
"""


class EncodeError(ValueError):
    """A message violates its invariants and cannot be put on the wire."""


class DecodeError(ValueError):
    """Base class for every decode failure."""


class NotOurProtocol(DecodeError):
    """The buffer does not start with the protocol magic."""


class Truncated(DecodeError):
    """The buffer ended before the message was complete.

    offset is where the input ran out; expected is the total length the
    message needs given everything parsed so far.
    """

    def __init__(self, offset: int, expected: int):
        super().__init__(f"truncated at byte {offset}, need {expected} bytes")
        self.offset = offset
        self.expected = expected


class VersionMismatch(DecodeError):
    """Known magic but an unsupported protocol version."""

    def __init__(self, version: int):
        super().__init__(f"unsupported protocol version {version}")
        self.version = version


class Malformed(DecodeError):
    """Structurally complete but inconsistent (bad type, range, or length)."""
