"""Exception hierarchy shared by every layer of the simulator."""

from __future__ import annotations


class WsnAuthError(Exception):
    """Root of all package errors."""


# -- encoding errors --

class CodecError(WsnAuthError, ValueError):
    pass


class FieldTooLong(CodecError):
    pass


class LengthMismatch(CodecError):
    pass


class IdTooLong(CodecError):
    pass


class IdNotCanonical(CodecError):
    pass


# -- protocol rejections --

class ProtocolError(WsnAuthError):
    """A protocol step refused its input.

    ``step`` is the phase label (``"U-2"``, ``"A-3"`` ...) and ``actor`` is
    the simulated node that raised it, when known.
    """

    def __init__(self, message: str = "", step: str | None = None, actor: str | None = None):
        super().__init__(message)
        self.step = step
        self.actor = actor

    @property
    def label(self) -> str:
        where = f" at {self.step}" if self.step else ""
        return f"{type(self).__name__}{where}"

    def __str__(self) -> str:
        detail = super().__str__()
        who = f" ({self.actor})" if self.actor else ""
        return f"{self.label}{who}: {detail}" if detail else f"{self.label}{who}"


class StaleTimestamp(ProtocolError):
    pass


class BadVerifier(ProtocolError):
    pass


class UnknownPreId(ProtocolError):
    pass


class UnknownSensor(ProtocolError):
    pass


class CardRejected(ProtocolError):
    pass


class LoginRejected(ProtocolError):
    pass


class TeMismatch(ProtocolError):
    pass


class ExpiredCredential(ProtocolError):
    pass


class GwnRejected(ProtocolError):
    pass


class SensorRejected(ProtocolError):
    pass


class Timeout(ProtocolError):
    """An expected message never arrived within the freshness window."""


# -- input handling --

class InputError(WsnAuthError):
    """Malformed or missing file / argument input."""


class MissingInput(InputError):
    pass
