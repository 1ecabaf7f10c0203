"""Exception hierarchy shared by every tscast module."""


class TsError(Exception):
    """Base class for all tscast errors."""


# --- packet layer ---------------------------------------------------------

class WrongLength(TsError, ValueError):
    """Input block does not have the fixed size the operation requires."""


class SyncByteMismatch(TsError, ValueError):
    pass


class ReservedAdaptationControl(TsError, ValueError):
    pass


class PayloadOverflow(TsError, ValueError):
    """Adaptation field plus payload does not fill exactly 184 bytes."""


class NoSyncFound(TsError, ValueError):
    pass


# --- PSI ------------------------------------------------------------------

class CrcMismatch(TsError, ValueError):
    pass


class ContinuityGap(TsError):
    pass


class MalformedSection(TsError, ValueError):
    pass


class SectionOverflow(TsError, ValueError):
    pass


# --- remux ----------------------------------------------------------------

class NoPatFound(TsError, LookupError):
    pass


class UnknownProgram(TsError, LookupError):
    pass


# --- pacing ---------------------------------------------------------------

class ZeroDuration(TsError, ValueError):
    pass


class InsufficientPcrs(TsError, ValueError):
    pass


class NonMonotonePcr(TsError, ValueError):
    pass


class ZeroRate(TsError, ValueError):
    pass


# --- network --------------------------------------------------------------

class NotMulticastAddress(TsError, ValueError):
    pass


class PortOutOfRange(TsError, ValueError):
    pass


class SocketError(TsError, OSError):
    """A socket call failed; the OS error is chained as ``__cause__``."""


class JoinFailed(SocketError):
    pass


class ScheduleExhausted(TsError):
    pass


class ReservedPortWarning(UserWarning):
    """Port below 1024 is reserved for IP services."""


# --- FEC ------------------------------------------------------------------

class DecodeFailure(TsError):
    """Reed-Solomon codeword has more errors than the decoder can fix."""


class BadSync(TsError, ValueError):
    pass


__all__ = [
    "TsError",
    "WrongLength",
    "SyncByteMismatch",
    "ReservedAdaptationControl",
    "PayloadOverflow",
    "NoSyncFound",
    "CrcMismatch",
    "ContinuityGap",
    "MalformedSection",
    "SectionOverflow",
    "NoPatFound",
    "UnknownProgram",
    "ZeroDuration",
    "InsufficientPcrs",
    "NonMonotonePcr",
    "ZeroRate",
    "NotMulticastAddress",
    "PortOutOfRange",
    "SocketError",
    "JoinFailed",
    "ScheduleExhausted",
    "ReservedPortWarning",
    "DecodeFailure",
    "BadSync",
]
