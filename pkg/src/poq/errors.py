"""Exception hierarchy shared by every module of the package."""


class PoqError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(PoqError):
    """Parameters that can never work (bad modulus, qubit guard, ...)."""


class InputError(PoqError, ValueError):
    """Arguments with the wrong shape, length or range."""


class FormatError(PoqError):
    """A serialized object could not be parsed."""


class ParseError(FormatError):
    """A hash polynomial string could not be parsed."""


class IntegrityError(PoqError):
    """A serialized object is internally inconsistent (e.g. y != As + e)."""


class DomainTooLarge(PoqError):
    """Exhaustive enumeration was requested over a domain above the desk-scale guard."""


class GenerationError(PoqError):
    """Rejection sampling ran out of attempts."""


class NotInImage(PoqError):
    """The queried image has no preimage under the claw-free function."""


class MalformedInstance(PoqError):
    """An instance whose branches are not injective, so claws are not unique."""


class BudgetExhausted(PoqError):
    """A counting oracle was asked for more distinct inputs than its budget allows."""


class PreconditionViolation(PoqError):
    """A simulator routine was called on a state that breaks its precondition."""


class UnsupportedGate(PoqError):
    """Gate synthesis was asked for something outside the supported gate set."""


class ReportError(PoqError):
    """Sessions could not be aggregated into a report."""


class ClientError(PoqError):
    """The prover client could not complete a session."""


class ProtocolViolation(ClientError):
    """The peer broke the one-round challenge/response message order."""
