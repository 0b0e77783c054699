from typing import Any, Optional

from . import status


class PerfectSamplingError(Exception):
    exit_code = status.EXIT_FAILURE

    def __init__(self, *args: object) -> None:
        super().__init__(*args)


class ValidationError(PerfectSamplingError):
    """Invalid input object.

    :param message: human readable diagnostic
    :param path: dotted field path of the offending value, if known
    """
    exit_code = status.EXIT_VALIDATION

    def __init__(self, message: str, path: Optional[str] = None) -> None:
        self.message = message
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ParseError(ValidationError):
    pass


class ReducibleChain(ValidationError):
    pass


class ZeroMassState(ValidationError):
    pass


class NotStationary(ValidationError):
    pass


class NotMonotone(ValidationError):
    def __init__(self, message: str, witness: Any = None) -> None:
        self.witness = witness
        super().__init__(message)


class TooManyRecords(ValidationError):
    pass


class ZeroMassSeed(ValidationError):
    pass


class ZeroBottomMass(ValidationError):
    pass


class EmptySample(ValidationError):
    pass


class HorizonExceeded(PerfectSamplingError):
    exit_code = status.EXIT_HORIZON


class MaxAttemptsExceeded(PerfectSamplingError):
    exit_code = status.EXIT_HORIZON


class EnumerationTooLarge(PerfectSamplingError):
    exit_code = status.EXIT_ENUMERATION_CAP

    def __init__(self, what: str, count: int, cap: int) -> None:
        self.count = count
        self.cap = cap
        super().__init__(f"{what}: {count} exceeds the cap of {cap}")


class StateSpaceTooLarge(EnumerationTooLarge):
    pass


class PosetTooLarge(EnumerationTooLarge):
    pass


class ImpossibleTransition(PerfectSamplingError):
    pass


class UnreachableConditioning(PerfectSamplingError):
    pass


class UndefinedUpwardRow(PerfectSamplingError):
    pass
