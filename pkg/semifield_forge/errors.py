from __future__ import annotations

__all__ = (
    "SemifieldError",
    "InvalidParams",
    "NotPrime",
    "ReducibleModulus",
    "PreconditionFailed",
    "ZeroInput",
    "NotInSubfield",
    "SizeBoundExceeded",
    "Singular",
    "NotPresemifield",
    "NotPlanar",
    "NotCommutative",
    "VerificationFailed",
    "NoSolution",
    "NoSuchElement",
    "NoSquareRoot",
)


class SemifieldError(Exception):
    pass


class InvalidParams(SemifieldError):
    pass


class NotPrime(InvalidParams):
    pass


class ReducibleModulus(InvalidParams):
    pass


class PreconditionFailed(InvalidParams):
    pass


class ZeroInput(InvalidParams):
    pass


class NotInSubfield(InvalidParams):
    pass


class SizeBoundExceeded(SemifieldError):
    pass


class Singular(SemifieldError):
    pass


class NotPresemifield(SemifieldError):
    pass


class NotPlanar(SemifieldError):
    pass


class NotCommutative(SemifieldError):
    pass


class VerificationFailed(SemifieldError):
    """A constructed object failed a check that the underlying theory guarantees."""


class NoSolution(VerificationFailed):
    pass


class NoSuchElement(VerificationFailed):
    pass


class NoSquareRoot(VerificationFailed):
    pass
