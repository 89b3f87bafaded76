"""Exception types shared across the package."""

from __future__ import annotations


class AttnAllocError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(AttnAllocError, ValueError):
    """Parameters break one or more model invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ExpViolated(AttnAllocError):
    """Full attention does not beat acting at the kink, so nobody learns."""


class UndefinedBranch(AttnAllocError):
    pass


class BracketingFailure(AttnAllocError):
    """A root that theory guarantees was not bracketed. Indicates a bug."""


class KinkPoint(AttnAllocError):
    """Diagnostics requested at a belief where the value function has a kink."""


class Unreachable(AttnAllocError):
    pass


class DegenerateSignal(AttnAllocError):
    pass


class InvalidSpec(AttnAllocError, ValueError):
    pass


class EmptyHalf(AttnAllocError):
    pass


class OrderingViolation(AttnAllocError, ValueError):
    pass


class AssumptionViolated(AttnAllocError, ValueError):
    """A candidate attention frontier fails the regularity assumptions."""

    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))


class SaddleDegenerate(AttnAllocError):
    pass


class ParseError(AttnAllocError, ValueError):
    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key={key!r}")
        if line is not None:
            where.append(f"line={line}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
