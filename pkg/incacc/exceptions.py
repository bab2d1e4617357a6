from typing import Any, Optional


class IncaccError(Exception):
    """Base class for every error raised by the toolkit"""


class ProgramSyntaxError(IncaccError):
    """Raised when program, formula or table text does not parse"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f"line {line}"
            if column is not None:
                location += f", column {column}"
            location += ": "
        super().__init__(f"{location}{message}")

    def at_line(self, line: int) -> "ProgramSyntaxError":
        """Re-anchor an error raised on a single line of a larger file"""
        return ProgramSyntaxError(self.message, line, self.column)


class DomainError(IncaccError):
    """Raised when abstract values are combined inconsistently"""


class ScopeLimitExceeded(DomainError):
    """Raised when an abstract value would exceed the configured scope cap"""


class CertificateRejected(IncaccError):
    """Base class for checker verdicts that reject a certificate"""

    reason = "rejected"

    def __init__(self, call: Any, detail: str):
        self.call = call
        super().__init__(f"{self.reason}: {call}: {detail}")


class InvalidAnswer(CertificateRejected):
    """A recomputed answer is not covered by the certified one"""

    reason = "invalid answer"

    def __init__(self, call: Any, computed: Any, claimed: Any):
        self.computed = computed
        self.claimed = claimed
        super().__init__(call, f"computed {computed} is not below certified {claimed}")


class NotAFixpoint(CertificateRejected):
    """A recomputed answer is safe but differs from the certified one"""

    reason = "not a fixpoint"

    def __init__(self, call: Any, computed: Any, claimed: Any):
        self.computed = computed
        self.claimed = claimed
        super().__init__(call, f"computed {computed} differs from certified {claimed}")


class MissingEntry(CertificateRejected):
    """A reachable call pattern has no certified answer"""

    reason = "missing entry"

    def __init__(self, call: Any):
        super().__init__(call, "no certified answer for this call pattern")


class PatchConflict(IncaccError):
    """Raised when an update deletes a rule the program does not contain"""

    def __init__(self, rule: Any):
        self.rule = rule
        super().__init__(f"cannot delete rule not present in program: {rule}")


class CorruptState(IncaccError):
    """Raised when a state directory is missing files or is inconsistent"""

    def __init__(self, path: Any, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"corrupt state in {path}: {reason}")


class StateLocked(IncaccError):
    """Raised when another process holds the state directory lock"""

    def __init__(self, path: Any):
        self.path = path
        super().__init__(f"state directory is locked: {path}")
