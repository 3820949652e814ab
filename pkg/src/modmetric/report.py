from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from . import xreal

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


class PreconditionError(ValueError):
    """An input violated a sampled precondition. ``witness`` names the offending data."""

    def __init__(self, message: str, witness: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.witness = witness or {}


class NonMonotoneError(PreconditionError):
    """A predicate or family expected to be monotone in the scale was not."""


@dataclass
class DiagnosticReport:
    """Verdict of a finite-resolution check.

    ``status`` is one of ``"pass"``, ``"fail"`` (with a witness) or
    ``"inconclusive"``. ``evidence`` holds the numbers the verdict was based on.
    The report is truthy exactly when it passed.
    """

    name: str
    status: str
    message: str = ""
    witness: Optional[Dict[str, Any]] = None
    evidence: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in (PASS, FAIL, INCONCLUSIVE):
            raise ValueError(f"unknown status {self.status!r}")
        if self.status == FAIL and not self.witness:
            raise ValueError("a failing report needs a witness")

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @property
    def failed(self) -> bool:
        return self.status == FAIL

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> Dict[str, Any]:
        return xreal.encode(
            {
                "name": self.name,
                "status": self.status,
                "message": self.message,
                "witness": self.witness,
                "evidence": self.evidence,
            }
        )


def passed(name: str, message: str = "", **evidence) -> DiagnosticReport:
    return DiagnosticReport(name, PASS, message, None, evidence)


def failed(name: str, witness: Dict[str, Any], message: str = "", **evidence) -> DiagnosticReport:
    return DiagnosticReport(name, FAIL, message, witness, evidence)


def inconclusive(name: str, message: str = "", **evidence) -> DiagnosticReport:
    return DiagnosticReport(name, INCONCLUSIVE, message, None, evidence)
