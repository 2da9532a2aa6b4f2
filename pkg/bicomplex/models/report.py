"""Data models for certification reports."""

from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, Field


class CheckStatus(str, Enum):
    """Outcome of a single certification check."""

    PASS = "pass"
    FAIL = "fail"
    SKIPPED = "skipped"  # precondition for the check does not apply


class CheckResult(BaseModel):
    """Outcome of one identity check."""

    name: str
    status: CheckStatus
    message: str = ""
    residual: Optional[str] = Field(None, description="Serialized residual when nonzero")
    duration_ms: Optional[float] = None
    details: dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        """Skipped checks do not fail a report."""
        return self.status != CheckStatus.FAIL


class Report(BaseModel):
    """All checks emitted by one command."""

    command: str
    spec: str
    seed: Optional[int] = None
    status: CheckStatus = CheckStatus.PASS
    checks: list[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        """A report passes when none of its checks failed."""
        return all(check.passed for check in self.checks)

    def first_failure(self) -> Optional[CheckResult]:
        """First failing check, used for the CLI summary."""
        return next((check for check in self.checks if not check.passed), None)
