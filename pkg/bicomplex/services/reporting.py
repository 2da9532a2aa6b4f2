"""Certification checks and report serialization."""

import json
import logging
import time
from typing import Any, Callable, Iterable, Mapping, Optional

from bicomplex.config import get_settings
from bicomplex.exceptions import BicomplexError, CompatibilityError
from bicomplex.models.report import CheckResult, CheckStatus, Report
from bicomplex.services.localforms import LocalForm, format_form
from bicomplex.utils.metrics import metrics

logger = logging.getLogger(__name__)
settings = get_settings()


def serialize_residual(residual: Any) -> Optional[str]:
    """Canonical text of a residual; None when it vanishes."""
    if residual is None or not residual:
        return None
    if isinstance(residual, LocalForm):
        return format_form(residual)
    return str(residual)


def _first_nonzero(residual: Any) -> tuple[Optional[str], Any]:
    if isinstance(residual, Mapping):
        for label, value in residual.items():
            if value:
                return str(label), value
        return None, None
    return None, residual


class Checker:
    """
    Runs named checks and collects their results.

    A check is a callable returning a residual: a local form, a cone element,
    a mapping of labelled residuals, or a bool where True means failure.
    It passes when the residual is zero. Exceptions raised by a check are
    recorded as failures; the remaining checks still run.
    """

    def __init__(self, command: str, spec: str, seed: Optional[int] = None):
        self.command = command
        self.spec = spec
        self.seed = seed
        self.results: list[CheckResult] = []

    def check(
        self,
        name: str,
        fn: Callable[[], Any],
        message: str = "",
        details: Optional[dict[str, Any]] = None,
    ) -> CheckResult:
        """Run one check and record its result."""
        start = time.perf_counter()
        try:
            label, residual = _first_nonzero(fn())
            if residual:
                text = serialize_residual(residual) if residual is not True else None
                result = CheckResult(
                    name=name,
                    status=CheckStatus.FAIL,
                    message=f"nonzero residual in {label}" if label else message,
                    residual=text,
                )
            else:
                result = CheckResult(name=name, status=CheckStatus.PASS, message=message)
        except CompatibilityError as e:
            result = CheckResult(
                name=name,
                status=CheckStatus.FAIL,
                message=str(e),
                residual=serialize_residual(e.residual),
            )
        except BicomplexError as e:
            result = CheckResult(name=name, status=CheckStatus.FAIL, message=str(e))
        except Exception as e:
            logger.error(f"Check {name} raised: {e}", exc_info=True)
            result = CheckResult(name=name, status=CheckStatus.FAIL, message=f"Check failed: {e}")

        if details:
            result.details.update(details)
        if settings.report_timings:
            result.duration_ms = round((time.perf_counter() - start) * 1000, 2)
        return self.add(result)

    def skip(self, name: str, message: str) -> CheckResult:
        return self.add(CheckResult(name=name, status=CheckStatus.SKIPPED, message=message))

    def add(self, result: CheckResult) -> CheckResult:
        self.results.append(result)
        metrics.record_check(result.name, result.status.value)
        if result.status == CheckStatus.FAIL:
            logger.warning(f"Check failed: {result.name} {result.message}".rstrip())
        else:
            logger.info(f"Check {result.status.value}: {result.name}")
        return result

    def extend(self, results: Iterable[CheckResult]) -> None:
        for result in results:
            self.add(result)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def report(self) -> Report:
        """Aggregate the recorded checks into a report."""
        return Report(
            command=self.command,
            spec=self.spec,
            seed=self.seed,
            status=self._determine_overall_status(self.results),
            checks=list(self.results),
        )

    def _determine_overall_status(self, results: list[CheckResult]) -> CheckStatus:
        if any(r.status == CheckStatus.FAIL for r in results):
            return CheckStatus.FAIL
        if results and all(r.status == CheckStatus.SKIPPED for r in results):
            return CheckStatus.SKIPPED
        return CheckStatus.PASS


def render_text(report: Report) -> str:
    """Line-oriented report; residuals are indented under their check."""
    lines = [
        f"command: {report.command}",
        f"spec: {report.spec}",
    ]
    if report.seed is not None:
        lines.append(f"seed: {report.seed}")
    lines.append(f"status: {report.status.value}")
    for check in report.checks:
        line = f"[{check.status.value}] {check.name}"
        if check.message:
            line += f": {check.message}"
        if check.duration_ms is not None:
            line += f" ({check.duration_ms} ms)"
        lines.append(line)
        if check.residual:
            lines.append(f"    residual: {check.residual}")
        for key in sorted(check.details):
            lines.append(f"    {key}: {check.details[key]}")
    return "\n".join(lines) + "\n"


def render_json(report: Report) -> str:
    return json.dumps(report.model_dump(mode="json", exclude_none=True), indent=2) + "\n"


def render(report: Report, fmt: Optional[str] = None) -> str:
    """Serialize a report in the requested or configured format."""
    fmt = fmt or settings.report_format
    if fmt == "json":
        return render_json(report)
    return render_text(report)
