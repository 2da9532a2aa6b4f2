"""Models package initialization."""

from bicomplex.models.report import CheckResult, CheckStatus, Report
from bicomplex.models.theory import FieldDecl, SpecDocument, SpecOptions

__all__ = [
    # Theory models
    "FieldDecl",
    "SpecDocument",
    "SpecOptions",
    # Report models
    "CheckStatus",
    "CheckResult",
    "Report",
]
