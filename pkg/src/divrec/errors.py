"""Shared error types and the coded validation report used by all loaders."""

from __future__ import annotations

from dataclasses import dataclass, field


class DivrecError(Exception):
    """Base class for all library errors."""


@dataclass(frozen=True)
class Issue:
    """One coded validation violation, tied to a source line when known."""

    code: str
    message: str
    line: int | None = None
    item_id: str | None = None

    def render(self) -> str:
        where = f"line {self.line}" if self.line is not None else "input"
        who = f" [{self.item_id}]" if self.item_id else ""
        return f"{where}: {self.code}{who}: {self.message}"


@dataclass
class ValidationReport:
    """Accumulates every violation found in one ingestion pass."""

    issues: list[Issue] = field(default_factory=list)

    def add(self, code: str, message: str, line: int | None = None,
            item_id: str | None = None) -> None:
        self.issues.append(Issue(code=code, message=message, line=line, item_id=item_id))

    @property
    def ok(self) -> bool:
        return not self.issues

    def codes(self) -> set[str]:
        return {issue.code for issue in self.issues}

    def render(self) -> str:
        return "\n".join(issue.render() for issue in self.issues)


class ValidationFailure(DivrecError):
    """Raised when ingestion finds any violation; carries the full report."""

    def __init__(self, report: ValidationReport):
        self.report = report
        summary = report.issues[0].render() if report.issues else "invalid input"
        extra = f" (+{len(report.issues) - 1} more)" if len(report.issues) > 1 else ""
        super().__init__(summary + extra)
