"""Result schemas for sandboxed tool invocations."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

# Commands whose purpose is submitting transactions; never allowlistable.
TRANSACTION_CAPABLE_COMMANDS = frozenset({"cast"})

DEFAULT_ALLOWED_COMMANDS = frozenset({"forge", "node"})
DEFAULT_IMAGE = "foundry-sandbox:1.3.1"

# Harness-owned tool locations the guardrail may reference by absolute
# path (the bundled EVM runner); never writable through fs tools.
_PACKAGE_DIR = Path(__file__).resolve().parent.parent
DEFAULT_TOOL_ROOTS: tuple[Path, ...] = (_PACKAGE_DIR / "_evmrunner",)


@dataclass(frozen=True)
class SandboxSpec:
    """Execution environment for one run: workspace, allowlist, pinned image."""

    workspace_root: Path
    allowed_commands: frozenset[str] = DEFAULT_ALLOWED_COMMANDS
    image_reference: str = DEFAULT_IMAGE
    network_enabled: bool = False
    tool_roots: tuple[Path, ...] = DEFAULT_TOOL_ROOTS

    def __post_init__(self) -> None:
        if self.network_enabled:
            raise ValueError("sandbox network access is never enabled")
        banned = self.allowed_commands & TRANSACTION_CAPABLE_COMMANDS
        if banned:
            raise ValueError(f"allowlist contains transaction-capable commands: {sorted(banned)}")
        object.__setattr__(self, "workspace_root", Path(self.workspace_root))


@dataclass(frozen=True)
class ToolResult:
    """Standardized outcome of any sandboxed command."""

    tool_name: str
    status: str
    exit_code: int
    stdout: str
    stderr: str
    duration_ms: int

    def __post_init__(self) -> None:
        expected = "ok" if self.exit_code == 0 else "failed"
        if self.status != expected:
            raise ValueError(f"status {self.status!r} inconsistent with exit code {self.exit_code}")
        if self.duration_ms < 0:
            raise ValueError("duration_ms must be nonnegative")

    @staticmethod
    def from_execution(tool_name: str, exit_code: int, stdout: str, stderr: str, duration_ms: int) -> "ToolResult":
        return ToolResult(
            tool_name=tool_name,
            status="ok" if exit_code == 0 else "failed",
            exit_code=exit_code,
            stdout=stdout,
            stderr=stderr,
            duration_ms=duration_ms,
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "tool_name": self.tool_name,
            "status": self.status,
            "exit_code": self.exit_code,
            "stdout": self.stdout,
            "stderr": self.stderr,
            "duration_ms": self.duration_ms,
        }

    @staticmethod
    def from_json(data: dict[str, Any]) -> "ToolResult":
        return ToolResult(**data)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    file: str | None = None
    line: int | None = None
    severity: str = "error"

    def to_json(self) -> dict[str, Any]:
        return {
            "code": self.code,
            "message": self.message,
            "file": self.file,
            "line": self.line,
            "severity": self.severity,
        }


@dataclass(frozen=True)
class CompileReport:
    success: bool
    diagnostics: tuple[Diagnostic, ...]
    raw: ToolResult
    parse_degraded: bool = False

    def __post_init__(self) -> None:
        if self.success and any(d.severity == "error" for d in self.diagnostics):
            raise ValueError("successful compile cannot carry error diagnostics")

    @property
    def errors(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == "error")

    def to_json(self) -> dict[str, Any]:
        return {
            "success": self.success,
            "diagnostics": [d.to_json() for d in self.diagnostics],
            "parse_degraded": self.parse_degraded,
            "raw": self.raw.to_json(),
        }


@dataclass(frozen=True)
class TestCaseResult:
    name: str
    passed: bool
    failure_reason: str | None = None
    gas: int | None = None
    suite: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "failure_reason": self.failure_reason,
            "gas": self.gas,
            "suite": self.suite,
        }


@dataclass(frozen=True)
class TestReport:
    compiled: bool
    tests: tuple[TestCaseResult, ...]
    raw: ToolResult
    parse_degraded: bool = False
    diagnostics: tuple[Diagnostic, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.compiled and self.tests:
            raise ValueError("uncompiled run cannot carry test results")

    @property
    def passed_count(self) -> int:
        return sum(1 for t in self.tests if t.passed)

    @property
    def failed_count(self) -> int:
        return sum(1 for t in self.tests if not t.passed)

    @property
    def all_passed(self) -> bool:
        return self.compiled and self.failed_count == 0

    def to_json(self) -> dict[str, Any]:
        return {
            "compiled": self.compiled,
            "tests": [t.to_json() for t in self.tests],
            "passed_count": self.passed_count,
            "failed_count": self.failed_count,
            "parse_degraded": self.parse_degraded,
            "raw": self.raw.to_json(),
        }
