"""Sandboxed action space: fs tools, planning tool, smart-contract tools, guardrails."""

from pocsmith.sandbox.executor import (
    CommandExecutor,
    DockerExecutor,
    GuardrailDenied,
    GuardrailVerdict,
    LocalExecutor,
    Sandbox,
    guardrail_check,
)
from pocsmith.sandbox.paths import PathEscapeError, resolve_in_workspace
from pocsmith.sandbox.types import (
    CompileReport,
    Diagnostic,
    SandboxSpec,
    TestCaseResult,
    TestReport,
    ToolResult,
)

__all__ = [
    "CommandExecutor",
    "CompileReport",
    "Diagnostic",
    "DockerExecutor",
    "GuardrailDenied",
    "GuardrailVerdict",
    "LocalExecutor",
    "PathEscapeError",
    "Sandbox",
    "SandboxSpec",
    "TestCaseResult",
    "TestReport",
    "ToolResult",
    "guardrail_check",
    "resolve_in_workspace",
]
