from __future__ import annotations

import shutil
from pathlib import Path

import pytest

from pocsmith.dataset.manifest import load_manifest
from pocsmith.dataset.workspace import prepare_workspace
from pocsmith.sandbox.executor import Sandbox
from pocsmith.sandbox.toolchain import BuiltinEvmToolchain
from pocsmith.sandbox.types import CompileReport, Diagnostic, TestReport, ToolResult
from pocsmith.sandbox.types import TestCaseResult as CaseResult

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"


def _node_available() -> bool:
    return shutil.which("node") is not None and shutil.which("npm") is not None


@pytest.fixture(scope="session")
def builtin_toolchain() -> BuiltinEvmToolchain:
    """The bundled solc+EVM backend; skips the test when node/npm is absent."""
    if not _node_available():
        pytest.skip("node/npm not available; builtin EVM toolchain cannot run")
    toolchain = BuiltinEvmToolchain()
    toolchain.ensure_installed()
    return toolchain


@pytest.fixture(scope="session")
def toy_findings():
    return {record.id: record for record in load_manifest(FIXTURES / "toy_manifest")}


@pytest.fixture()
def toy_workspace(tmp_path, toy_findings, builtin_toolchain):
    """A prepared vulnerable toy workspace plus its sandbox."""
    prepared = prepare_workspace(toy_findings["900"], tmp_path / "ws", builtin_toolchain)
    return prepared.spec, Sandbox(prepared.spec)


def make_tool_result(tool_name: str = "smart_contract_compile", exit_code: int = 0,
                     stdout: str = "", stderr: str = "", duration_ms: int = 1) -> ToolResult:
    return ToolResult.from_execution(tool_name, exit_code, stdout, stderr, duration_ms)


def make_compile_report(success: bool = True, diagnostics: tuple[Diagnostic, ...] = ()) -> CompileReport:
    return CompileReport(
        success=success,
        diagnostics=diagnostics,
        raw=make_tool_result(exit_code=0 if success else 1),
    )


def make_test_report(cases: tuple[CaseResult, ...] = (), compiled: bool = True) -> TestReport:
    exit_code = 0 if compiled and all(c.passed for c in cases) else 1
    return TestReport(
        compiled=compiled,
        tests=cases if compiled else (),
        raw=make_tool_result("smart_contract_test", exit_code),
    )


class StubToolchain:
    """Scriptable toolchain double for loop and baseline unit tests."""

    name = "stub"

    def __init__(self, compile_reports=None, test_reports=None):
        self.compile_reports = list(compile_reports or [])
        self.test_reports = list(test_reports or [])
        self.compile_calls = 0
        self.test_calls = 0

    def compile(self, sandbox) -> CompileReport:
        self.compile_calls += 1
        if self.compile_reports:
            return self.compile_reports.pop(0)
        return make_compile_report(success=True)

    def run_tests(self, sandbox, match_path=None) -> TestReport:
        self.test_calls += 1
        if self.test_reports:
            return self.test_reports.pop(0)
        return make_test_report(
            (CaseResult(name="test_ok()", passed=True, suite="stub"),)
        )
