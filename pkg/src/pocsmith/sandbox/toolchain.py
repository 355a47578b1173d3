"""Solidity toolchain backends behind the smart-contract tools.

sc_compile / sc_test always go through a Toolchain. The primary backend
shells out to the pinned Foundry `forge` binary and parses its output.
Where forge cannot be installed, the builtin backend provides the same
contract over a bundled Node runner: real solc compilation plus an
in-process EVM. The builtin backend emits structured JSON directly, so
it does not impersonate forge's output format.
"""

from __future__ import annotations

import json
import logging
import shutil
import subprocess
from pathlib import Path
from typing import Protocol

from pocsmith.sandbox.executor import Sandbox, ToolchainMissingError
from pocsmith.sandbox.parsers import parse_compile_output, parse_test_output
from pocsmith.sandbox.types import CompileReport, Diagnostic, TestCaseResult, TestReport

logger = logging.getLogger(__name__)

RUNNER_DIR = Path(__file__).resolve().parent.parent / "_evmrunner"
FOUNDRY_PIN = "1.3.1"


class Toolchain(Protocol):
    name: str

    def compile(self, sandbox: Sandbox) -> CompileReport: ...

    def run_tests(self, sandbox: Sandbox, match_path: str | None = None) -> TestReport: ...


def _require_project(sandbox: Sandbox) -> None:
    if not (sandbox.spec.workspace_root / "foundry.toml").is_file():
        raise ToolchainMissingError(
            f"workspace {sandbox.spec.workspace_root} has no foundry.toml; not a Foundry project"
        )


class ForgeToolchain:
    """Runs the real Foundry binary: `forge build` / `forge test --match-path`."""

    name = "forge"

    def __init__(self, forge_bin: str = "forge") -> None:
        self.forge_bin = forge_bin

    def compile(self, sandbox: Sandbox) -> CompileReport:
        _require_project(sandbox)
        raw = sandbox.execute([self.forge_bin, "build"], tool_name="smart_contract_compile")
        return parse_compile_output(raw)

    def run_tests(self, sandbox: Sandbox, match_path: str | None = None) -> TestReport:
        _require_project(sandbox)
        argv = [self.forge_bin, "test"]
        if match_path:
            argv += ["--match-path", match_path]
        raw = sandbox.execute(argv, tool_name="smart_contract_test")
        return parse_test_output(raw)


class BuiltinEvmToolchain:
    """Bundled solc + EVM runner; used when forge is unavailable."""

    name = "builtin-evm"

    def __init__(self, node_bin: str = "node", runner_dir: Path | None = None) -> None:
        self.node_bin = node_bin
        self.runner_dir = runner_dir or RUNNER_DIR

    @property
    def runner_script(self) -> Path:
        return self.runner_dir / "runner.mjs"

    def ensure_installed(self) -> None:
        """Install the runner's npm dependencies once (idempotent)."""
        if (self.runner_dir / "node_modules" / "solc").exists():
            return
        npm = shutil.which("npm")
        if npm is None:
            raise ToolchainMissingError("npm not found; cannot install the builtin EVM runner")
        logger.info("installing builtin EVM runner dependencies in %s", self.runner_dir)
        proc = subprocess.run(
            [npm, "install", "--no-audit", "--no-fund"],
            cwd=self.runner_dir,
            capture_output=True,
            text=True,
            timeout=600,
        )
        if proc.returncode != 0:
            raise ToolchainMissingError(
                f"npm install for the builtin EVM runner failed:\n{proc.stderr[-2000:]}"
            )

    def _invoke(self, sandbox: Sandbox, action: str, extra: list[str]) -> tuple:
        self.ensure_installed()
        argv = [
            self.node_bin,
            str(self.runner_script),
            action,
            str(sandbox.spec.workspace_root),
            *extra,
        ]
        raw = sandbox.execute(
            argv,
            tool_name="smart_contract_compile" if action == "build" else "smart_contract_test",
        )
        payload = None
        stripped = raw.stdout.strip()
        if stripped.startswith("{"):
            try:
                payload = json.loads(stripped)
            except json.JSONDecodeError:
                payload = None
        return raw, payload

    def compile(self, sandbox: Sandbox) -> CompileReport:
        raw, payload = self._invoke(sandbox, "build", [])
        if payload is None or raw.exit_code in (2, 3):
            if raw.exit_code == 3:
                raise ToolchainMissingError(payload.get("error") if payload else raw.stdout)
            return CompileReport(success=False, diagnostics=(), raw=raw, parse_degraded=True)
        diagnostics = tuple(_diag_from_json(d) for d in payload.get("diagnostics", ()))
        return CompileReport(success=bool(payload.get("success")), diagnostics=diagnostics, raw=raw)

    def run_tests(self, sandbox: Sandbox, match_path: str | None = None) -> TestReport:
        extra = ["--match-path", match_path] if match_path else []
        raw, payload = self._invoke(sandbox, "test", extra)
        if payload is None or raw.exit_code in (2, 3):
            if raw.exit_code == 3:
                raise ToolchainMissingError(payload.get("error") if payload else raw.stdout)
            return TestReport(compiled=False, tests=(), raw=raw, parse_degraded=True)
        diagnostics = tuple(_diag_from_json(d) for d in payload.get("diagnostics", ()))
        if not payload.get("compiled"):
            return TestReport(compiled=False, tests=(), raw=raw, diagnostics=diagnostics)
        tests = tuple(
            TestCaseResult(
                name=t["name"],
                passed=bool(t["passed"]),
                failure_reason=t.get("reason"),
                gas=t.get("gas"),
                suite=t.get("suite"),
            )
            for t in payload.get("tests", ())
        )
        return TestReport(compiled=True, tests=tests, raw=raw, diagnostics=diagnostics)


def _diag_from_json(data: dict) -> Diagnostic:
    return Diagnostic(
        code=str(data.get("code", "")),
        message=data.get("message", ""),
        file=data.get("file"),
        line=data.get("line"),
        severity=data.get("severity", "error"),
    )


def detect_toolchain(preference: str = "auto") -> Toolchain:
    """Pick the toolchain backend: forge when installed, builtin otherwise."""
    if preference == "forge":
        if shutil.which("forge") is None:
            raise ToolchainMissingError("forge not found on PATH")
        return ForgeToolchain()
    if preference == "builtin-evm":
        return BuiltinEvmToolchain()
    if preference == "auto":
        if shutil.which("forge") is not None:
            return ForgeToolchain()
        logger.info("forge not found; using the builtin solc+EVM backend")
        return BuiltinEvmToolchain()
    raise ValueError(f"unknown toolchain preference {preference!r}")
