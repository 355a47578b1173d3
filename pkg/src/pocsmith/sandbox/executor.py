"""Command execution behind the allowlist guardrail.

The local executor runs commands as plain subprocesses (argv form, never a
shell); the docker executor wraps the same argv in an isolated container
with networking disabled. Every invocation, harness- or model-initiated,
passes through guardrail_check first.
"""

from __future__ import annotations

import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

from pocsmith.clock import Clock, SystemClock
from pocsmith.sandbox.paths import is_contained
from pocsmith.sandbox.types import SandboxSpec, ToolResult

DEFAULT_TIMEOUT_SECONDS = 300.0
TIMEOUT_EXIT_CODE = 124

# Flags that would let forge reach a live chain; denied regardless of command.
NETWORK_FLAGS = frozenset({"--broadcast", "--rpc-url", "--fork-url", "--rpc-urls"})


@dataclass(frozen=True)
class GuardrailVerdict:
    allowed: bool
    reason: str = ""


class GuardrailDenied(PermissionError):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


def guardrail_check(argv: Sequence[str], spec: SandboxSpec) -> GuardrailVerdict:
    """Allow or deny a command against the sandbox policy.

    Denials: command not allowlisted, any flag enabling transaction
    broadcast or live RPC, or a path argument reaching outside the
    workspace (host content access).
    """
    if not argv:
        return GuardrailVerdict(False, "empty command")
    command = Path(argv[0]).name
    if command not in spec.allowed_commands:
        return GuardrailVerdict(False, f"command {command!r} not in allowlist")
    for token in argv[1:]:
        if token in NETWORK_FLAGS or token.split("=", 1)[0] in NETWORK_FLAGS:
            return GuardrailVerdict(False, f"flag {token!r} enables transaction broadcast or live RPC")
    for token in argv[1:]:
        if token.startswith("-"):
            continue
        looks_like_path = token.startswith("/") or token.startswith("~") or ".." in Path(token).parts
        if not looks_like_path:
            continue
        candidate = Path(token).expanduser()
        in_tool_root = any(is_contained(root, candidate) for root in spec.tool_roots)
        if not in_tool_root and not is_contained(spec.workspace_root, candidate):
            return GuardrailVerdict(False, f"path argument {token!r} reaches host content outside the workspace")
    return GuardrailVerdict(True)


class CommandExecutor(Protocol):
    def run(
        self, argv: Sequence[str], *, cwd: Path, timeout_seconds: float
    ) -> tuple[int, str, str]: ...


class LocalExecutor:
    """Runs commands as local subprocesses. Used when no container runtime exists."""

    def run(self, argv: Sequence[str], *, cwd: Path, timeout_seconds: float) -> tuple[int, str, str]:
        try:
            proc = subprocess.run(
                list(argv),
                cwd=str(cwd),
                capture_output=True,
                text=True,
                timeout=timeout_seconds,
            )
        except subprocess.TimeoutExpired as exc:
            stdout = exc.stdout.decode() if isinstance(exc.stdout, bytes) else (exc.stdout or "")
            stderr = exc.stderr.decode() if isinstance(exc.stderr, bytes) else (exc.stderr or "")
            return TIMEOUT_EXIT_CODE, stdout, stderr + f"\ntimed out after {timeout_seconds:.0f}s"
        except FileNotFoundError as exc:
            raise ToolchainMissingError(f"executable not found: {argv[0]}") from exc
        return proc.returncode, proc.stdout, proc.stderr


class DockerExecutor:
    """Runs commands inside a pinned container image with networking disabled."""

    def __init__(self, image_reference: str, docker_bin: str = "docker") -> None:
        self.image_reference = image_reference
        self.docker_bin = docker_bin

    def run(self, argv: Sequence[str], *, cwd: Path, timeout_seconds: float) -> tuple[int, str, str]:
        wrapped = [
            self.docker_bin,
            "run",
            "--rm",
            "--network=none",
            "-v",
            f"{cwd}:/workspace",
            "-w",
            "/workspace",
            self.image_reference,
            *argv,
        ]
        return LocalExecutor().run(wrapped, cwd=cwd, timeout_seconds=timeout_seconds)


class ToolchainMissingError(EnvironmentError):
    """The sandbox lacks a required executable; distinct from a compile failure."""


class Sandbox:
    """One run's mediated execution surface over a SandboxSpec."""

    def __init__(
        self,
        spec: SandboxSpec,
        executor: CommandExecutor | None = None,
        clock: Clock | None = None,
        timeout_seconds: float = DEFAULT_TIMEOUT_SECONDS,
    ) -> None:
        self.spec = spec
        self.executor = executor or LocalExecutor()
        self.clock = clock or SystemClock()
        self.timeout_seconds = timeout_seconds

    def execute(self, argv: Sequence[str], tool_name: str) -> ToolResult:
        """Run one allowlisted command and standardize its outcome.

        Raises GuardrailDenied when the policy rejects the command; callers
        record the denial in the trajectory.
        """
        verdict = guardrail_check(argv, self.spec)
        if not verdict.allowed:
            raise GuardrailDenied(verdict.reason)
        started = self.clock.now_ms()
        exit_code, stdout, stderr = self.executor.run(
            argv, cwd=self.spec.workspace_root, timeout_seconds=self.timeout_seconds
        )
        duration = max(1, self.clock.now_ms() - started)
        return ToolResult.from_execution(tool_name, exit_code, stdout, stderr, duration)
