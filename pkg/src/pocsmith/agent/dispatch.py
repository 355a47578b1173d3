"""Typed tools exposed to the model, and their dispatch into the sandbox.

Tool failures that the model can fix (missing file, ambiguous edit, bad
arguments) come back as failed results with the error text as content, so
the loop continues and the model self-corrects. Policy violations raise
GuardrailDenied for the loop to record; environment faults propagate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from pocsmith.clock import Clock, SystemClock
from pocsmith.gateway.messages import ToolCallRequest
from pocsmith.sandbox.executor import GuardrailDenied, Sandbox
from pocsmith.sandbox.fstools import EditError, fs_edit, fs_read, fs_search, fs_write
from pocsmith.sandbox.paths import PathEscapeError
from pocsmith.sandbox.todo import TodoList, todo_append, todo_render, todo_set_state
from pocsmith.sandbox.toolchain import Toolchain
from pocsmith.sandbox.types import CompileReport, TestReport, ToolResult

SC_TOOLS = frozenset({"smart_contract_compile", "smart_contract_test"})

MAX_CONTENT_CHARS = 24_000
RAW_TAIL_CHARS = 8_000


def tool_schemas() -> list[dict[str, Any]]:
    """JSON-schema'd tool definitions in the chat wire dialect."""

    def schema(name: str, description: str, properties: dict[str, Any], required: list[str]) -> dict[str, Any]:
        return {
            "type": "function",
            "function": {
                "name": name,
                "description": description,
                "parameters": {
                    "type": "object",
                    "properties": properties,
                    "required": required,
                },
            },
        }

    return [
        schema(
            "search_files",
            "Search the workspace: glob for file paths or grep file contents.",
            {
                "pattern": {"type": "string", "description": "Glob pattern or regular expression."},
                "root": {"type": "string", "description": "Directory to search under (workspace-relative).", "default": "."},
                "mode": {"type": "string", "enum": ["glob", "grep"], "default": "glob"},
            },
            ["pattern"],
        ),
        schema(
            "read_file",
            "Read a file from the workspace.",
            {"path": {"type": "string"}},
            ["path"],
        ),
        schema(
            "write_file",
            "Create or overwrite a file in the workspace.",
            {"path": {"type": "string"}, "content": {"type": "string"}},
            ["path", "content"],
        ),
        schema(
            "edit_file",
            "Replace one unique occurrence of a fragment in a workspace file.",
            {
                "path": {"type": "string"},
                "old_fragment": {"type": "string"},
                "new_fragment": {"type": "string"},
            },
            ["path", "old_fragment", "new_fragment"],
        ),
        schema(
            "update_todo",
            "Track progress on your plan: append an entry or change an entry's state.",
            {
                "action": {"type": "string", "enum": ["append", "set_state", "read"]},
                "text": {"type": "string", "description": "Entry text (append only)."},
                "index": {"type": "integer", "description": "Zero-based entry index (set_state only)."},
                "state": {"type": "string", "enum": ["pending", "in_progress", "done"]},
            },
            ["action"],
        ),
        schema(
            "smart_contract_compile",
            "Compile the Solidity project and report diagnostics.",
            {},
            [],
        ),
        schema(
            "smart_contract_test",
            "Run the project's forge tests, optionally restricted to one test file.",
            {"match_path": {"type": "string", "description": "Only run tests whose file path matches this glob."}},
            [],
        ),
    ]


@dataclass
class DispatchOutcome:
    result: ToolResult
    content: str
    compile_report: CompileReport | None = None
    test_report: TestReport | None = None


class ToolDispatcher:
    """Executes tool calls against one sandbox; owns the run's todo list."""

    def __init__(self, sandbox: Sandbox, toolchain: Toolchain, clock: Clock | None = None) -> None:
        self.sandbox = sandbox
        self.toolchain = toolchain
        self.clock = clock or SystemClock()
        self.todo = TodoList()
        self.executed: list[str] = []

    def dispatch(self, call: ToolCallRequest) -> DispatchOutcome:
        handler = getattr(self, f"_tool_{call.tool_name}", None)
        if handler is None:
            raise GuardrailDenied(f"tool {call.tool_name!r} is not part of the action space")
        started = self.clock.now_ms()
        try:
            outcome = handler(call.arguments)
        except (PathEscapeError,) as exc:
            raise GuardrailDenied(str(exc)) from exc
        except (FileNotFoundError, EditError, ValueError, KeyError, TypeError) as exc:
            duration = max(1, self.clock.now_ms() - started)
            message = f"{type(exc).__name__}: {exc}"
            result = ToolResult.from_execution(call.tool_name, 1, "", message, duration)
            outcome = DispatchOutcome(result=result, content=message)
        self.executed.append(call.tool_name)
        return outcome

    # --- file-system tools ---

    def _tool_search_files(self, args: dict[str, Any]) -> DispatchOutcome:
        started = self.clock.now_ms()
        matches = fs_search(
            self.sandbox.spec,
            pattern=args["pattern"],
            root=args.get("root", "."),
            mode=args.get("mode", "glob"),
        )
        lines = [
            m.path if m.line is None else f"{m.path}:{m.line}: {m.excerpt}"
            for m in matches
        ]
        content = "\n".join(lines) if lines else "(no matches)"
        duration = max(1, self.clock.now_ms() - started)
        result = ToolResult.from_execution("search_files", 0, f"{len(matches)} matches", "", duration)
        return DispatchOutcome(result=result, content=_clip(content))

    def _tool_read_file(self, args: dict[str, Any]) -> DispatchOutcome:
        started = self.clock.now_ms()
        text = fs_read(self.sandbox.spec, args["path"])
        duration = max(1, self.clock.now_ms() - started)
        result = ToolResult.from_execution("read_file", 0, f"read {len(text)} bytes", "", duration)
        return DispatchOutcome(result=result, content=_clip(text))

    def _tool_write_file(self, args: dict[str, Any]) -> DispatchOutcome:
        result = fs_write(self.sandbox.spec, args["path"], args["content"], clock=self.clock)
        return DispatchOutcome(result=result, content=result.stdout)

    def _tool_edit_file(self, args: dict[str, Any]) -> DispatchOutcome:
        result = fs_edit(
            self.sandbox.spec,
            args["path"],
            args["old_fragment"],
            args["new_fragment"],
            clock=self.clock,
        )
        return DispatchOutcome(result=result, content=result.stdout)

    # --- planning tool ---

    def _tool_update_todo(self, args: dict[str, Any]) -> DispatchOutcome:
        started = self.clock.now_ms()
        action = args["action"]
        if action == "append":
            self.todo = todo_append(self.todo, args["text"])
        elif action == "set_state":
            self.todo = todo_set_state(self.todo, int(args["index"]), args["state"])
        elif action != "read":
            raise ValueError(f"unknown todo action {action!r}")
        rendered = todo_render(self.todo)
        duration = max(1, self.clock.now_ms() - started)
        result = ToolResult.from_execution("update_todo", 0, rendered, "", duration)
        return DispatchOutcome(result=result, content=rendered)

    # --- smart-contract tools ---

    def _tool_smart_contract_compile(self, args: dict[str, Any]) -> DispatchOutcome:
        report = self.toolchain.compile(self.sandbox)
        lines = ["compilation succeeded" if report.success else "compilation FAILED"]
        for diag in report.diagnostics:
            where = f" [{diag.file}:{diag.line}]" if diag.file else ""
            lines.append(f"{diag.severity} ({diag.code}): {diag.message}{where}")
        lines.append(_raw_tail(report.raw))
        return DispatchOutcome(
            result=report.raw,
            content=_clip("\n".join(filter(None, lines))),
            compile_report=report,
        )

    def _tool_smart_contract_test(self, args: dict[str, Any]) -> DispatchOutcome:
        report = self.toolchain.run_tests(self.sandbox, match_path=args.get("match_path"))
        if not report.compiled:
            lines = ["test run FAILED: project did not compile"]
            for diag in report.diagnostics:
                lines.append(f"{diag.severity} ({diag.code}): {diag.message}")
        else:
            lines = [f"{report.passed_count} passed; {report.failed_count} failed"]
            for case in report.tests:
                marker = "PASS" if case.passed else "FAIL"
                reason = f" ({case.failure_reason})" if case.failure_reason else ""
                lines.append(f"[{marker}] {case.name}{reason}")
        lines.append(_raw_tail(report.raw))
        return DispatchOutcome(
            result=report.raw,
            content=_clip("\n".join(filter(None, lines))),
            test_report=report,
        )


def _raw_tail(result: ToolResult) -> str:
    raw = (result.stdout + "\n" + result.stderr).strip()
    if not raw:
        return ""
    return "--- raw output (tail) ---\n" + raw[-RAW_TAIL_CHARS:]


def _clip(text: str) -> str:
    if len(text) <= MAX_CONTENT_CHARS:
        return text
    return text[:MAX_CONTENT_CHARS] + f"\n... [clipped {len(text) - MAX_CONTENT_CHARS} chars]"
