"""Parsers turning raw forge output into standardized reports.

Both parsers are total: any byte string yields a report, never an
exception. Unrecognizable output is preserved verbatim on the raw result
and flagged parse_degraded. The machine-readable JSON output of forge is
preferred when detected; the text path is pinned against checked-in
transcripts of real forge runs.
"""

from __future__ import annotations

import json
import re
from typing import Any

from pocsmith.sandbox.types import CompileReport, Diagnostic, TestCaseResult, TestReport, ToolResult

# --- compile output -------------------------------------------------------

# e.g. "Error (8936): Identifier-start is not allowed at end of a number."
_DIAG_HEADER = re.compile(r"^(Error|Warning)\s*\((\d+)\):\s*(.*)$")
# e.g. "  --> test/exploit/ExploitTest.t.sol:91:41:"
_DIAG_LOCATION = re.compile(r"^\s*-->\s*([^\s:]+):(\d+)(?::(\d+))?:?\s*$")
# Same arrow shape anywhere inside a formattedMessage blob.
_EMBEDDED_LOCATION = re.compile(r"-->\s*([^\s:]+):(\d+)(?::(\d+))?")

_COMPILE_OK_MARKERS = (
    "Compiler run successful",
    "No files changed, compilation skipped",
    "Nothing to compile",
)
_COMPILE_FAIL_MARKERS = ("Compiler run failed", "Error: Compilation failed")


def parse_compile_output(raw: ToolResult) -> CompileReport:
    """Parse `forge build` output (text or --format-json)."""
    text = raw.stdout + ("\n" + raw.stderr if raw.stderr else "")
    json_report = _try_parse_compile_json(raw)
    if json_report is not None:
        return json_report

    diagnostics: list[Diagnostic] = []
    pending: dict[str, Any] | None = None
    continued_message = False
    for line in text.splitlines():
        header = _DIAG_HEADER.match(line)
        if header:
            if pending:
                diagnostics.append(_finish_diag(pending))
            pending = {
                "severity": header.group(1).lower(),
                "code": header.group(2),
                "message": header.group(3).strip(),
            }
            continued_message = True
            continue
        if pending:
            location = _DIAG_LOCATION.match(line)
            if location:
                pending["file"] = location.group(1)
                pending["line"] = int(location.group(2))
                continued_message = False
                continue
            # Messages may wrap onto following lines until the location arrow.
            if continued_message and line.strip() and not line.lstrip().startswith(("|", "^")):
                pending["message"] += " " + line.strip()
                continue
            continued_message = False
    if pending:
        diagnostics.append(_finish_diag(pending))

    saw_ok = any(marker in text for marker in _COMPILE_OK_MARKERS)
    saw_fail = any(marker in text for marker in _COMPILE_FAIL_MARKERS)
    has_errors = any(d.severity == "error" for d in diagnostics)
    success = raw.exit_code == 0 and not saw_fail and not has_errors
    recognized = saw_ok or saw_fail or bool(diagnostics)
    return CompileReport(
        success=success,
        diagnostics=tuple(diagnostics),
        raw=raw,
        parse_degraded=not recognized,
    )


def _finish_diag(pending: dict[str, Any]) -> Diagnostic:
    return Diagnostic(
        code=pending["code"],
        message=pending["message"],
        file=pending.get("file"),
        line=pending.get("line"),
        severity=pending["severity"],
    )


def _try_parse_compile_json(raw: ToolResult) -> CompileReport | None:
    stripped = raw.stdout.strip()
    if not stripped.startswith("{"):
        return None
    try:
        payload = json.loads(stripped)
    except json.JSONDecodeError:
        return None
    if not isinstance(payload, dict) or "errors" not in payload:
        return None
    diagnostics = []
    for entry in payload.get("errors") or ():
        location = entry.get("sourceLocation") or {}
        line = None
        formatted = entry.get("formattedMessage", "")
        arrow = _EMBEDDED_LOCATION.search(formatted) if formatted else None
        if arrow:
            line = int(arrow.group(2))
        diagnostics.append(
            Diagnostic(
                code=str(entry.get("errorCode", "")),
                message=entry.get("message", ""),
                file=location.get("file"),
                line=line,
                severity=entry.get("severity", "error"),
            )
        )
    has_errors = any(d.severity == "error" for d in diagnostics)
    return CompileReport(
        success=raw.exit_code == 0 and not has_errors,
        diagnostics=tuple(diagnostics),
        raw=raw,
    )


# --- test output ----------------------------------------------------------

# e.g. "[PASS] test_basicPrefundedAuction() (gas: 230986)"
#      "[FAIL: reason text] test_x() (gas: 410455)"
_TEST_LINE = re.compile(
    r"^\[(PASS|FAIL)(?::\s*(.*?))?\]\s+([A-Za-z_]\w*)\((.*?)\)(?:\s+\(gas:\s*([\d,]+)\))?\s*$"
)
# e.g. "Ran 2 tests for test/exploit/ExploitTest.t.sol:ExploitTest"
_SUITE_LINE = re.compile(r"^Ran \d+ tests? for (\S+)$")
# e.g. "Encountered 1 failing test in test/exploit/ExploitTest.t.sol:ExploitTest"
_RECAP_SUITE_LINE = re.compile(r"^Encountered \d+ failing tests? in (\S+)$")
_NO_MATCH_MARKERS = ("No tests match", "no tests to run", "Ran 0 tests")


def parse_test_output(raw: ToolResult) -> TestReport:
    """Parse `forge test` output (text or --json)."""
    json_report = _try_parse_test_json(raw)
    if json_report is not None:
        return json_report

    text = raw.stdout + ("\n" + raw.stderr if raw.stderr else "")
    compile_failed = any(marker in text for marker in _COMPILE_FAIL_MARKERS)
    if compile_failed:
        compile_report = parse_compile_output(raw)
        return TestReport(
            compiled=False,
            tests=(),
            raw=raw,
            diagnostics=compile_report.diagnostics,
        )

    suite: str | None = None
    cases: dict[tuple[str | None, str], dict[str, Any]] = {}
    order: list[tuple[str | None, str]] = []
    for line in text.splitlines():
        stripped = line.strip()
        suite_match = _SUITE_LINE.match(stripped) or _RECAP_SUITE_LINE.match(stripped)
        if suite_match:
            suite = suite_match.group(1)
            continue
        test_match = _TEST_LINE.match(stripped)
        if not test_match:
            continue
        status, reason, name, _args, gas = test_match.groups()
        key = (suite, name)
        entry = cases.get(key)
        if entry is None:
            entry = {"passed": status == "PASS", "reason": None, "gas": None}
            cases[key] = entry
            order.append(key)
        if status == "FAIL":
            entry["passed"] = False
        if reason:
            entry["reason"] = reason.strip()
        if gas:
            entry["gas"] = int(gas.replace(",", ""))

    tests = tuple(
        TestCaseResult(
            name=name,
            passed=cases[(suite_name, name)]["passed"],
            failure_reason=cases[(suite_name, name)]["reason"],
            gas=cases[(suite_name, name)]["gas"],
            suite=suite_name,
        )
        for suite_name, name in order
    )
    recognized = bool(tests) or any(marker in text for marker in _NO_MATCH_MARKERS)
    if not recognized:
        return TestReport(compiled=False, tests=(), raw=raw, parse_degraded=True)
    return TestReport(compiled=True, tests=tests, raw=raw)


def _try_parse_test_json(raw: ToolResult) -> TestReport | None:
    stripped = raw.stdout.strip()
    if not stripped.startswith("{"):
        return None
    try:
        payload = json.loads(stripped)
    except json.JSONDecodeError:
        return None
    if not isinstance(payload, dict):
        return None
    tests: list[TestCaseResult] = []
    for suite_id, suite_data in sorted(payload.items()):
        results = suite_data.get("test_results") if isinstance(suite_data, dict) else None
        if results is None:
            return None
        for signature, outcome in sorted(results.items()):
            status = str(outcome.get("status", ""))
            gas = None
            kind = outcome.get("kind")
            if isinstance(kind, dict):
                unit = kind.get("Unit") or kind.get("Standard")
                if isinstance(unit, dict):
                    gas = unit.get("gas")
                elif isinstance(unit, int):
                    gas = unit
            tests.append(
                TestCaseResult(
                    name=signature.split("(")[0],
                    passed=status.lower() == "success",
                    failure_reason=outcome.get("reason"),
                    gas=gas,
                    suite=suite_id,
                )
            )
    return TestReport(compiled=True, tests=tuple(tests), raw=raw)
