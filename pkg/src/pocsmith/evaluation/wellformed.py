"""Well-formedness verdicts for generated PoCs.

A PoC is well-formed when it compiles and every test assertion passes on
the vulnerable code. Failure flags and their fixed priority:

    MC (max cost) > MT (max tool calls) > CF (compilation failure)
    > IA (ill-formed assertion) > NA (no assertion)

When several flags hold, only the highest-priority one is reported. For
prompting runs the resource limits MC/MT are inapplicable and never set.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any

from pocsmith.agent.trajectory import RunRecord
from pocsmith.sandbox.types import CompileReport, TestReport

FLAG_PRIORITY = ("MC", "MT", "CF", "IA", "NA")
WELL_FORMED = "WellFormed"

# Call sites of the assertion family; definitions (preceded by `function`)
# do not count.
_ASSERTION_CALL = re.compile(r"(function\s+)?\b(assert|assert[A-Z]\w*|expectRevert\w*)\s*\(")


@dataclass(frozen=True)
class WellFormednessOutcome:
    verdict: str
    evidence: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {"verdict": self.verdict, "evidence": self.evidence}


def strip_comments_and_strings(source: str) -> str:
    """Blank out Solidity comments and string literals, preserving offsets."""
    out = list(source)
    i = 0
    n = len(source)
    while i < n:
        c = source[i]
        nxt = source[i + 1] if i + 1 < n else ""
        if c == "/" and nxt == "/":
            while i < n and source[i] != "\n":
                out[i] = " "
                i += 1
        elif c == "/" and nxt == "*":
            out[i] = out[i + 1] = " "
            i += 2
            while i < n and not (source[i] == "*" and i + 1 < n and source[i + 1] == "/"):
                if source[i] != "\n":
                    out[i] = " "
                i += 1
            if i < n:
                out[i] = " "
            if i + 1 < n:
                out[i + 1] = " "
            i += 2
        elif c in ("\"", "'"):
            quote = c
            out[i] = " "
            i += 1
            while i < n and source[i] != quote:
                if source[i] == "\\" and i + 1 < n:
                    out[i] = out[i + 1] = " "
                    i += 2
                    continue
                if source[i] != "\n":
                    out[i] = " "
                i += 1
            if i < n:
                out[i] = " "
                i += 1
        else:
            i += 1
    return "".join(out)


def detect_assertions(poc_source: str) -> int:
    """Count assertion-call sites outside comments and string literals."""
    stripped = strip_comments_and_strings(poc_source)
    return sum(1 for m in _ASSERTION_CALL.finditer(stripped) if not m.group(1))


def derive_flags(
    run: RunRecord,
    compile_report: CompileReport | None,
    test_report: TestReport | None,
    assertion_count: int,
) -> frozenset[str]:
    """Derive the failure-flag set for one evaluated run."""
    flags = set()
    budgets_apply = run.strategy != "prompting"
    if budgets_apply and run.terminal == "max_cost":
        flags.add("MC")
    if budgets_apply and run.terminal == "max_tool_calls":
        flags.add("MT")
    no_poc = run.produced_poc is None
    compile_failed = compile_report is None or not compile_report.success
    if no_poc or compile_failed:
        flags.add("CF")
    if test_report is not None and test_report.compiled and test_report.failed_count > 0:
        flags.add("IA")
    if assertion_count == 0:
        flags.add("NA")
    return frozenset(flags)


def classify_flags(flags: frozenset[str]) -> str:
    """The unique highest-priority flag, or WellFormed for the empty set."""
    unknown = flags - set(FLAG_PRIORITY)
    if unknown:
        raise ValueError(f"unknown flags: {sorted(unknown)}")
    for flag in FLAG_PRIORITY:
        if flag in flags:
            return flag
    return WELL_FORMED


def classify_well_formedness(
    run: RunRecord,
    compile_report: CompileReport | None,
    test_report: TestReport | None,
    assertion_count: int,
) -> WellFormednessOutcome:
    flags = derive_flags(run, compile_report, test_report, assertion_count)
    verdict = classify_flags(flags)
    evidence: dict[str, Any] = {
        "flags": sorted(flags),
        "terminal": run.terminal,
        "sc_tool_call_count": run.sc_tool_call_count,
        "cumulative_cost_usd": str(run.usage.cumulative_cost_usd),
        "assertion_count": assertion_count,
        "produced_poc": run.produced_poc,
    }
    if compile_report is not None:
        evidence["compile_errors"] = [d.to_json() for d in compile_report.errors]
    if test_report is not None:
        evidence["failing_tests"] = [
            {"name": t.name, "reason": t.failure_reason} for t in test_report.tests if not t.passed
        ]
    return WellFormednessOutcome(verdict=verdict, evidence=evidence)
