"""Non-agentic comparison strategies: single-pass prompting and the
two-phase workflow with bounded compile/test feedback iteration.

Both receive the same task inputs as the agent (same contract, same
annotation, same output path) and emit the same RunRecord/trajectory
formats, so evaluation and reporting are strategy-agnostic. The workflow
shares the agent's budgets; prompting performs exactly one model call and
never touches the sandbox before evaluation.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path

from pocsmith.agent.task import AgentTask, Budget
from pocsmith.agent.trajectory import RunRecord, TrajectoryRecorder
from pocsmith.clock import Clock, SystemClock
from pocsmith.gateway.backends import Gateway, GatewayError
from pocsmith.gateway.messages import ChatMessage, UsageRecord
from pocsmith.sandbox.executor import Sandbox, ToolchainMissingError
from pocsmith.sandbox.fstools import _atomic_write
from pocsmith.sandbox.toolchain import Toolchain, detect_toolchain
from pocsmith.sandbox.types import CompileReport, TestReport

logger = logging.getLogger(__name__)

FEEDBACK_TAIL_LINES = 200
DEFAULT_MAX_ITERATIONS = 20

_FENCE = re.compile(r"```[a-zA-Z0-9_+-]*\n(.*?)```", re.DOTALL)
_TEST_CONTRACT = re.compile(r"contract\s+\w*Test\w*\b|function\s+test\w*\s*\(", re.IGNORECASE)


@dataclass(frozen=True)
class BaselineKind:
    kind: str
    max_iterations: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("prompting", "workflow"):
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        if self.kind == "prompting" and self.max_iterations is not None:
            raise ValueError("prompting has no iteration parameter")
        if self.kind == "workflow" and (self.max_iterations or 0) < 1:
            raise ValueError("workflow max_iterations must be >= 1")


@dataclass(frozen=True)
class TaskInputs:
    """The semantically identical inputs every strategy receives."""

    contract_path: str
    annotation_path: str
    poc_output_path: str
    contract_text: str
    annotation_text: str


def assemble_task_inputs(task: AgentTask) -> TaskInputs:
    root = task.workspace.workspace_root
    return TaskInputs(
        contract_path=task.vulnerable_contract_path,
        annotation_path=task.annotation_path,
        poc_output_path=task.poc_output_path,
        contract_text=(root / task.vulnerable_contract_path).read_text(),
        annotation_text=(root / task.annotation_path).read_text(),
    )


def extract_code_block(text: str) -> str | None:
    """Pick the PoC from a free-form response.

    Fenced blocks are scanned in order; the first block declaring a test
    contract wins, otherwise the first block. No block means nothing
    compilable was produced.
    """
    blocks = _FENCE.findall(text)
    if not blocks:
        return None
    for block in blocks:
        if _TEST_CONTRACT.search(block):
            return block
    return blocks[0]


def _write_poc(task: AgentTask, code: str) -> None:
    _atomic_write(task.poc_absolute_path, code)


def run_prompting(
    task: AgentTask,
    gateway: Gateway,
    *,
    clock: Clock | None = None,
    trajectory_path: Path | None = None,
    temperature: float = 0.0,
    seed: int = 1615315,
) -> RunRecord:
    """Single-pass generation: one model call, contract and annotation inline."""
    clock = clock or SystemClock()
    recorder = TrajectoryRecorder(trajectory_path)
    inputs = assemble_task_inputs(task)
    usage = UsageRecord()
    started_ms = clock.now_ms()

    prompt = (
        "You are an expert smart contract security testing specialist.\n"
        "Write a complete Foundry PoC exploit test demonstrating the vulnerability "
        "described below. Respond with exactly one Solidity code block containing the "
        "full test file; it must compile on its own within the project and its "
        "assertions must pass on the vulnerable code.\n\n"
        f"Vulnerable contract ({inputs.contract_path}):\n```solidity\n{inputs.contract_text}\n```\n\n"
        f"Vulnerability description ({inputs.annotation_path}):\n{inputs.annotation_text}\n\n"
        f"The test file will be saved to {inputs.poc_output_path}."
    )
    recorder.emit("task_prompt", {"text": prompt}, clock.now_ms())

    terminal = "agent_claims_done"
    produced: str | None = None
    try:
        message, delta = gateway.complete(
            [ChatMessage.user(prompt)],
            task.model_id,
            temperature=temperature,
            seed=seed,
            available_tools=(),
        )
    except GatewayError as exc:
        logger.error("prompting gateway failure: %s", exc)
        recorder.emit("assistant", {"error": str(exc)}, clock.now_ms())
        terminal = "model_error"
    else:
        usage.input_tokens += delta.input_tokens
        usage.output_tokens += delta.output_tokens
        usage.cumulative_cost_usd += delta.cost_usd
        usage.round_count = 1
        recorder.emit("assistant", {"content": message.content, "tool_calls": []}, clock.now_ms())
        code = extract_code_block(message.content)
        if code is not None:
            _write_poc(task, code)
            produced = task.poc_output_path
        else:
            logger.warning("prompting response contained no code block; nothing written")

    usage.wall_time_ms = max(1, clock.now_ms() - started_ms)
    recorder.emit(
        "termination",
        {
            "terminal": terminal,
            "produced_poc": produced,
            "sc_tool_call_count": 0,
            "cumulative_cost_usd": str(usage.cumulative_cost_usd),
        },
        clock.now_ms(),
    )
    recorder.close()
    return RunRecord(
        task=task,
        strategy="prompting",
        events=recorder.events,
        usage=usage,
        sc_tool_call_count=0,
        terminal=terminal,
        produced_poc=produced,
    )


def run_workflow(
    task: AgentTask,
    gateway: Gateway,
    sandbox: Sandbox,
    *,
    budget: Budget | None = None,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    toolchain: Toolchain | None = None,
    clock: Clock | None = None,
    trajectory_path: Path | None = None,
    temperature: float = 0.0,
    seed: int = 1615315,
) -> RunRecord:
    """Two-phase workflow: analysis call, then generate -> compile -> test with
    diagnostics fed back on failure. The loop structure is fixed by the
    harness; the shared smart-contract tool budget and cost cap apply.
    """
    clock = clock or SystemClock()
    budget = budget or Budget()
    toolchain = toolchain or detect_toolchain()
    recorder = TrajectoryRecorder(trajectory_path)
    inputs = assemble_task_inputs(task)
    usage = UsageRecord()
    started_ms = clock.now_ms()
    sc_calls = 0
    call_counter = 0

    def model_call(conversation: list[ChatMessage]) -> ChatMessage | None:
        nonlocal usage
        if usage.cumulative_cost_usd >= budget.max_cost_usd:
            return None
        message, delta = gateway.complete(
            conversation, task.model_id, temperature=temperature, seed=seed, available_tools=()
        )
        usage.input_tokens += delta.input_tokens
        usage.output_tokens += delta.output_tokens
        usage.cumulative_cost_usd += delta.cost_usd
        usage.round_count += 1
        recorder.emit("assistant", {"content": message.content, "tool_calls": []}, clock.now_ms())
        return message

    def record_sc(tool_name: str, report: CompileReport | TestReport) -> None:
        nonlocal call_counter
        call_counter += 1
        call_id = f"wf_{call_counter}"
        recorder.emit("tool_call", {"id": call_id, "tool_name": tool_name, "arguments": {}}, clock.now_ms())
        recorder.emit("tool_result", {"tool_call_id": call_id, "result": report.raw.to_json()}, clock.now_ms())

    analysis_prompt = (
        "Analyze the following smart contract vulnerability description. Identify the "
        "vulnerability class, the affected code, the root cause, and how an exploit "
        "would demonstrate the impact.\n\n"
        f"Vulnerable contract ({inputs.contract_path}):\n```solidity\n{inputs.contract_text}\n```\n\n"
        f"Vulnerability description:\n{inputs.annotation_text}"
    )
    recorder.emit("task_prompt", {"text": analysis_prompt}, clock.now_ms())

    terminal: str | None = None
    produced: str | None = None
    conversation: list[ChatMessage] = [ChatMessage.user(analysis_prompt)]
    try:
        analysis = model_call(conversation)
        if analysis is None:
            terminal = "max_cost"
        else:
            conversation.append(analysis)
            conversation.append(
                ChatMessage.user(
                    "Now write the complete Foundry PoC test file demonstrating this "
                    "vulnerability. Respond with exactly one Solidity code block; it will "
                    f"be saved to {inputs.poc_output_path}."
                )
            )
            for _ in range(max_iterations):
                generation = model_call(conversation)
                if generation is None:
                    terminal = "max_cost"
                    break
                conversation.append(generation)
                code = extract_code_block(generation.content)
                if code is None:
                    conversation.append(
                        ChatMessage.user("Your response contained no code block. Respond with "
                                         "exactly one Solidity code block holding the full test file.")
                    )
                    continue
                _write_poc(task, code)
                produced = task.poc_output_path

                if sc_calls + 1 > budget.max_sc_tool_calls:
                    terminal = "max_tool_calls"
                    break
                compile_report = toolchain.compile(sandbox)
                sc_calls += 1
                record_sc("smart_contract_compile", compile_report)
                if not compile_report.success:
                    conversation.append(ChatMessage.user(_feedback("compilation failed", compile_report)))
                    continue

                if sc_calls + 1 > budget.max_sc_tool_calls:
                    terminal = "max_tool_calls"
                    break
                test_report = toolchain.run_tests(sandbox, match_path=task.poc_output_path)
                sc_calls += 1
                record_sc("smart_contract_test", test_report)
                if not test_report.all_passed:
                    conversation.append(ChatMessage.user(_feedback("tests failed", test_report)))
                    continue
                terminal = "agent_claims_done"
                break
            if terminal is None:
                # Iteration safety valve tripped before any budget did; the
                # model never produced something the loop could finish on.
                logger.warning("workflow exhausted %d iterations without terminating", max_iterations)
                terminal = "model_error"
    except GatewayError as exc:
        logger.error("workflow gateway failure: %s", exc)
        terminal = "model_error"
    except ToolchainMissingError as exc:
        logger.error("workflow environment fault: %s", exc)
        terminal = "environment_error"

    usage.wall_time_ms = max(1, clock.now_ms() - started_ms)
    recorder.emit(
        "termination",
        {
            "terminal": terminal,
            "produced_poc": produced,
            "sc_tool_call_count": sc_calls,
            "cumulative_cost_usd": str(usage.cumulative_cost_usd),
        },
        clock.now_ms(),
    )
    recorder.close()
    return RunRecord(
        task=task,
        strategy="workflow",
        events=recorder.events,
        usage=usage,
        sc_tool_call_count=sc_calls,
        terminal=terminal,
        produced_poc=produced,
    )


def _feedback(label: str, report: CompileReport | TestReport) -> str:
    """Structured diagnostics plus the raw output tail, for regeneration."""
    lines = [f"{label}; fix the test file and respond with the full corrected code block."]
    if isinstance(report, CompileReport):
        for diag in report.errors:
            where = f" [{diag.file}:{diag.line}]" if diag.file else ""
            lines.append(f"error ({diag.code}): {diag.message}{where}")
    else:
        for case in report.tests:
            if not case.passed:
                reason = f": {case.failure_reason}" if case.failure_reason else ""
                lines.append(f"failing test {case.name}{reason}")
    raw = (report.raw.stdout + "\n" + report.raw.stderr).strip().splitlines()
    tail = raw[-FEEDBACK_TAIL_LINES:]
    if tail:
        lines.append("--- raw output (last %d lines) ---" % len(tail))
        lines.extend(tail)
    return "\n".join(lines)
