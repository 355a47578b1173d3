"""The autonomous loop: reason, act, observe, under hard budgets.

Check placement guarantees the budget invariants rather than detecting
violations after the fact: cumulative cost is compared against the cap
before every model call, and the smart-contract call counter before every
compile/test dispatch. A final assistant message with no tool calls is the
only success-side stop condition.
"""

from __future__ import annotations

import logging
from pathlib import Path

from pocsmith.agent.dispatch import SC_TOOLS, ToolDispatcher, tool_schemas
from pocsmith.agent.prompts import assemble_system_prompt, assemble_task_prompt
from pocsmith.agent.task import AgentTask, Budget
from pocsmith.agent.trajectory import RunRecord, TrajectoryRecorder
from pocsmith.clock import Clock, SystemClock
from pocsmith.gateway.backends import Gateway, GatewayError
from pocsmith.gateway.messages import ChatMessage, UsageRecord
from pocsmith.sandbox.executor import GuardrailDenied, Sandbox, ToolchainMissingError
from pocsmith.sandbox.toolchain import Toolchain, detect_toolchain

logger = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 0.0
DEFAULT_SEED = 1615315


def run_agent(
    task: AgentTask,
    budget: Budget,
    gateway: Gateway,
    sandbox: Sandbox,
    *,
    toolchain: Toolchain | None = None,
    clock: Clock | None = None,
    trajectory_path: Path | None = None,
    temperature: float = DEFAULT_TEMPERATURE,
    seed: int = DEFAULT_SEED,
) -> RunRecord:
    """Run one full generation attempt and return its RunRecord.

    Gateway and environment failures terminate the run with the matching
    terminal state; they never escape as exceptions.
    """
    clock = clock or SystemClock()
    toolchain = toolchain or detect_toolchain()
    recorder = TrajectoryRecorder(trajectory_path)
    dispatcher = ToolDispatcher(sandbox, toolchain, clock=clock)
    schemas = tool_schemas()
    usage = UsageRecord()
    started_ms = clock.now_ms()

    system_text = assemble_system_prompt()
    task_text = assemble_task_prompt(task)
    recorder.emit("system_prompt", {"text": system_text}, clock.now_ms())
    recorder.emit("task_prompt", {"text": task_text}, clock.now_ms())
    conversation: list[ChatMessage] = [
        ChatMessage.system(system_text),
        ChatMessage.user(task_text),
    ]

    terminal: str | None = None
    sc_calls = 0

    while terminal is None:
        # Cost cap is enforced before spending, so the invariant is
        # "never exceeded at a checkpoint", not "noticed afterwards".
        if usage.cumulative_cost_usd >= budget.max_cost_usd:
            terminal = "max_cost"
            break
        try:
            message, delta = gateway.complete(
                conversation,
                task.model_id,
                temperature=temperature,
                seed=seed,
                available_tools=schemas,
            )
        except GatewayError as exc:
            logger.error("gateway failure: %s", exc)
            recorder.emit("assistant", {"error": str(exc)}, clock.now_ms())
            terminal = "model_error"
            break
        usage.input_tokens += delta.input_tokens
        usage.output_tokens += delta.output_tokens
        usage.cumulative_cost_usd += delta.cost_usd
        usage.round_count += 1
        recorder.emit(
            "assistant",
            {
                "content": message.content,
                "tool_calls": [
                    {"id": c.id, "tool_name": c.tool_name, "arguments": c.arguments}
                    for c in message.tool_calls
                ],
            },
            clock.now_ms(),
        )
        conversation.append(message)

        if not message.tool_calls:
            terminal = "agent_claims_done"
            break

        for call in message.tool_calls:
            if call.tool_name in SC_TOOLS and sc_calls + 1 > budget.max_sc_tool_calls:
                terminal = "max_tool_calls"
                break
            recorder.emit(
                "tool_call",
                {"id": call.id, "tool_name": call.tool_name, "arguments": call.arguments},
                clock.now_ms(),
            )
            try:
                outcome = dispatcher.dispatch(call)
            except GuardrailDenied as denial:
                recorder.emit(
                    "guardrail_denial",
                    {"tool_call_id": call.id, "tool_name": call.tool_name, "reason": denial.reason},
                    clock.now_ms(),
                )
                conversation.append(
                    ChatMessage.tool_result(call.id, f"denied by guardrail: {denial.reason}")
                )
                continue
            except ToolchainMissingError as exc:
                logger.error("sandbox environment fault: %s", exc)
                recorder.emit(
                    "tool_result",
                    {
                        "tool_call_id": call.id,
                        "result": {
                            "tool_name": call.tool_name,
                            "status": "failed",
                            "exit_code": 1,
                            "stdout": "",
                            "stderr": f"environment fault: {exc}",
                            "duration_ms": 1,
                        },
                    },
                    clock.now_ms(),
                )
                terminal = "environment_error"
                break
            if call.tool_name in SC_TOOLS:
                sc_calls += 1
            recorder.emit(
                "tool_result",
                {"tool_call_id": call.id, "result": outcome.result.to_json()},
                clock.now_ms(),
            )
            conversation.append(ChatMessage.tool_result(call.id, outcome.content))

    produced = task.poc_absolute_path
    produced_poc = task.poc_output_path if produced.is_file() else None
    usage.wall_time_ms = max(1, clock.now_ms() - started_ms)
    recorder.emit(
        "termination",
        {
            "terminal": terminal,
            "produced_poc": produced_poc,
            "sc_tool_call_count": sc_calls,
            "cumulative_cost_usd": str(usage.cumulative_cost_usd),
        },
        clock.now_ms(),
    )
    recorder.close()
    return RunRecord(
        task=task,
        strategy="agent",
        events=recorder.events,
        usage=usage,
        sc_tool_call_count=sc_calls,
        terminal=terminal,
        produced_poc=produced_poc,
    )
