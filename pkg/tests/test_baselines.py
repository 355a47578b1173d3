"""Baseline strategy tests: extraction, prompting, workflow iteration, parity."""

from __future__ import annotations

import pytest

from conftest import StubToolchain, make_compile_report, make_test_report
from pocsmith.agent.task import AgentTask
from pocsmith.baselines import (
    BaselineKind,
    assemble_task_inputs,
    extract_code_block,
    run_prompting,
    run_workflow,
)
from pocsmith.clock import TickClock
from pocsmith.gateway.backends import ScriptedGateway, ScriptStep
from pocsmith.gateway.messages import ChatMessage
from pocsmith.sandbox.executor import Sandbox
from pocsmith.sandbox.types import Diagnostic, SandboxSpec
from pocsmith.sandbox.types import TestCaseResult as CaseResult

O3 = "openai/o3"

POC_BLOCK = """```solidity
contract ExploitTest {
    function test_exploit() public { }
}
```"""

HELPER_BLOCK = """```solidity
interface IThing { function poke() external; }
```"""


@pytest.fixture()
def workspace(tmp_path) -> SandboxSpec:
    (tmp_path / "src").mkdir()
    (tmp_path / "annotations").mkdir()
    (tmp_path / "src" / "Pool.sol").write_text("contract Pool { uint56 public fee = 25; }\n")
    (tmp_path / "annotations" / "annotation.md").write_text("The fee is wrong.\n")
    return SandboxSpec(workspace_root=tmp_path)


def make_task(spec: SandboxSpec) -> AgentTask:
    return AgentTask(
        vulnerable_contract_path="src/Pool.sol",
        annotation_path="annotations/annotation.md",
        poc_output_path="test/exploit/ExploitTest.t.sol",
        workspace=spec,
        model_id=O3,
    )


def text_step(content: str, input_tokens: int = 10, output_tokens: int = 10) -> ScriptStep:
    return ScriptStep(
        message=ChatMessage.assistant(content),
        input_tokens=input_tokens,
        output_tokens=output_tokens,
    )


class TestBaselineKind:
    def test_prompting_takes_no_iterations(self):
        with pytest.raises(ValueError):
            BaselineKind(kind="prompting", max_iterations=3)

    def test_workflow_needs_iterations(self):
        with pytest.raises(ValueError):
            BaselineKind(kind="workflow", max_iterations=0)
        assert BaselineKind(kind="workflow", max_iterations=5).max_iterations == 5


class TestExtraction:
    def test_single_block(self):
        assert "contract ExploitTest" in extract_code_block(f"Here you go:\n{POC_BLOCK}\n")

    def test_no_block_returns_none(self):
        assert extract_code_block("I cannot write that test.") is None

    def test_test_contract_block_preferred(self):
        text = f"First a helper:\n{HELPER_BLOCK}\nThen the test:\n{POC_BLOCK}\n"
        chosen = extract_code_block(text)
        assert "contract ExploitTest" in chosen

    def test_tie_goes_to_first_block(self):
        other = POC_BLOCK.replace("ExploitTest", "SecondTest")
        chosen = extract_code_block(f"{POC_BLOCK}\n{other}")
        assert "ExploitTest" in chosen


class TestPrompting:
    def test_single_call_writes_file(self, workspace):
        gateway = ScriptedGateway([text_step(f"Sure.\n{POC_BLOCK}")])
        record = run_prompting(make_task(workspace), gateway, clock=TickClock())
        assert record.usage.round_count == 1
        assert record.produced_poc == "test/exploit/ExploitTest.t.sol"
        assert (workspace.workspace_root / record.produced_poc).is_file()
        assert record.strategy == "prompting"
        assert record.sc_tool_call_count == 0

    def test_no_code_block_produces_nothing(self, workspace):
        gateway = ScriptedGateway([text_step("no code, sorry")])
        record = run_prompting(make_task(workspace), gateway, clock=TickClock())
        assert record.produced_poc is None
        assert record.terminal == "agent_claims_done"

    def test_no_tool_events_before_evaluation(self, workspace):
        gateway = ScriptedGateway([text_step(f"{POC_BLOCK}")])
        record = run_prompting(make_task(workspace), gateway, clock=TickClock())
        assert all(e.kind not in ("tool_call", "tool_result") for e in record.events)

    def test_inline_inputs_in_prompt(self, workspace):
        gateway = ScriptedGateway([text_step(f"{POC_BLOCK}")])
        record = run_prompting(make_task(workspace), gateway, clock=TickClock())
        prompt = record.events[0].payload["text"]
        assert "uint56 public fee = 25" in prompt  # contract text inlined
        assert "The fee is wrong." in prompt  # annotation inlined


class TestWorkflow:
    def test_fix_on_second_iteration(self, workspace):
        # iteration 1: compile fails; iteration 2: compile ok, test passes.
        toolchain = StubToolchain(
            compile_reports=[
                make_compile_report(False, (Diagnostic(code="2314", message="expected ;"),)),
                make_compile_report(True),
            ],
        )
        gateway = ScriptedGateway(
            [
                text_step("analysis of the bug"),
                text_step(f"attempt one\n{POC_BLOCK}"),
                text_step(f"fixed version\n{POC_BLOCK}"),
            ]
        )
        record = run_workflow(
            make_task(workspace), gateway, Sandbox(workspace, clock=TickClock()),
            toolchain=toolchain, clock=TickClock(),
        )
        assert record.terminal == "agent_claims_done"
        assert toolchain.compile_calls == 2
        assert toolchain.test_calls == 1
        assert record.sc_tool_call_count == 3

    def test_never_fixing_hits_tool_budget_at_ten(self, workspace):
        toolchain = StubToolchain(
            compile_reports=[
                make_compile_report(False, (Diagnostic(code="2314", message="expected ;"),))
                for _ in range(12)
            ],
        )
        gateway = ScriptedGateway(
            [text_step("analysis")] + [text_step(f"try {i}\n{POC_BLOCK}") for i in range(12)]
        )
        record = run_workflow(
            make_task(workspace), gateway, Sandbox(workspace, clock=TickClock()),
            toolchain=toolchain, clock=TickClock(),
        )
        assert record.terminal == "max_tool_calls"
        assert record.sc_tool_call_count == 10
        assert toolchain.compile_calls == 10

    def test_happy_first_try(self, workspace):
        toolchain = StubToolchain()
        gateway = ScriptedGateway([text_step("analysis"), text_step(POC_BLOCK)])
        record = run_workflow(
            make_task(workspace), gateway, Sandbox(workspace, clock=TickClock()),
            toolchain=toolchain, clock=TickClock(),
        )
        assert record.terminal == "agent_claims_done"
        assert toolchain.compile_calls == 1
        assert toolchain.test_calls == 1

    def test_failing_test_feedback_includes_reason_and_tail(self, workspace):
        toolchain = StubToolchain(
            test_reports=[
                make_test_report(
                    (CaseResult(name="test_exploit()", passed=False, failure_reason="42 != 0", suite="s"),)
                ),
                make_test_report((CaseResult(name="test_exploit()", passed=True, suite="s"),)),
            ],
        )
        gateway = ScriptedGateway(
            [
                text_step("analysis"),
                text_step(POC_BLOCK),
                text_step(f"fixed\n{POC_BLOCK}"),
            ]
        )
        record = run_workflow(
            make_task(workspace), gateway, Sandbox(workspace, clock=TickClock()),
            toolchain=toolchain, clock=TickClock(),
        )
        assert record.terminal == "agent_claims_done"
        assert toolchain.test_calls == 2


class TestInputParity:
    def test_strategies_receive_identical_inputs(self, workspace):
        task = make_task(workspace)
        first = assemble_task_inputs(task)
        second = assemble_task_inputs(task)
        assert first == second
        # The agent's prompt carries the same three paths.
        from pocsmith.agent.prompts import assemble_task_prompt

        agent_prompt = assemble_task_prompt(task)
        for path in (first.contract_path, first.annotation_path, first.poc_output_path):
            assert path in agent_prompt
