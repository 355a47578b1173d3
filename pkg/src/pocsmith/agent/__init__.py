"""Autonomous agent core: prompts, budgets, trajectory recording, ReAct loop."""

from pocsmith.agent.loop import run_agent
from pocsmith.agent.prompts import assemble_system_prompt, assemble_task_prompt
from pocsmith.agent.task import AgentTask, Budget
from pocsmith.agent.trajectory import RunRecord, TrajectoryEvent, TrajectoryRecorder, verify_pairing

__all__ = [
    "AgentTask",
    "Budget",
    "RunRecord",
    "TrajectoryEvent",
    "TrajectoryRecorder",
    "assemble_system_prompt",
    "assemble_task_prompt",
    "run_agent",
    "verify_pairing",
]
