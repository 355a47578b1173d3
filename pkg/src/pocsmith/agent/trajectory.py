"""Trajectory events, durable JSONL recording, and run summaries.

A trajectory is the complete ordered record of one run: prompts,
assistant turns, tool invocations with parameters and results, guardrail
denials, and the terminal event. Events are appended one canonical-JSON
line at a time and flushed, so a crash after an append never loses it.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from pocsmith.agent.task import AgentTask
from pocsmith.gateway.messages import UsageRecord
from pocsmith.jsonutil import canonical_dump_line, canonical_dumps, loads
from pocsmith.sandbox.types import SandboxSpec

EVENT_KINDS = (
    "system_prompt",
    "task_prompt",
    "assistant",
    "tool_call",
    "tool_result",
    "guardrail_denial",
    "termination",
)

TERMINAL_STATES = (
    "agent_claims_done",
    "max_cost",
    "max_tool_calls",
    "model_error",
    "environment_error",
)

TRAJECTORY_SCHEMA_VERSION = 1
TRAJECTORY_FILENAME = "trajectory.jsonl"
SUMMARY_FILENAME = "run.json"


class TrajectoryError(ValueError):
    """Sequence gap, unknown kind, or broken call/result pairing."""


@dataclass(frozen=True)
class TrajectoryEvent:
    sequence: int
    kind: str
    payload: dict[str, Any]
    timestamp_ms: int

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise TrajectoryError(f"unknown event kind {self.kind!r}")

    def to_json(self) -> dict[str, Any]:
        return {
            "v": TRAJECTORY_SCHEMA_VERSION,
            "sequence": self.sequence,
            "kind": self.kind,
            "payload": self.payload,
            "timestamp_ms": self.timestamp_ms,
        }

    @staticmethod
    def from_json(data: dict[str, Any]) -> "TrajectoryEvent":
        return TrajectoryEvent(
            sequence=data["sequence"],
            kind=data["kind"],
            payload=data["payload"],
            timestamp_ms=data["timestamp_ms"],
        )


class TrajectoryRecorder:
    """Assigns sequence numbers and durably appends events.

    When constructed without a path the recorder keeps events in memory
    only (used by unit tests and the prompting baseline's pre-evaluation
    phase, which must not touch the sandbox).
    """

    def __init__(self, path: Path | None = None) -> None:
        self.path = path
        self.events: list[TrajectoryEvent] = []
        self._handle = None
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            self._handle = open(path, "w", encoding="utf-8")

    def record(self, event: TrajectoryEvent) -> None:
        expected = self.events[-1].sequence + 1 if self.events else 1
        if event.sequence != expected:
            raise TrajectoryError(f"sequence gap: expected {expected}, got {event.sequence}")
        self.events.append(event)
        if self._handle is not None:
            self._handle.write(canonical_dump_line(event.to_json()))
            self._handle.flush()
            os.fsync(self._handle.fileno())

    def emit(self, kind: str, payload: dict[str, Any], timestamp_ms: int) -> TrajectoryEvent:
        event = TrajectoryEvent(
            sequence=len(self.events) + 1,
            kind=kind,
            payload=payload,
            timestamp_ms=timestamp_ms,
        )
        self.record(event)
        return event

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None


def load_trajectory(path: Path) -> list[TrajectoryEvent]:
    events = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            events.append(TrajectoryEvent.from_json(loads(line)))
    for index, event in enumerate(events, start=1):
        if event.sequence != index:
            raise TrajectoryError(f"sequence gap at position {index}")
    return events


def verify_pairing(events: Iterable[TrajectoryEvent]) -> None:
    """Every tool_call must have exactly one tool_result or guardrail_denial."""
    opened: dict[str, int] = {}
    for event in events:
        if event.kind == "tool_call":
            call_id = event.payload["id"]
            if call_id in opened:
                raise TrajectoryError(f"duplicate tool_call id {call_id!r}")
            opened[call_id] = 0
        elif event.kind in ("tool_result", "guardrail_denial"):
            call_id = event.payload["tool_call_id"]
            if call_id not in opened:
                raise TrajectoryError(f"{event.kind} for unknown tool_call id {call_id!r}")
            opened[call_id] += 1
    unmatched = sorted(call_id for call_id, count in opened.items() if count != 1)
    if unmatched:
        raise TrajectoryError(f"tool_calls without exactly one closing event: {unmatched}")


@dataclass
class RunRecord:
    """One generation attempt: trajectory, usage, terminal outcome."""

    task: AgentTask
    strategy: str
    events: list[TrajectoryEvent] = field(default_factory=list)
    usage: UsageRecord = field(default_factory=UsageRecord)
    sc_tool_call_count: int = 0
    terminal: str = "agent_claims_done"
    produced_poc: str | None = None

    def __post_init__(self) -> None:
        if self.terminal not in TERMINAL_STATES:
            raise TrajectoryError(f"unknown terminal state {self.terminal!r}")

    @property
    def model_id(self) -> str:
        return self.task.model_id

    def summary_json(self) -> dict[str, Any]:
        return {
            "v": TRAJECTORY_SCHEMA_VERSION,
            "task": self.task.to_json(),
            "strategy": self.strategy,
            "usage": self.usage.to_json(),
            "sc_tool_call_count": self.sc_tool_call_count,
            "terminal": self.terminal,
            "produced_poc": self.produced_poc,
            "event_count": len(self.events),
        }

    def save(self, run_dir: Path) -> None:
        run_dir.mkdir(parents=True, exist_ok=True)
        trajectory_path = run_dir / TRAJECTORY_FILENAME
        with open(trajectory_path, "w", encoding="utf-8") as handle:
            for event in self.events:
                handle.write(canonical_dump_line(event.to_json()))
        (run_dir / SUMMARY_FILENAME).write_text(canonical_dumps(self.summary_json()) + "\n")

    @staticmethod
    def load(run_dir: Path, workspace: SandboxSpec | None = None) -> "RunRecord":
        summary = loads((run_dir / SUMMARY_FILENAME).read_text())
        events = load_trajectory(run_dir / TRAJECTORY_FILENAME)
        task_data = summary["task"]
        spec = workspace or SandboxSpec(workspace_root=Path(task_data["workspace_root"]))
        task = AgentTask(
            vulnerable_contract_path=task_data["vulnerable_contract_path"],
            annotation_path=task_data["annotation_path"],
            poc_output_path=task_data["poc_output_path"],
            workspace=spec,
            model_id=task_data["model_id"],
        )
        record = RunRecord(
            task=task,
            strategy=summary["strategy"],
            events=events,
            usage=UsageRecord.from_json(summary["usage"]),
            sc_tool_call_count=summary["sc_tool_call_count"],
            terminal=summary["terminal"],
            produced_poc=summary["produced_poc"],
        )
        if summary["event_count"] != len(events):
            raise TrajectoryError(
                f"summary records {summary['event_count']} events, trajectory has {len(events)}"
            )
        return record
