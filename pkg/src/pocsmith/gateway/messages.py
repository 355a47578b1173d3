"""Conversation wire types for the chat-completions dialect."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Any, Iterable, Sequence

ROLES = ("system", "user", "assistant", "tool")


class ConversationError(ValueError):
    """A message or conversation violates the wire-protocol invariants."""


@dataclass(frozen=True)
class ToolCallRequest:
    """One tool invocation requested by an assistant message."""

    id: str
    tool_name: str
    arguments: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.tool_name:
            raise ConversationError("tool_name must be non-empty")
        if not self.id:
            raise ConversationError("tool call id must be non-empty")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str = ""
    tool_calls: tuple[ToolCallRequest, ...] = ()
    tool_call_id: str | None = None

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ConversationError(f"unknown role {self.role!r}")
        if self.tool_calls and self.role != "assistant":
            raise ConversationError("only assistant messages may carry tool_calls")
        if self.role == "tool" and not self.tool_call_id:
            raise ConversationError("tool messages must carry a tool_call_id")
        if self.role != "tool" and self.tool_call_id is not None:
            raise ConversationError("tool_call_id is only valid on tool messages")
        ids = [c.id for c in self.tool_calls]
        if len(ids) != len(set(ids)):
            raise ConversationError("tool call ids must be unique within a message")

    @staticmethod
    def system(content: str) -> "ChatMessage":
        return ChatMessage(role="system", content=content)

    @staticmethod
    def user(content: str) -> "ChatMessage":
        return ChatMessage(role="user", content=content)

    @staticmethod
    def assistant(content: str, tool_calls: Sequence[ToolCallRequest] = ()) -> "ChatMessage":
        return ChatMessage(role="assistant", content=content, tool_calls=tuple(tool_calls))

    @staticmethod
    def tool_result(tool_call_id: str, content: str) -> "ChatMessage":
        return ChatMessage(role="tool", content=content, tool_call_id=tool_call_id)

    def to_wire(self) -> dict[str, Any]:
        """Serialize to the chat-completions JSON shape."""
        wire: dict[str, Any] = {"role": self.role, "content": self.content}
        if self.tool_calls:
            wire["tool_calls"] = [
                {
                    "id": c.id,
                    "type": "function",
                    "function": {"name": c.tool_name, "arguments": _dump_arguments(c.arguments)},
                }
                for c in self.tool_calls
            ]
        if self.tool_call_id is not None:
            wire["tool_call_id"] = self.tool_call_id
        return wire

    @staticmethod
    def from_wire(wire: dict[str, Any]) -> "ChatMessage":
        calls = tuple(
            ToolCallRequest(
                id=c["id"],
                tool_name=c["function"]["name"],
                arguments=_load_arguments(c["function"].get("arguments", "{}")),
            )
            for c in wire.get("tool_calls") or ()
        )
        return ChatMessage(
            role=wire["role"],
            content=wire.get("content") or "",
            tool_calls=calls,
            tool_call_id=wire.get("tool_call_id"),
        )


def _dump_arguments(arguments: dict[str, Any]) -> str:
    import json

    return json.dumps(arguments, sort_keys=True)


def _load_arguments(raw: Any) -> dict[str, Any]:
    import json

    if isinstance(raw, dict):
        return raw
    parsed = json.loads(raw) if raw else {}
    if not isinstance(parsed, dict):
        raise ConversationError("tool call arguments must decode to an object")
    return parsed


def validate_conversation(messages: Iterable[ChatMessage]) -> None:
    """Check cross-message invariants.

    Raises ConversationError when a system message appears after the first
    position or more than once, or when a tool message references an id no
    prior assistant message issued.
    """
    seen_call_ids: set[str] = set()
    for index, message in enumerate(messages):
        if message.role == "system" and index != 0:
            raise ConversationError("system message must be first and unique")
        for call in message.tool_calls:
            seen_call_ids.add(call.id)
        if message.role == "tool" and message.tool_call_id not in seen_call_ids:
            raise ConversationError(f"tool message references unknown call id {message.tool_call_id!r}")


@dataclass
class UsageRecord:
    """Cumulative resource usage for one run."""

    input_tokens: int = 0
    output_tokens: int = 0
    cumulative_cost_usd: Decimal = Decimal("0")
    round_count: int = 0
    wall_time_ms: int = 0

    def to_json(self) -> dict[str, Any]:
        return {
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "cumulative_cost_usd": str(self.cumulative_cost_usd),
            "round_count": self.round_count,
            "wall_time_ms": self.wall_time_ms,
        }

    @staticmethod
    def from_json(data: dict[str, Any]) -> "UsageRecord":
        return UsageRecord(
            input_tokens=data["input_tokens"],
            output_tokens=data["output_tokens"],
            cumulative_cost_usd=Decimal(data["cumulative_cost_usd"]),
            round_count=data["round_count"],
            wall_time_ms=data["wall_time_ms"],
        )
