"""Lightweight planning tool: an ordered todo list with a single active entry."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

STATES = ("pending", "in_progress", "done")
_MARKS = {"pending": "[ ]", "in_progress": "[>]", "done": "[x]"}


class TodoError(ValueError):
    """A change would violate the at-most-one-in-progress rule."""


@dataclass(frozen=True)
class TodoEntry:
    text: str
    state: str = "pending"

    def __post_init__(self) -> None:
        if self.state not in STATES:
            raise TodoError(f"unknown state {self.state!r}")


@dataclass(frozen=True)
class TodoList:
    entries: tuple[TodoEntry, ...] = field(default=())

    def __post_init__(self) -> None:
        active = sum(1 for e in self.entries if e.state == "in_progress")
        if active > 1:
            raise TodoError("at most one entry may be in_progress")


def todo_append(todo: TodoList, text: str) -> TodoList:
    return TodoList(entries=todo.entries + (TodoEntry(text=text),))


def todo_set_state(todo: TodoList, index: int, state: str) -> TodoList:
    if not 0 <= index < len(todo.entries):
        raise TodoError(f"no entry at index {index}")
    if state == "in_progress":
        for position, entry in enumerate(todo.entries):
            if entry.state == "in_progress" and position != index:
                raise TodoError(
                    f"entry {position} is already in_progress; close it before starting another"
                )
    entries = list(todo.entries)
    entries[index] = replace(entries[index], state=state)
    return TodoList(entries=tuple(entries))


def todo_render(todo: TodoList) -> str:
    """Stable text rendering: identical lists render identically."""
    if not todo.entries:
        return "(no todo entries)"
    return "\n".join(f"{_MARKS[e.state]} {i + 1}. {e.text}" for i, e in enumerate(todo.entries))
