"""File-system tools offered to the agent: search, read, write, edit.

All paths are confined to the workspace. Writes and edits are atomic:
content lands via a temp file + rename, so a crash leaves either the old
or the new file, never a truncated one.
"""

from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path

from pocsmith.clock import Clock, SystemClock
from pocsmith.sandbox.paths import resolve_in_workspace
from pocsmith.sandbox.types import SandboxSpec, ToolResult

MAX_GREP_FILE_BYTES = 4 * 1024 * 1024


class EditError(ValueError):
    """The edit fragment is missing or ambiguous; the file is left unchanged."""


@dataclass(frozen=True)
class SearchMatch:
    path: str
    line: int | None = None
    excerpt: str | None = None


def fs_search(spec: SandboxSpec, pattern: str, root: str = ".", mode: str = "glob") -> list[SearchMatch]:
    """Glob for paths or grep file contents under the workspace.

    Results are sorted by (path, line) so identical workspaces always
    produce identical orderings.
    """
    root_path = resolve_in_workspace(spec.workspace_root, root)
    workspace = spec.workspace_root.resolve()
    if mode == "glob":
        matches = []
        for hit in sorted(root_path.glob(pattern)):
            resolved = hit.resolve()
            if resolved == workspace or workspace in resolved.parents:
                matches.append(SearchMatch(path=str(resolved.relative_to(workspace))))
        return sorted(matches, key=lambda m: m.path)
    if mode == "grep":
        try:
            regex = re.compile(pattern)
        except re.error as exc:
            raise ValueError(f"invalid pattern: {exc}") from exc
        matches = []
        for file in sorted(p for p in root_path.rglob("*") if p.is_file()):
            resolved = file.resolve()
            if not (workspace in resolved.parents):
                continue
            if file.stat().st_size > MAX_GREP_FILE_BYTES:
                continue
            try:
                text = file.read_text()
            except (UnicodeDecodeError, OSError):
                continue
            for lineno, line in enumerate(text.splitlines(), start=1):
                if regex.search(line):
                    matches.append(
                        SearchMatch(
                            path=str(resolved.relative_to(workspace)),
                            line=lineno,
                            excerpt=line.strip()[:400],
                        )
                    )
        return sorted(matches, key=lambda m: (m.path, m.line or 0))
    raise ValueError(f"unknown search mode {mode!r}")


def fs_read(spec: SandboxSpec, path: str) -> str:
    target = resolve_in_workspace(spec.workspace_root, path)
    if not target.is_file():
        raise FileNotFoundError(f"no such file in workspace: {path}")
    return target.read_text()


def _atomic_write(target: Path, content: str) -> None:
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=".pocsmith-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(content)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def fs_write(spec: SandboxSpec, path: str, content: str, clock: Clock | None = None) -> ToolResult:
    clock = clock or SystemClock()
    started = clock.now_ms()
    target = resolve_in_workspace(spec.workspace_root, path)
    _atomic_write(target, content)
    duration = max(1, clock.now_ms() - started)
    return ToolResult.from_execution(
        "write_file", 0, f"wrote {len(content)} bytes to {path}", "", duration
    )


def fs_edit(
    spec: SandboxSpec, path: str, old_fragment: str, new_fragment: str, clock: Clock | None = None
) -> ToolResult:
    clock = clock or SystemClock()
    started = clock.now_ms()
    target = resolve_in_workspace(spec.workspace_root, path)
    if not target.is_file():
        raise FileNotFoundError(f"no such file in workspace: {path}")
    text = target.read_text()
    occurrences = text.count(old_fragment) if old_fragment else 0
    if occurrences != 1:
        raise EditError(
            f"fragment occurs {occurrences} times in {path}; edits require exactly one occurrence"
        )
    _atomic_write(target, text.replace(old_fragment, new_fragment, 1))
    duration = max(1, clock.now_ms() - started)
    return ToolResult.from_execution("edit_file", 0, f"edited {path}", "", duration)
