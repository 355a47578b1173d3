"""Workspace path containment.

Every tool path goes through resolve_in_workspace; symlinks are resolved
before the containment check, so links pointing outside the workspace are
rejected even when the literal path looks contained.
"""

from __future__ import annotations

from pathlib import Path


class PathEscapeError(PermissionError):
    """A path resolves outside the sandbox workspace."""


def resolve_in_workspace(workspace_root: Path, candidate: str | Path) -> Path:
    root = Path(workspace_root).resolve()
    raw = Path(candidate)
    target = raw if raw.is_absolute() else root / raw
    try:
        resolved = target.resolve()
    except (OSError, RuntimeError) as exc:  # symlink loops and the like
        raise PathEscapeError(f"cannot resolve {candidate!r}: {exc}") from exc
    if resolved != root and root not in resolved.parents:
        raise PathEscapeError(f"path {candidate!r} escapes workspace {root}")
    return resolved


def is_contained(workspace_root: Path, candidate: str | Path) -> bool:
    try:
        resolve_in_workspace(workspace_root, candidate)
        return True
    except PathEscapeError:
        return False
