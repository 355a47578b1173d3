"""Workspace materialization and patch application.

Workspaces come from either a git URL pinned to a commit or, for bundled
fixtures, a local template tree pinned by content hash (commit field
"tree:<sha256>"). Preparing the same record twice must yield
content-identical source trees.
"""

from __future__ import annotations

import hashlib
import json
import logging
import shutil
import subprocess
import time
from dataclasses import dataclass
from pathlib import Path

from pocsmith.dataset.manifest import FindingRecord
from pocsmith.sandbox.executor import Sandbox
from pocsmith.sandbox.toolchain import Toolchain
from pocsmith.sandbox.types import SandboxSpec

logger = logging.getLogger(__name__)

LOCAL_URL_PREFIX = "dir://"
TREE_COMMIT_PREFIX = "tree:"
HASH_SKIP_DIRS = {".git", "out", "cache", "node_modules", "__pycache__"}
DEFAULT_SETUP_TIMEOUT_SECONDS = 3600.0  # curation policy: one hour per finding


class DatasetFaultError(RuntimeError):
    """The dataset record itself is unusable (bad commit, broken patch, ...)."""


class PatchConflictError(DatasetFaultError):
    """The diff does not apply cleanly to the workspace."""


def tree_hash(root: Path) -> str:
    """Content hash over the source tree, independent of mtimes and order."""
    digest = hashlib.sha256()
    root = Path(root)
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        relative = path.relative_to(root)
        if any(part in HASH_SKIP_DIRS for part in relative.parts):
            continue
        digest.update(str(relative).encode())
        digest.update(b"\0")
        digest.update(path.read_bytes())
        digest.update(b"\0")
    return digest.hexdigest()


def materialize_workspace(finding: FindingRecord, dest: Path) -> Path:
    """Fetch the project at its pinned state into an empty dest directory."""
    dest = Path(dest)
    if dest.exists() and any(dest.iterdir()):
        raise DatasetFaultError(f"destination {dest} is not empty")
    dest.mkdir(parents=True, exist_ok=True)

    if finding.repo_url.startswith(LOCAL_URL_PREFIX):
        relative = finding.repo_url[len(LOCAL_URL_PREFIX):]
        source = (finding.manifest_dir or Path(".")) / relative
        if not source.is_dir():
            raise DatasetFaultError(f"{finding.id}: local template missing: {source}")
        shutil.copytree(source, dest, dirs_exist_ok=True)
    else:
        _git_clone_checkout(finding, dest)

    if finding.commit.startswith(TREE_COMMIT_PREFIX):
        expected = finding.commit[len(TREE_COMMIT_PREFIX):]
        actual = tree_hash(dest)
        if actual != expected:
            raise DatasetFaultError(
                f"{finding.id}: workspace content hash {actual[:12]}... does not match pinned {expected[:12]}..."
            )
    return dest


def _git_clone_checkout(finding: FindingRecord, dest: Path) -> None:
    clone = subprocess.run(
        ["git", "clone", "--quiet", finding.repo_url, str(dest)],
        capture_output=True,
        text=True,
    )
    if clone.returncode != 0:
        raise DatasetFaultError(f"{finding.id}: clone failed: {clone.stderr.strip()}")
    checkout = subprocess.run(
        ["git", "-C", str(dest), "checkout", "--quiet", finding.commit],
        capture_output=True,
        text=True,
    )
    if checkout.returncode != 0:
        raise DatasetFaultError(f"{finding.id}: checkout of {finding.commit} failed: {checkout.stderr.strip()}")
    submodules = subprocess.run(
        ["git", "-C", str(dest), "submodule", "update", "--init", "--recursive", "--quiet"],
        capture_output=True,
        text=True,
    )
    if submodules.returncode != 0:
        logger.warning("%s: submodule init failed: %s", finding.id, submodules.stderr.strip())


@dataclass(frozen=True)
class PreparedWorkspace:
    spec: SandboxSpec
    tree_hash: str
    setup_seconds: float
    setup_timeout_exceeded: bool


def prepare_workspace(
    finding: FindingRecord,
    dest: Path,
    toolchain: Toolchain,
    *,
    sandbox_factory=None,
    setup_timeout_seconds: float = DEFAULT_SETUP_TIMEOUT_SECONDS,
) -> PreparedWorkspace:
    """Materialize, verify Foundry configuration, and baseline-compile.

    A finding whose project cannot be set up (missing config, failing
    baseline build) is unusable and reported as a dataset fault. Setup
    duration beyond the curation time limit is flagged, not enforced.
    """
    started = time.monotonic()
    materialize_workspace(finding, dest)
    if not (dest / "foundry.toml").is_file():
        raise DatasetFaultError(f"{finding.id}: project is not Foundry-configured (no foundry.toml)")
    spec = SandboxSpec(workspace_root=dest)
    sandbox = sandbox_factory(spec) if sandbox_factory else Sandbox(spec)
    report = toolchain.compile(sandbox)
    if not report.success:
        raise DatasetFaultError(
            f"{finding.id}: baseline compile failed; finding is unusable: "
            + "; ".join(f"{d.code}: {d.message}" for d in report.errors)[:500]
        )
    elapsed = time.monotonic() - started
    digest = tree_hash(dest)
    lock_path = dest.parent / f"{dest.name}.lock.json"
    lock_path.write_text(
        json.dumps(
            {"finding_id": finding.id, "commit": finding.commit, "tree_hash": digest},
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    return PreparedWorkspace(
        spec=spec,
        tree_hash=digest,
        setup_seconds=elapsed,
        setup_timeout_exceeded=elapsed > setup_timeout_seconds,
    )


@dataclass(frozen=True)
class PatchResult:
    applied_files: tuple[str, ...]
    no_op: bool
    patched_tree_hash: str


def apply_patch(workspace: Path, diff_text: str) -> PatchResult:
    """Apply a unified diff atomically: a dry run must pass before anything
    is touched, so a conflict leaves the workspace intact."""
    workspace = Path(workspace)
    if not diff_text.strip():
        logger.warning("empty diff: suspicious no-op patch")
        return PatchResult(applied_files=(), no_op=True, patched_tree_hash=tree_hash(workspace))

    check = subprocess.run(
        ["git", "apply", "--check", "--whitespace=nowarn", "-"],
        input=diff_text,
        cwd=workspace,
        capture_output=True,
        text=True,
    )
    if check.returncode != 0:
        raise PatchConflictError(f"patch does not apply: {check.stderr.strip()}")
    apply = subprocess.run(
        ["git", "apply", "--whitespace=nowarn", "-"],
        input=diff_text,
        cwd=workspace,
        capture_output=True,
        text=True,
    )
    if apply.returncode != 0:
        raise PatchConflictError(f"patch application failed after clean check: {apply.stderr.strip()}")
    return PatchResult(
        applied_files=tuple(sorted(_files_in_diff(diff_text))),
        no_op=False,
        patched_tree_hash=tree_hash(workspace),
    )


def _files_in_diff(diff_text: str) -> set[str]:
    files = set()
    for line in diff_text.splitlines():
        if line.startswith("+++ ") or line.startswith("--- "):
            target = line[4:].strip()
            if target == "/dev/null":
                continue
            if target.startswith(("a/", "b/")):
                target = target[2:]
            files.add(target)
    return files
