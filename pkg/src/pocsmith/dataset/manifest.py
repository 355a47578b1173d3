"""Finding manifests: one JSON file per finding plus an index.

Annotation texts may be inline or referenced as {"path": "..."} relative
to the manifest directory; patch references are materialized at curation
time into concrete diffs stored beside the manifest, because PR links rot
and the oracle needs bit-stable inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

MANIFEST_SCHEMA_VERSION = 1

SEVERITIES = ("high", "medium")
PATCH_KINDS = ("pull_request", "commit", "other")
ANNOTATION_LEVELS = ("high_level", "detailed", "procedural")


class ManifestError(ValueError):
    """Schema violation; message carries field-level diagnostics."""


@dataclass(frozen=True)
class AnnotationBundle:
    """Auditor-written annotation at up to three detail levels.

    Levels are hierarchical in content; structurally only high_level is
    mandatory. Real curated findings exist where the procedural narrative
    could be extracted but no distinct detailed write-up exists, so a
    missing middle level is a recorded gap, not a rejection.
    """

    high_level: str
    detailed: str | None = None
    procedural: str | None = None
    reference_poc: str | None = None

    def __post_init__(self) -> None:
        if not self.high_level or not self.high_level.strip():
            raise ManifestError("annotation.high_level: required and non-empty")

    def available_levels(self) -> tuple[str, ...]:
        levels = ["high_level"]
        if self.detailed is not None:
            levels.append("detailed")
        if self.procedural is not None:
            levels.append("procedural")
        return tuple(levels)

    def level_gaps(self) -> tuple[str, ...]:
        if self.procedural is not None and self.detailed is None:
            return ("procedural present without detailed",)
        return ()

    def text_for(self, level: str) -> str | None:
        if level not in ANNOTATION_LEVELS:
            raise ManifestError(f"unknown annotation level {level!r}")
        return getattr(self, level)


@dataclass(frozen=True)
class PatchRef:
    kind: str
    locator: str
    diff_path: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in PATCH_KINDS:
            raise ManifestError(f"patch_ref.kind: must be one of {PATCH_KINDS}, got {self.kind!r}")
        if not self.locator:
            raise ManifestError("patch_ref.locator: required")


@dataclass(frozen=True)
class FindingRecord:
    """One dataset entry: project repo, pinned commit, annotations, patch."""

    id: str
    project: str
    repo_url: str
    commit: str
    audit_ref: str
    patch_ref: PatchRef
    annotation: AnnotationBundle
    has_reference_poc: bool
    severity: str
    contract_path: str = "src"
    poc_path: str = "test/exploit/ExploitTest.t.sol"
    manifest_dir: Path | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.id:
            raise ManifestError("id: required")
        if not self.commit:
            raise ManifestError(f"{self.id}: commit: required (pins the vulnerable state)")
        if self.severity not in SEVERITIES:
            raise ManifestError(f"{self.id}: severity: must be one of {SEVERITIES}")

    def diff_file(self) -> Path:
        if self.patch_ref.diff_path is None:
            raise ManifestError(f"{self.id}: patch_ref has no materialized diff")
        base = self.manifest_dir or Path(".")
        return base / self.patch_ref.diff_path


def _load_text_field(value: Any, base_dir: Path, where: str) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, dict) and "path" in value:
        target = base_dir / value["path"]
        if not target.is_file():
            raise ManifestError(f"{where}: referenced file missing: {value['path']}")
        return target.read_text()
    raise ManifestError(f"{where}: expected string or {{'path': ...}}")


def _parse_annotation(data: Any, base_dir: Path, finding_id: str) -> AnnotationBundle:
    if not isinstance(data, dict):
        raise ManifestError(f"{finding_id}: annotation: expected object")
    def load(level: str) -> str | None:
        if level not in data or data[level] is None:
            return None
        return _load_text_field(data[level], base_dir, f"{finding_id}: annotation.{level}")

    high = load("high_level")
    if high is None:
        raise ManifestError(f"{finding_id}: annotation.high_level: required")
    return AnnotationBundle(
        high_level=high,
        detailed=load("detailed"),
        procedural=load("procedural"),
        reference_poc=load("reference_poc"),
    )


def parse_finding(data: dict[str, Any], base_dir: Path) -> FindingRecord:
    finding_id = str(data.get("id", ""))
    problems = []
    for required in ("id", "project", "repo_url", "commit", "audit_ref", "severity", "patch_ref", "annotation"):
        if required not in data:
            problems.append(f"{finding_id or '<finding>'}: {required}: missing")
    if problems:
        raise ManifestError("; ".join(problems))
    patch = data["patch_ref"]
    patch_ref = PatchRef(
        kind=patch.get("kind", ""),
        locator=patch.get("locator", ""),
        diff_path=patch.get("diff_path"),
    )
    return FindingRecord(
        id=finding_id,
        project=data["project"],
        repo_url=data["repo_url"],
        commit=data["commit"],
        audit_ref=data["audit_ref"],
        patch_ref=patch_ref,
        annotation=_parse_annotation(data["annotation"], base_dir, finding_id),
        has_reference_poc=bool(data.get("has_reference_poc", False)),
        severity=data.get("severity", ""),
        contract_path=data.get("contract_path", "src"),
        poc_path=data.get("poc_path", "test/exploit/ExploitTest.t.sol"),
        manifest_dir=base_dir,
    )


def load_manifest(path: str | Path) -> list[FindingRecord]:
    """Load and validate a manifest index; duplicate ids are rejected."""
    index_path = Path(path)
    if index_path.is_dir():
        index_path = index_path / "index.json"
    if not index_path.is_file():
        raise ManifestError(f"manifest index not found: {index_path}")
    index = json.loads(index_path.read_text())
    version = index.get("schema_version")
    if version != MANIFEST_SCHEMA_VERSION:
        raise ManifestError(f"unrecognized manifest schema_version {version!r}")
    base_dir = index_path.parent
    records = []
    problems = []
    seen: set[str] = set()
    for entry in index.get("findings", ()):
        try:
            if isinstance(entry, str):
                finding_data = json.loads((base_dir / entry).read_text())
            else:
                finding_data = entry
            record = parse_finding(finding_data, base_dir)
        except (ManifestError, OSError, json.JSONDecodeError) as exc:
            problems.append(str(exc))
            continue
        if record.id in seen:
            problems.append(f"{record.id}: duplicate id")
            continue
        seen.add(record.id)
        records.append(record)
    if problems:
        raise ManifestError("; ".join(problems))
    return records
