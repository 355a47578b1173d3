"""Patch-oracle validation of well-formed PoCs.

A logically correct PoC exercises the vulnerable path, so the ground-truth
mitigation patch must prevent it: on the patched project the PoC's
assertions fail. A PoC that still passes never touched the patched path;
a PoC the patch breaks at compile time cannot be judged automatically.
"""

from __future__ import annotations

import logging
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from pocsmith.dataset.manifest import FindingRecord
from pocsmith.dataset.workspace import DatasetFaultError, apply_patch, materialize_workspace
from pocsmith.sandbox.executor import Sandbox
from pocsmith.sandbox.paths import resolve_in_workspace
from pocsmith.sandbox.toolchain import Toolchain
from pocsmith.sandbox.types import SandboxSpec

logger = logging.getLogger(__name__)

CORRECT = "Correct"
INCORRECT = "Incorrect"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class ValidationOutcome:
    """RQ2 verdict; defined only for runs whose RQ1 verdict is WellFormed."""

    verdict: str
    detail: str
    patched_report: dict[str, Any] = field(default_factory=dict)
    needs_manual_review: bool = False

    def to_json(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict,
            "detail": self.detail,
            "needs_manual_review": self.needs_manual_review,
            "patched_report": self.patched_report,
        }


def validate_against_patch(
    poc_file: Path,
    poc_rel_path: str,
    finding: FindingRecord,
    *,
    toolchain: Toolchain,
    scratch_dir: Path,
    sandbox_factory: Callable[[SandboxSpec], Sandbox] = Sandbox,
) -> ValidationOutcome:
    """Run the oracle procedure against a fresh patched workspace.

    1. materialize the pinned project and apply the mitigation diff;
    2. baseline-compile (failure here is a dataset fault, not a verdict);
    3. copy the PoC in unchanged;
    4. compile: failure -> Inconclusive;
    5. run the PoC: any failing test -> Correct, all passing -> Incorrect.
    """
    patched_root = Path(scratch_dir) / f"patched-{finding.id}"
    if patched_root.exists():
        shutil.rmtree(patched_root)
    materialize_workspace(finding, patched_root)
    diff_text = finding.diff_file().read_text()
    result = apply_patch(patched_root, diff_text)
    if result.no_op:
        logger.warning("%s: mitigation diff is a no-op", finding.id)

    spec = SandboxSpec(workspace_root=patched_root)
    sandbox = sandbox_factory(spec)
    baseline = toolchain.compile(sandbox)
    if not baseline.success:
        raise DatasetFaultError(
            f"{finding.id}: patched project fails to compile before the PoC is added; "
            "the dataset patch is broken"
        )

    destination = resolve_in_workspace(patched_root, poc_rel_path)
    destination.parent.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(poc_file, destination)

    compile_report = toolchain.compile(sandbox)
    if not compile_report.success:
        reasons = "; ".join(f"{d.code}: {d.message}" for d in compile_report.errors)[:500]
        return ValidationOutcome(
            verdict=INCONCLUSIVE,
            detail=f"patch breaks PoC compilability: {reasons}",
            patched_report=compile_report.to_json(),
            needs_manual_review=True,
        )

    test_report = toolchain.run_tests(sandbox, match_path=poc_rel_path)
    if not test_report.compiled:
        return ValidationOutcome(
            verdict=INCONCLUSIVE,
            detail="patched test run did not compile",
            patched_report=test_report.to_json(),
            needs_manual_review=True,
        )
    failing = [t for t in test_report.tests if not t.passed]
    if failing:
        reasons = "; ".join(f"{t.name}: {t.failure_reason or 'failed'}" for t in failing)[:500]
        return ValidationOutcome(
            verdict=CORRECT,
            detail=f"the patch prevents the PoC exploit ({reasons})",
            patched_report=test_report.to_json(),
        )
    return ValidationOutcome(
        verdict=INCORRECT,
        detail="no assertion fails on the patched project; the PoC does not exercise the patched path",
        patched_report=test_report.to_json(),
    )
