"""End-to-end orchestration: prepare workspace, generate, evaluate, validate.

One finding's artifacts live under a directory derived purely from
(run_id, finding_id, strategy, model), so reruns find and skip completed
work and reports can merge any number of run directories.
"""

from __future__ import annotations

import logging
import shutil
from dataclasses import dataclass
from pathlib import Path

from pocsmith.agent.loop import run_agent
from pocsmith.agent.task import AgentTask, Budget
from pocsmith.agent.trajectory import RunRecord, TRAJECTORY_FILENAME
from pocsmith.baselines import run_prompting, run_workflow
from pocsmith.clock import Clock, SystemClock, TickClock
from pocsmith.dataset.manifest import FindingRecord
from pocsmith.dataset.scrub import derive_annotation_levels
from pocsmith.dataset.workspace import prepare_workspace
from pocsmith.evaluation.patch_oracle import ValidationOutcome, validate_against_patch
from pocsmith.evaluation.wellformed import (
    WellFormednessOutcome,
    classify_well_formedness,
    detect_assertions,
)
from pocsmith.gateway.backends import Gateway
from pocsmith.jsonutil import canonical_dumps, loads
from pocsmith.sandbox.executor import Sandbox
from pocsmith.sandbox.toolchain import Toolchain
from pocsmith.sandbox.types import CompileReport, TestReport

logger = logging.getLogger(__name__)

STRATEGIES = ("agent", "prompting", "workflow")

ANNOTATION_REL_PATH = "annotations/annotation.md"
POC_ARTIFACT_NAME = "poc.t.sol"
RQ1_FILENAME = "rq1.json"
RQ2_FILENAME = "rq2.json"


def sanitize_model_id(model_id: str) -> str:
    return model_id.replace("/", "-").replace(":", "-")


def artifact_dir(output_dir: Path, run_id: str, finding_id: str, strategy: str, model_id: str) -> Path:
    return Path(output_dir) / run_id / finding_id / f"{strategy}__{sanitize_model_id(model_id)}"


def is_completed(unit_dir: Path) -> bool:
    return (unit_dir / "run.json").is_file() and (unit_dir / RQ1_FILENAME).is_file()


@dataclass
class FindingOutcome:
    finding_id: str
    strategy: str
    model_id: str
    unit_dir: Path
    run: RunRecord
    rq1: WellFormednessOutcome
    compile_report: CompileReport | None
    test_report: TestReport | None
    skipped: bool = False


def select_annotation_text(finding: FindingRecord, level: str | None) -> str:
    """The requested level's text; default is the most detailed available."""
    levels = derive_annotation_levels(finding.annotation)
    if level is None:
        for candidate in ("procedural", "detailed", "high_level"):
            if candidate in levels:
                return levels[candidate]
    if level not in levels:
        raise ValueError(f"finding {finding.id} has no {level!r} annotation")
    return levels[level]


def evaluate_rq1(
    run: RunRecord, toolchain: Toolchain, sandbox: Sandbox
) -> tuple[WellFormednessOutcome, CompileReport | None, TestReport | None]:
    """The shared evaluation phase: compile and test the produced PoC once."""
    if run.produced_poc is None:
        outcome = classify_well_formedness(run, None, None, 0)
        return outcome, None, None
    poc_source = run.task.poc_absolute_path.read_text()
    assertion_count = detect_assertions(poc_source)
    compile_report = toolchain.compile(sandbox)
    test_report = None
    if compile_report.success:
        test_report = toolchain.run_tests(sandbox, match_path=run.task.poc_output_path)
    outcome = classify_well_formedness(run, compile_report, test_report, assertion_count)
    return outcome, compile_report, test_report


def execute_finding(
    finding: FindingRecord,
    *,
    strategy: str,
    model_id: str,
    gateway: Gateway,
    toolchain: Toolchain,
    output_dir: Path,
    run_id: str,
    budget: Budget | None = None,
    annotation_level: str | None = None,
    deterministic: bool = False,
    temperature: float = 0.0,
    seed: int = 1615315,
    resume: bool = True,
    executor=None,
) -> FindingOutcome:
    """Run one (finding, strategy, model) unit end to end and persist artifacts."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    budget = budget or Budget()
    unit_dir = artifact_dir(output_dir, run_id, finding.id, strategy, model_id)

    if resume and is_completed(unit_dir):
        logger.info("%s: already completed, skipping", unit_dir)
        run = RunRecord.load(unit_dir)
        rq1 = WellFormednessOutcome(**loads((unit_dir / RQ1_FILENAME).read_text()))
        return FindingOutcome(finding.id, strategy, model_id, unit_dir, run, rq1, None, None, skipped=True)
    if unit_dir.exists():
        shutil.rmtree(unit_dir)  # incomplete leftovers from an interrupted run
    unit_dir.mkdir(parents=True)

    clock: Clock = TickClock() if deterministic else SystemClock()
    workspace_dir = unit_dir / "workspace"
    prepared = prepare_workspace(
        finding, workspace_dir, toolchain,
        sandbox_factory=lambda spec: Sandbox(spec, executor=executor, clock=clock),
    )
    sandbox = Sandbox(prepared.spec, executor=executor, clock=clock)

    annotation_text = select_annotation_text(finding, annotation_level)
    annotation_file = workspace_dir / ANNOTATION_REL_PATH
    annotation_file.parent.mkdir(parents=True, exist_ok=True)
    annotation_file.write_text(annotation_text)

    task = AgentTask(
        vulnerable_contract_path=finding.contract_path,
        annotation_path=ANNOTATION_REL_PATH,
        poc_output_path=finding.poc_path,
        workspace=prepared.spec,
        model_id=model_id,
    )
    trajectory_path = unit_dir / TRAJECTORY_FILENAME

    if strategy == "agent":
        run = run_agent(
            task, budget, gateway, sandbox,
            toolchain=toolchain, clock=clock, trajectory_path=trajectory_path,
            temperature=temperature, seed=seed,
        )
    elif strategy == "prompting":
        run = run_prompting(
            task, gateway, clock=clock, trajectory_path=trajectory_path,
            temperature=temperature, seed=seed,
        )
    else:
        run = run_workflow(
            task, gateway, sandbox, budget=budget,
            toolchain=toolchain, clock=clock, trajectory_path=trajectory_path,
            temperature=temperature, seed=seed,
        )

    rq1, compile_report, test_report = evaluate_rq1(run, toolchain, sandbox)

    if run.produced_poc is not None:
        shutil.copyfile(task.poc_absolute_path, unit_dir / POC_ARTIFACT_NAME)
    (unit_dir / RQ1_FILENAME).write_text(canonical_dumps(rq1.to_json()) + "\n")
    (unit_dir / "meta.json").write_text(
        canonical_dumps(
            {
                "finding_id": finding.id,
                "strategy": strategy,
                "model_id": model_id,
                "run_id": run_id,
                "annotation_level": annotation_level,
            }
        )
        + "\n"
    )
    run.save(unit_dir)
    return FindingOutcome(finding.id, strategy, model_id, unit_dir, run, rq1, compile_report, test_report)


def validate_unit(
    unit_dir: Path,
    finding: FindingRecord,
    *,
    toolchain: Toolchain,
) -> ValidationOutcome | None:
    """RQ2 for one completed unit; None when the RQ1 verdict is not WellFormed."""
    rq1 = loads((unit_dir / RQ1_FILENAME).read_text())
    if rq1["verdict"] != "WellFormed":
        return None
    poc_file = unit_dir / POC_ARTIFACT_NAME
    if not poc_file.is_file():
        raise FileNotFoundError(f"{unit_dir}: WellFormed unit is missing {POC_ARTIFACT_NAME}")
    outcome = validate_against_patch(
        poc_file,
        finding.poc_path,
        finding,
        toolchain=toolchain,
        scratch_dir=unit_dir / "validation",
    )
    (unit_dir / RQ2_FILENAME).write_text(canonical_dumps(outcome.to_json()) + "\n")
    return outcome
