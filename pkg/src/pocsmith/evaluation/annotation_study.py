"""Annotation-detail study: one full generate-then-validate pipeline per
available detail level, identical configuration otherwise."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from pocsmith.agent.task import Budget
from pocsmith.dataset.manifest import ANNOTATION_LEVELS, FindingRecord
from pocsmith.dataset.scrub import derive_annotation_levels
from pocsmith.evaluation.patch_oracle import ValidationOutcome
from pocsmith.evaluation.wellformed import WellFormednessOutcome
from pocsmith.gateway.backends import Gateway
from pocsmith.pipeline import execute_finding, validate_unit
from pocsmith.sandbox.toolchain import Toolchain


@dataclass
class LevelOutcome:
    level: str
    absent: bool = False
    rq1: WellFormednessOutcome | None = None
    rq2: ValidationOutcome | None = None
    unit_dir: Path | None = None


def run_annotation_study(
    finding: FindingRecord,
    levels: tuple[str, ...],
    *,
    strategy: str,
    model_id: str,
    gateway_factory,
    toolchain: Toolchain,
    output_dir: Path,
    run_id: str,
    budget: Budget | None = None,
    deterministic: bool = False,
) -> dict[str, LevelOutcome]:
    """Fan one finding out over the requested annotation levels.

    Levels the finding does not provide are skipped and marked absent.
    gateway_factory is called once per level so scripted gateways start
    fresh for each run.
    """
    if not levels:
        raise ValueError("no annotation levels requested")
    available = derive_annotation_levels(finding.annotation)
    outcomes: dict[str, LevelOutcome] = {}
    for level in levels:
        if level not in ANNOTATION_LEVELS:
            raise ValueError(f"unknown annotation level {level!r}")
        if level not in available:
            outcomes[level] = LevelOutcome(level=level, absent=True)
            continue
        gateway: Gateway = gateway_factory()
        result = execute_finding(
            finding,
            strategy=strategy,
            model_id=model_id,
            gateway=gateway,
            toolchain=toolchain,
            output_dir=output_dir,
            run_id=f"{run_id}-{level}",
            budget=budget,
            annotation_level=level,
            deterministic=deterministic,
        )
        rq2 = None
        if result.rq1.verdict == "WellFormed":
            rq2 = validate_unit(result.unit_dir, finding, toolchain=toolchain)
        outcomes[level] = LevelOutcome(
            level=level, rq1=result.rq1, rq2=rq2, unit_dir=result.unit_dir
        )
    return outcomes
