"""Operator CLI: prepare datasets, launch runs, validate PoCs, render reports.

Exit codes follow batch discipline: zero iff every requested unit
succeeded. Secrets come only from the environment, never flags, so run
artifacts stay shareable.
"""

from __future__ import annotations

import logging
import os
import shutil
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path

import click

from pocsmith.agent.task import Budget
from pocsmith.dataset.manifest import ANNOTATION_LEVELS, FindingRecord, load_manifest
from pocsmith.dataset.workspace import DatasetFaultError, prepare_workspace, tree_hash
from pocsmith.evaluation.report import (
    aggregate_levels,
    aggregate_rq1,
    aggregate_rq2,
    collect_rows,
    find_grid_gaps,
    render_rq1_table,
    render_rq2_table,
    render_rq3_table,
    write_csv,
)
from pocsmith.gateway.backends import HttpGateway, ScriptedGateway
from pocsmith.jsonutil import canonical_dumps, loads
from pocsmith.pipeline import execute_finding, validate_unit
from pocsmith.sandbox.executor import DockerExecutor
from pocsmith.sandbox.toolchain import detect_toolchain

logger = logging.getLogger(__name__)

CONFIG_FILENAME = "config.json"


@dataclass(frozen=True)
class RunConfig:
    """One batch's full configuration, persisted beside its artifacts."""

    strategy: str
    model_id: str
    budget: Budget
    manifest_path: Path
    output_dir: Path
    run_id: str
    annotation_level: str | None = None
    sandbox_image: str | None = None
    seed: int = 1615315
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if self.strategy not in ("agent", "prompting", "workflow"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        probe = Path(self.output_dir)
        probe.mkdir(parents=True, exist_ok=True)
        if not os.access(probe, os.W_OK):
            raise ValueError(f"output_dir {probe} is not writable")

    def to_json(self, finding_ids: list[str]) -> dict:
        return {
            "manifest": str(Path(self.manifest_path).resolve()),
            "strategy": self.strategy,
            "model_id": self.model_id,
            "run_id": self.run_id,
            "max_cost_usd": str(self.budget.max_cost_usd),
            # Prompting performs a single model call and never dispatches
            # smart-contract tools, so its tool-call cap is inert.
            "max_sc_tool_calls": self.budget.max_sc_tool_calls,
            "annotation_level": self.annotation_level,
            "sandbox_image": self.sandbox_image,
            "seed": self.seed,
            "temperature": self.temperature,
            "finding_ids": finding_ids,
        }


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _load_findings(manifest: str, selection: tuple[str, ...]) -> list[FindingRecord]:
    records = load_manifest(manifest)
    if not selection:
        return records
    by_id = {r.id: r for r in records}
    unknown = [fid for fid in selection if fid not in by_id]
    if unknown:
        raise click.UsageError(f"unknown finding ids: {', '.join(unknown)}")
    return [by_id[fid] for fid in selection]


# --- dataset ---------------------------------------------------------------

@main.group()
def dataset() -> None:
    """Prepare and verify finding workspaces."""


@dataset.command("prepare")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--dest", required=True, type=click.Path())
@click.option("--toolchain", "toolchain_pref", default="auto", type=click.Choice(["auto", "forge", "builtin-evm"]))
@click.argument("finding_ids", nargs=-1)
def dataset_prepare(manifest: str, dest: str, toolchain_pref: str, finding_ids: tuple[str, ...]) -> None:
    """Materialize pinned workspaces; a second run is a no-op via content check."""
    toolchain = detect_toolchain(toolchain_pref)
    failures = 0
    for finding in _load_findings(manifest, finding_ids):
        target = Path(dest) / finding.id
        lock = target.parent / f"{target.name}.lock.json"
        if target.is_dir() and lock.is_file():
            recorded = loads(lock.read_text())
            if recorded.get("tree_hash") == tree_hash(target):
                click.echo(f"{finding.id}: already prepared (content match), skipping")
                continue
            shutil.rmtree(target)
        try:
            prepared = prepare_workspace(finding, target, toolchain)
        except DatasetFaultError as exc:
            click.echo(f"{finding.id}: FAILED: {exc}", err=True)
            failures += 1
            continue
        click.echo(f"{finding.id}: prepared at {target} (tree {prepared.tree_hash[:12]})")
    sys.exit(1 if failures else 0)


@dataset.command("verify")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--dest", default=None, type=click.Path(), help="Scratch dir (default: temporary).")
@click.option("--toolchain", "toolchain_pref", default="auto", type=click.Choice(["auto", "forge", "builtin-evm"]))
@click.argument("finding_ids", nargs=-1)
def dataset_verify(manifest: str, dest: str | None, toolchain_pref: str, finding_ids: tuple[str, ...]) -> None:
    """Check pinning and baseline compile for every record; print a readiness table."""
    import tempfile

    toolchain = detect_toolchain(toolchain_pref)
    findings = _load_findings(manifest, finding_ids)
    failures = 0
    with tempfile.TemporaryDirectory() as scratch:
        base = Path(dest) if dest else Path(scratch)
        click.echo("finding | status | detail")
        click.echo("--- | --- | ---")
        for finding in findings:
            target = base / f"verify-{finding.id}"
            if target.exists():
                shutil.rmtree(target)
            try:
                prepared = prepare_workspace(finding, target, toolchain)
            except DatasetFaultError as exc:
                click.echo(f"{finding.id} | FAILED | {exc}")
                failures += 1
                continue
            click.echo(f"{finding.id} | ready | tree {prepared.tree_hash[:12]}")
    sys.exit(1 if failures else 0)


# --- run --------------------------------------------------------------------

@main.command("run")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--strategy", required=True, type=click.Choice(["agent", "prompting", "workflow"]))
@click.option("--model", "model_id", required=True)
@click.option("--output-dir", required=True, type=click.Path())
@click.option("--run-id", default=None, help="Defaults to <strategy>-<model>; stable for resumability.")
@click.option("--max-cost-usd", default="3.00", show_default=True)
@click.option("--max-sc-tool-calls", default=10, show_default=True)
@click.option("--annotation-level", default=None, type=click.Choice(list(ANNOTATION_LEVELS)))
@click.option("--parallel", default=1, show_default=True)
@click.option("--sandbox-image", default=None, help="Run smart-contract tools in this Docker image.")
@click.option("--seed", default=1615315, show_default=True)
@click.option("--temperature", default=0.0, show_default=True)
@click.option("--toolchain", "toolchain_pref", default="auto", type=click.Choice(["auto", "forge", "builtin-evm"]))
@click.option("--script", "script_path", default=None, type=click.Path(exists=True),
              help="Drive the run with a scripted gateway instead of the live API.")
@click.option("--deterministic", is_flag=True, help="Logical clock; byte-identical trajectories.")
@click.argument("finding_ids", nargs=-1)
def cmd_run(
    manifest: str,
    strategy: str,
    model_id: str,
    output_dir: str,
    run_id: str | None,
    max_cost_usd: str,
    max_sc_tool_calls: int,
    annotation_level: str | None,
    parallel: int,
    sandbox_image: str | None,
    seed: int,
    temperature: float,
    toolchain_pref: str,
    script_path: str | None,
    deterministic: bool,
    finding_ids: tuple[str, ...],
) -> None:
    """Generate PoCs for the selected findings; resumable per finding."""
    from pocsmith.pipeline import sanitize_model_id

    findings = _load_findings(manifest, finding_ids)
    toolchain = detect_toolchain(toolchain_pref)
    if hasattr(toolchain, "ensure_installed"):
        toolchain.ensure_installed()  # once, before any worker threads race on it
    config = RunConfig(
        strategy=strategy,
        model_id=model_id,
        budget=Budget(max_cost_usd=Decimal(max_cost_usd), max_sc_tool_calls=max_sc_tool_calls),
        manifest_path=Path(manifest),
        output_dir=Path(output_dir),
        run_id=run_id or f"{strategy}-{sanitize_model_id(model_id)}",
        annotation_level=annotation_level,
        sandbox_image=sandbox_image,
        seed=seed,
        temperature=temperature,
    )
    run_id = config.run_id
    budget = config.budget
    executor = DockerExecutor(sandbox_image) if sandbox_image else None

    run_root = Path(output_dir) / run_id
    run_root.mkdir(parents=True, exist_ok=True)
    (run_root / CONFIG_FILENAME).write_text(
        canonical_dumps(config.to_json([f.id for f in findings])) + "\n"
    )

    def gateway_for_finding():
        if script_path:
            return ScriptedGateway.from_file(script_path)
        return HttpGateway()

    failures = 0

    def run_one(finding: FindingRecord) -> str:
        outcome = execute_finding(
            finding,
            strategy=strategy,
            model_id=model_id,
            gateway=gateway_for_finding(),
            toolchain=toolchain,
            output_dir=Path(output_dir),
            run_id=run_id,
            budget=budget,
            annotation_level=annotation_level,
            deterministic=deterministic,
            temperature=temperature,
            seed=seed,
            executor=executor,
        )
        suffix = " (resumed)" if outcome.skipped else ""
        return f"{finding.id}: terminal={outcome.run.terminal} rq1={outcome.rq1.verdict}{suffix}"

    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            futures = {pool.submit(run_one, f): f for f in findings}
            for future, finding in futures.items():
                try:
                    click.echo(future.result())
                except Exception as exc:  # per-finding errors never kill the batch
                    logger.exception("finding %s failed", finding.id)
                    click.echo(f"{finding.id}: ERROR: {exc}", err=True)
                    failures += 1
    else:
        for finding in findings:
            try:
                click.echo(run_one(finding))
            except Exception as exc:
                logger.exception("finding %s failed", finding.id)
                click.echo(f"{finding.id}: ERROR: {exc}", err=True)
                failures += 1
    sys.exit(1 if failures else 0)


# --- validate ----------------------------------------------------------------

@main.command("validate")
@click.option("--manifest", default=None, type=click.Path(exists=True),
              help="Override the manifest recorded in the run config.")
@click.option("--toolchain", "toolchain_pref", default="auto", type=click.Choice(["auto", "forge", "builtin-evm"]))
@click.argument("run_dir", type=click.Path(exists=True))
def cmd_validate(manifest: str | None, toolchain_pref: str, run_dir: str) -> None:
    """Validate every well-formed PoC in a run directory against its patch."""
    run_root = Path(run_dir)
    config_path = run_root / CONFIG_FILENAME
    if manifest is None:
        if not config_path.is_file():
            raise click.UsageError(f"{run_root} has no {CONFIG_FILENAME}; pass --manifest")
        manifest = loads(config_path.read_text())["manifest"]
    records = {r.id: r for r in load_manifest(manifest)}
    toolchain = detect_toolchain(toolchain_pref)

    failures = 0
    units = sorted(run_root.glob("*/*/meta.json"))
    if not units:
        click.echo(f"no completed units under {run_root}", err=True)
        sys.exit(1)
    for meta_path in units:
        unit_dir = meta_path.parent
        meta = loads(meta_path.read_text())
        finding = records.get(meta["finding_id"])
        if finding is None:
            click.echo(f"{unit_dir}: finding {meta['finding_id']} not in manifest", err=True)
            failures += 1
            continue
        try:
            outcome = validate_unit(unit_dir, finding, toolchain=toolchain)
        except (DatasetFaultError, FileNotFoundError) as exc:
            click.echo(f"{meta['finding_id']}: ERROR: {exc}", err=True)
            failures += 1
            continue
        verdict = outcome.verdict if outcome else "(not well-formed, skipped)"
        click.echo(f"{meta['finding_id']} [{meta['strategy']}/{meta['model_id']}]: {verdict}")
    sys.exit(1 if failures else 0)


# --- report -------------------------------------------------------------------

@main.command("report")
@click.option("--csv", "csv_path", default=None, type=click.Path())
@click.option("--json", "json_path", default=None, type=click.Path())
@click.argument("run_dirs", nargs=-1, required=True, type=click.Path(exists=True))
def cmd_report(csv_path: str | None, json_path: str | None, run_dirs: tuple[str, ...]) -> None:
    """Merge run directories into result tables (rendered, CSV, JSON)."""
    rows = collect_rows(Path(d) for d in run_dirs)
    if not rows:
        click.echo("no completed units found", err=True)
        sys.exit(1)

    gaps = []
    for run_dir in run_dirs:
        config_path = Path(run_dir) / CONFIG_FILENAME
        if config_path.is_file():
            config = loads(config_path.read_text())
            gaps.extend(
                find_grid_gaps(
                    rows, config["finding_ids"], [config["strategy"]], [config["model_id"]]
                )
            )

    click.echo("## Well-formedness (RQ1 shape)\n")
    click.echo(render_rq1_table(rows))
    click.echo("\n## Patch-oracle validation (RQ2 shape)\n")
    click.echo(render_rq2_table(rows))
    if any(row.annotation_level for row in rows):
        click.echo("\n## Annotation-level study (RQ3 shape)\n")
        click.echo(render_rq3_table([r for r in rows if r.annotation_level]))
    if gaps:
        click.echo("\n## Grid gaps (missing runs, not zero-filled)\n")
        for finding_id, strategy, model in gaps:
            click.echo(f"- {finding_id} / {strategy} / {model}")

    if csv_path:
        write_csv(rows, Path(csv_path))
        click.echo(f"\nCSV written to {csv_path}")
    if json_path:
        payload = {
            "rq1": {f"{s}/{m}": dict(c) for (s, m), c in aggregate_rq1(rows).items()},
            "rq2": {f"{s}/{m}": dict(c) for (s, m), c in aggregate_rq2(rows).items()},
            "rq3": {level: dict(c) for level, c in aggregate_levels(rows).items()},
            "gaps": [list(g) for g in gaps],
        }
        Path(json_path).write_text(canonical_dumps(payload) + "\n")
        click.echo(f"JSON written to {json_path}")
    sys.exit(0)


if __name__ == "__main__":
    main()
