"""CLI tests: dataset verify/prepare, run, validate, report."""

from __future__ import annotations

import json
import shutil

import pytest
from click.testing import CliRunner

from conftest import FIXTURES
from pocsmith.cli import main
from pocsmith.jsonutil import loads

TOY_MANIFEST = str(FIXTURES / "toy_manifest")
SCRIPT = str(FIXTURES / "scripts" / "agent_happy.json")


@pytest.fixture()
def runner():
    return CliRunner()


def _needs_node():
    if shutil.which("node") is None or shutil.which("npm") is None:
        pytest.skip("node/npm unavailable")


class TestDatasetCommands:
    def test_verify_toy_manifest_all_ready(self, runner, tmp_path):
        _needs_node()
        result = runner.invoke(
            main,
            ["dataset", "verify", "--manifest", TOY_MANIFEST, "--toolchain", "builtin-evm",
             "--dest", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        assert "900 | ready" in result.output
        assert "901 | ready" in result.output

    def test_verify_bad_commit_fails_that_row(self, runner, tmp_path):
        _needs_node()
        manifest_dir = tmp_path / "manifest"
        shutil.copytree(FIXTURES / "toy_manifest", manifest_dir)
        finding = json.loads((manifest_dir / "findings" / "900.json").read_text())
        finding["commit"] = "tree:" + "0" * 64
        (manifest_dir / "findings" / "900.json").write_text(json.dumps(finding))
        # Local template paths resolve relative to the manifest dir.
        shutil.copytree(FIXTURES / "toy_project", tmp_path / "toy_project")
        result = runner.invoke(
            main,
            ["dataset", "verify", "--manifest", str(manifest_dir), "--toolchain", "builtin-evm",
             "--dest", str(tmp_path / "scratch")],
        )
        assert result.exit_code == 1
        assert "900 | FAILED" in result.output
        assert "901 | ready" in result.output

    def test_prepare_twice_second_is_noop(self, runner, tmp_path):
        _needs_node()
        args = ["dataset", "prepare", "--manifest", TOY_MANIFEST, "--toolchain", "builtin-evm",
                "--dest", str(tmp_path), "900"]
        first = runner.invoke(main, args)
        assert first.exit_code == 0, first.output
        second = runner.invoke(main, args)
        assert second.exit_code == 0, second.output
        assert "skipping" in second.output

    def test_unknown_finding_id_is_immediate_error(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["dataset", "prepare", "--manifest", TOY_MANIFEST, "--dest", str(tmp_path), "nope"],
        )
        assert result.exit_code != 0
        assert "unknown finding ids" in result.output


class TestRunValidateReport:
    def _run(self, runner, tmp_path, extra=()):
        return runner.invoke(
            main,
            [
                "run",
                "--manifest", TOY_MANIFEST,
                "--strategy", "agent",
                "--model", "openai/o3",
                "--output-dir", str(tmp_path / "out"),
                "--run-id", "cli-test",
                "--toolchain", "builtin-evm",
                "--script", SCRIPT,
                "--deterministic",
                *extra,
                "900",
            ],
        )

    def test_scripted_agent_run_produces_artifacts(self, runner, tmp_path):
        _needs_node()
        result = self._run(runner, tmp_path)
        assert result.exit_code == 0, result.output
        assert "900: terminal=agent_claims_done rq1=WellFormed" in result.output
        unit = tmp_path / "out" / "cli-test" / "900" / "agent__openai-o3"
        assert (unit / "trajectory.jsonl").is_file()
        assert (unit / "run.json").is_file()
        assert (unit / "rq1.json").is_file()
        assert (unit / "poc.t.sol").is_file()

    def test_rerun_resumes_completed_findings(self, runner, tmp_path):
        _needs_node()
        assert self._run(runner, tmp_path).exit_code == 0
        second = self._run(runner, tmp_path)
        assert second.exit_code == 0
        assert "(resumed)" in second.output

    def test_validate_well_formed_run_yields_correct(self, runner, tmp_path):
        _needs_node()
        assert self._run(runner, tmp_path).exit_code == 0
        result = runner.invoke(
            main,
            ["validate", "--toolchain", "builtin-evm", str(tmp_path / "out" / "cli-test")],
        )
        assert result.exit_code == 0, result.output
        assert "900 [agent/openai/o3]: Correct" in result.output
        unit = tmp_path / "out" / "cli-test" / "900" / "agent__openai-o3"
        verdict = loads((unit / "rq2.json").read_text())
        assert verdict["verdict"] == "Correct"

    def test_report_renders_tables_and_csv(self, runner, tmp_path):
        _needs_node()
        assert self._run(runner, tmp_path).exit_code == 0
        result = runner.invoke(
            main,
            ["report", str(tmp_path / "out" / "cli-test"), "--csv", str(tmp_path / "r.csv"),
             "--json", str(tmp_path / "r.json")],
        )
        assert result.exit_code == 0, result.output
        assert "Total Well-formed" in result.output
        assert (tmp_path / "r.csv").read_text().count("\n") == 2  # header + one row
        payload = loads((tmp_path / "r.json").read_text())
        assert payload["rq1"]["agent/openai/o3"]["WellFormed"] == 1
        # 901 was not selected, so it must appear as a gap, not a zero.
        assert ["901", "agent", "openai/o3"] not in payload["gaps"]

    def test_report_on_empty_dir_fails(self, runner, tmp_path):
        (tmp_path / "empty").mkdir()
        result = runner.invoke(main, ["report", str(tmp_path / "empty")])
        assert result.exit_code == 1

    def test_parallel_run_over_both_findings(self, runner, tmp_path):
        _needs_node()
        result = runner.invoke(
            main,
            [
                "run",
                "--manifest", TOY_MANIFEST,
                "--strategy", "agent",
                "--model", "openai/o3",
                "--output-dir", str(tmp_path / "out"),
                "--run-id", "cli-par",
                "--toolchain", "builtin-evm",
                "--script", SCRIPT,
                "--deterministic",
                "--parallel", "2",
                "900", "901",
            ],
        )
        assert result.exit_code == 0, result.output
        for finding_id in ("900", "901"):
            unit = tmp_path / "out" / "cli-par" / finding_id / "agent__openai-o3"
            assert (unit / "rq1.json").is_file(), finding_id

    def test_prompting_strategy_has_no_tool_events_before_evaluation(self, runner, tmp_path):
        _needs_node()
        result = runner.invoke(
            main,
            [
                "run",
                "--manifest", TOY_MANIFEST,
                "--strategy", "prompting",
                "--model", "openai/o3",
                "--output-dir", str(tmp_path / "out"),
                "--run-id", "cli-prompting",
                "--toolchain", "builtin-evm",
                "--script", str(FIXTURES / "scripts" / "prompting_happy.json"),
                "900",
            ],
        )
        assert result.exit_code == 0, result.output
        unit = tmp_path / "out" / "cli-prompting" / "900" / "prompting__openai-o3"
        events = [loads(line) for line in (unit / "trajectory.jsonl").read_text().splitlines()]
        assert all(e["kind"] not in ("tool_call", "tool_result") for e in events)
        rq1 = loads((unit / "rq1.json").read_text())
        assert rq1["verdict"] == "WellFormed"
