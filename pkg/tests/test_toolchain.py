"""Builtin solc+EVM toolchain tests against the toy fixture project."""

from __future__ import annotations

import shutil

import pytest

from conftest import FIXTURES
from pocsmith.sandbox.executor import Sandbox, ToolchainMissingError
from pocsmith.sandbox.toolchain import detect_toolchain
from pocsmith.sandbox.types import SandboxSpec


@pytest.fixture()
def project(tmp_path):
    dest = tmp_path / "ws"
    shutil.copytree(FIXTURES / "toy_project", dest)
    return dest


def test_detect_prefers_forge_else_builtin():
    toolchain = detect_toolchain("auto")
    expected = "forge" if shutil.which("forge") else "builtin-evm"
    assert toolchain.name == expected


class TestBuiltinCompile:
    def test_toy_project_compiles(self, project, builtin_toolchain):
        report = builtin_toolchain.compile(Sandbox(SandboxSpec(workspace_root=project)))
        assert report.success is True
        assert report.errors == ()
        assert report.raw.duration_ms >= 1

    def test_invalid_hex_literal_yields_real_solc_code(self, project, builtin_toolchain):
        poc_dir = project / "test" / "exploit"
        poc_dir.mkdir(parents=True)
        (poc_dir / "ExploitTest.t.sol").write_text(
            "// SPDX-License-Identifier: MIT\n"
            "pragma solidity ^0.8.13;\n"
            "contract ExploitTest {\n"
            "    address internal attacker = address(0xEvil);\n"
            "}\n"
        )
        report = builtin_toolchain.compile(Sandbox(SandboxSpec(workspace_root=project)))
        assert report.success is False
        assert any(d.code == "8936" for d in report.errors)

    def test_empty_workspace_is_environment_error(self, tmp_path, builtin_toolchain):
        with pytest.raises(ToolchainMissingError):
            builtin_toolchain.compile(Sandbox(SandboxSpec(workspace_root=tmp_path)))


class TestBuiltinTests:
    def test_project_suite_passes(self, project, builtin_toolchain):
        report = builtin_toolchain.run_tests(Sandbox(SandboxSpec(workspace_root=project)))
        assert report.compiled is True
        assert report.failed_count == 0
        assert any(t.name == "test_poolHoldsLiquidity()" for t in report.tests)

    def test_poc_passes_on_vulnerable_code(self, project, builtin_toolchain):
        poc_dir = project / "test" / "exploit"
        poc_dir.mkdir(parents=True)
        (poc_dir / "ExploitTest.t.sol").write_text((FIXTURES / "pocs" / "genuine.t.sol").read_text())
        report = builtin_toolchain.run_tests(
            Sandbox(SandboxSpec(workspace_root=project)),
            match_path="test/exploit/ExploitTest.t.sol",
        )
        assert report.compiled is True
        assert report.passed_count == 1
        assert report.failed_count == 0
        assert report.tests[0].gas and report.tests[0].gas > 0

    def test_filter_matching_nothing_yields_empty(self, project, builtin_toolchain):
        report = builtin_toolchain.run_tests(
            Sandbox(SandboxSpec(workspace_root=project)), match_path="test/NoSuch.t.sol"
        )
        assert report.compiled is True
        assert report.tests == ()

    def test_failing_assertion_reported_with_reason(self, project, builtin_toolchain):
        poc_dir = project / "test" / "exploit"
        poc_dir.mkdir(parents=True)
        (poc_dir / "ExploitTest.t.sol").write_text(
            "// SPDX-License-Identifier: MIT\n"
            "pragma solidity ^0.8.13;\n"
            "contract ExploitTest {\n"
            "    function test_alwaysFails() public pure {\n"
            "        revert(\"assertEq failed: 42 != 0\");\n"
            "    }\n"
            "}\n"
        )
        report = builtin_toolchain.run_tests(
            Sandbox(SandboxSpec(workspace_root=project)),
            match_path="test/exploit/ExploitTest.t.sol",
        )
        assert report.failed_count == 1
        assert "42 != 0" in report.tests[0].failure_reason

    def test_deterministic_output(self, project, builtin_toolchain):
        sandbox = Sandbox(SandboxSpec(workspace_root=project))
        first = builtin_toolchain.run_tests(sandbox)
        second = builtin_toolchain.run_tests(sandbox)
        assert first.raw.stdout == second.raw.stdout
        assert [t.to_json() for t in first.tests] == [t.to_json() for t in second.tests]
