"""Sandbox tests: containment, guardrails, fs tools, todo tool."""

from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from pocsmith.sandbox.executor import Sandbox, guardrail_check
from pocsmith.sandbox.fstools import EditError, fs_edit, fs_read, fs_search, fs_write
from pocsmith.sandbox.paths import PathEscapeError, resolve_in_workspace
from pocsmith.sandbox.todo import (
    TodoError,
    TodoList,
    todo_append,
    todo_render,
    todo_set_state,
)
from pocsmith.sandbox.types import SandboxSpec


@pytest.fixture()
def spec(tmp_path) -> SandboxSpec:
    (tmp_path / "src").mkdir()
    (tmp_path / "test").mkdir()
    (tmp_path / "src" / "Pool.sol").write_text("contract Pool { function flashFee() external {} }\n")
    (tmp_path / "src" / "Token.sol").write_text("contract Token {}\n")
    (tmp_path / "test" / "Pool.t.sol").write_text("contract PoolTest {}\n")
    (tmp_path / "test" / "Other.t.sol").write_text("contract OtherTest {}\n")
    return SandboxSpec(workspace_root=tmp_path)


# --- containment -------------------------------------------------------------


class TestContainment:
    def test_relative_path_resolves(self, spec):
        resolved = resolve_in_workspace(spec.workspace_root, "src/Pool.sol")
        assert resolved.name == "Pool.sol"

    def test_dotdot_escape_rejected(self, spec):
        with pytest.raises(PathEscapeError):
            resolve_in_workspace(spec.workspace_root, "../..")

    def test_absolute_outside_rejected(self, spec):
        with pytest.raises(PathEscapeError):
            resolve_in_workspace(spec.workspace_root, "/etc/passwd")

    def test_absolute_inside_allowed(self, spec):
        inside = spec.workspace_root / "src" / "Pool.sol"
        assert resolve_in_workspace(spec.workspace_root, inside) == inside.resolve()

    def test_symlink_pointing_outside_rejected(self, spec, tmp_path_factory):
        outside = tmp_path_factory.mktemp("outside")
        (outside / "secret.txt").write_text("s")
        link = spec.workspace_root / "sneaky"
        os.symlink(outside, link)
        with pytest.raises(PathEscapeError):
            resolve_in_workspace(spec.workspace_root, "sneaky/secret.txt")

    @settings(max_examples=200, suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(
        segments=st.lists(
            st.sampled_from(["..", ".", "src", "test", "x", "..\\..", "%2e%2e", "~"]),
            min_size=1,
            max_size=8,
        )
    )
    def test_no_adversarial_path_escapes(self, spec, segments):
        # The fixture is read-only here, so reuse across examples is safe.
        candidate = "/".join(segments)
        try:
            resolved = resolve_in_workspace(spec.workspace_root, candidate)
        except PathEscapeError:
            return
        root = spec.workspace_root.resolve()
        assert resolved == root or root in resolved.parents


# --- guardrails ----------------------------------------------------------------


class TestGuardrails:
    def test_forge_test_allowed(self, spec):
        assert guardrail_check(["forge", "test"], spec).allowed

    def test_forge_build_allowed(self, spec):
        assert guardrail_check(["forge", "build"], spec).allowed

    def test_cast_send_denied(self, spec):
        verdict = guardrail_check(["cast", "send", "0xabc", "--value", "1"], spec)
        assert not verdict.allowed
        assert "allowlist" in verdict.reason

    def test_transaction_flags_denied_even_for_forge(self, spec):
        for flag in ("--broadcast", "--rpc-url", "--fork-url"):
            verdict = guardrail_check(["forge", "script", flag], spec)
            assert not verdict.allowed, flag

    def test_rpc_url_with_value_denied(self, spec):
        verdict = guardrail_check(["forge", "test", "--rpc-url=https://mainnet"], spec)
        assert not verdict.allowed

    def test_host_content_access_denied(self, tmp_path):
        spec = SandboxSpec(workspace_root=tmp_path, allowed_commands=frozenset({"cat"}))
        verdict = guardrail_check(["cat", "/etc/passwd"], spec)
        assert not verdict.allowed
        assert "host content" in verdict.reason

    def test_workspace_path_argument_allowed(self, spec):
        inside = str(spec.workspace_root / "src" / "Pool.sol")
        spec2 = SandboxSpec(workspace_root=spec.workspace_root, allowed_commands=frozenset({"cat"}))
        assert guardrail_check(["cat", inside], spec2).allowed

    def test_allowlist_cannot_contain_cast(self, tmp_path):
        with pytest.raises(ValueError):
            SandboxSpec(workspace_root=tmp_path, allowed_commands=frozenset({"forge", "cast"}))

    def test_network_never_enabled(self, tmp_path):
        with pytest.raises(ValueError):
            SandboxSpec(workspace_root=tmp_path, network_enabled=True)


class TestSandboxExecution:
    def test_result_has_positive_duration(self, spec):
        sandbox = Sandbox(
            SandboxSpec(workspace_root=spec.workspace_root, allowed_commands=frozenset({"true"}))
        )
        result = sandbox.execute(["true"], tool_name="probe")
        assert result.status == "ok"
        assert result.duration_ms >= 1

    def test_failed_command_status(self, spec):
        sandbox = Sandbox(
            SandboxSpec(workspace_root=spec.workspace_root, allowed_commands=frozenset({"false"}))
        )
        result = sandbox.execute(["false"], tool_name="probe")
        assert result.status == "failed"
        assert result.exit_code != 0


# --- fs tools --------------------------------------------------------------------


class TestFsSearch:
    def test_glob_sorted(self, spec):
        matches = fs_search(spec, "**/*.t.sol", mode="glob")
        assert [m.path for m in matches] == ["test/Other.t.sol", "test/Pool.t.sol"]

    def test_glob_empty_when_nothing_matches(self, spec):
        assert fs_search(spec, "**/*.rs", mode="glob") == []

    def test_grep_finds_line(self, spec):
        matches = fs_search(spec, "flashFee", mode="grep")
        assert len(matches) == 1
        assert matches[0].path == "src/Pool.sol"
        assert matches[0].line == 1
        assert "flashFee" in matches[0].excerpt

    def test_grep_deterministic_order(self, spec):
        first = fs_search(spec, "contract", mode="grep")
        second = fs_search(spec, "contract", mode="grep")
        assert first == second
        assert [m.path for m in first] == sorted(m.path for m in first)

    def test_escape_root_rejected(self, spec):
        with pytest.raises(PathEscapeError):
            fs_search(spec, "*", root="../..", mode="glob")

    def test_invalid_regex_rejected(self, spec):
        with pytest.raises(ValueError):
            fs_search(spec, "([", mode="grep")


class TestFsReadWriteEdit:
    def test_write_read_round_trip(self, spec):
        content = "contract Exploit {}\n// bytes éÿ\n"
        fs_write(spec, "test/exploit/New.t.sol", content)
        assert fs_read(spec, "test/exploit/New.t.sol") == content

    def test_read_missing_file(self, spec):
        with pytest.raises(FileNotFoundError):
            fs_read(spec, "nope.sol")

    def test_edit_replaces_single_occurrence(self, spec):
        fs_write(spec, "a.sol", "assertEq(x, y);\nother();\n")
        fs_edit(spec, "a.sol", "assertEq", "assertGt")
        text = fs_read(spec, "a.sol")
        assert text.count("assertGt") == 1
        assert "assertEq" not in text

    def test_edit_ambiguous_fragment_leaves_file_unchanged(self, spec):
        original = "x = 1;\nx = 1;\n"
        fs_write(spec, "b.sol", original)
        with pytest.raises(EditError):
            fs_edit(spec, "b.sol", "x = 1;", "x = 2;")
        assert fs_read(spec, "b.sol") == original

    def test_edit_missing_fragment_errors(self, spec):
        fs_write(spec, "c.sol", "nothing here\n")
        with pytest.raises(EditError):
            fs_edit(spec, "c.sol", "absent", "replacement")

    def test_write_outside_workspace_rejected(self, spec):
        with pytest.raises(PathEscapeError):
            fs_write(spec, "../evil.sol", "x")


# --- todo tool ----------------------------------------------------------------------


class TestTodo:
    def test_append_and_mark_in_progress(self):
        todo = TodoList()
        for text in ("read annotation", "write PoC", "run tests"):
            todo = todo_append(todo, text)
        todo = todo_set_state(todo, 1, "in_progress")
        states = [e.state for e in todo.entries]
        assert states == ["pending", "in_progress", "pending"]

    def test_second_in_progress_rejected(self):
        todo = todo_append(todo_append(TodoList(), "a"), "b")
        todo = todo_set_state(todo, 1, "in_progress")
        with pytest.raises(TodoError):
            todo_set_state(todo, 0, "in_progress")

    def test_done_transition_clears_active(self):
        todo = todo_append(TodoList(), "a")
        todo = todo_set_state(todo, 0, "in_progress")
        todo = todo_set_state(todo, 0, "done")
        assert sum(1 for e in todo.entries if e.state == "in_progress") == 0

    def test_render_stable(self):
        todo = todo_append(todo_append(TodoList(), "a"), "b")
        assert todo_render(todo) == todo_render(todo)
        assert todo_render(todo) == "[ ] 1. a\n[ ] 2. b"

    def test_unknown_index_rejected(self):
        with pytest.raises(TodoError):
            todo_set_state(TodoList(), 0, "done")
