"""Task description and run budgets."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Any

from pocsmith.sandbox.paths import resolve_in_workspace
from pocsmith.sandbox.types import SandboxSpec

FOUNDRY_TEST_SUFFIX = ".t.sol"

DEFAULT_MAX_COST_USD = Decimal("3.00")
DEFAULT_MAX_SC_TOOL_CALLS = 10


@dataclass(frozen=True)
class Budget:
    """Run caps: cumulative model cost and smart-contract tool invocations."""

    max_cost_usd: Decimal = DEFAULT_MAX_COST_USD
    max_sc_tool_calls: int = DEFAULT_MAX_SC_TOOL_CALLS

    def __post_init__(self) -> None:
        if self.max_cost_usd <= 0:
            raise ValueError("max_cost_usd must be strictly positive")
        if self.max_sc_tool_calls <= 0:
            raise ValueError("max_sc_tool_calls must be strictly positive")


@dataclass(frozen=True)
class AgentTask:
    """The three paths handed to the generator plus its execution environment.

    All paths are workspace-relative; the PoC output path must carry the
    Foundry test suffix so forge picks it up.
    """

    vulnerable_contract_path: str
    annotation_path: str
    poc_output_path: str
    workspace: SandboxSpec
    model_id: str

    def __post_init__(self) -> None:
        for path in (self.vulnerable_contract_path, self.annotation_path, self.poc_output_path):
            resolve_in_workspace(self.workspace.workspace_root, path)
        if not self.poc_output_path.endswith(FOUNDRY_TEST_SUFFIX):
            raise ValueError(f"poc_output_path must end with {FOUNDRY_TEST_SUFFIX}")

    @property
    def poc_absolute_path(self) -> Path:
        return resolve_in_workspace(self.workspace.workspace_root, self.poc_output_path)

    def to_json(self) -> dict[str, Any]:
        return {
            "vulnerable_contract_path": self.vulnerable_contract_path,
            "annotation_path": self.annotation_path,
            "poc_output_path": self.poc_output_path,
            "workspace_root": str(self.workspace.workspace_root),
            "model_id": self.model_id,
        }
