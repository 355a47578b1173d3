"""Prompt assembly from plain-text templates with positional placeholders."""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

from pocsmith.agent.task import AgentTask

REQUIRED_SECTIONS = (
    "PoC Explainability",
    "Vulnerability Analysis",
    "Testing Framework Guidelines",
    "PoC Executability",
    "Iterative Refinement",
    "Exploit Soundness",
    "Exploit Quality",
)

_PLACEHOLDER = re.compile(r"\$(\d+)")


class PromptTemplateError(ValueError):
    """The template is missing a required section or has wrong placeholder arity."""


def _load_template(name: str, override: str | Path | None) -> str:
    if override is not None:
        return Path(override).read_text()
    return resources.files("pocsmith").joinpath(f"templates/{name}").read_text()


def assemble_system_prompt(template_path: str | Path | None = None) -> str:
    """Load the system prompt and verify all seven guideline sections exist."""
    text = _load_template("system_prompt.txt", template_path)
    for section in REQUIRED_SECTIONS:
        if section not in text:
            raise PromptTemplateError(f"system prompt template is missing section: {section}")
    return text


def assemble_task_prompt(task: AgentTask, template_path: str | Path | None = None) -> str:
    """Fill the task template: $1 vulnerable contract, $2 annotation, $3 PoC output."""
    text = _load_template("task_prompt.txt", template_path)
    found = {int(n) for n in _PLACEHOLDER.findall(text)}
    if found != {1, 2, 3}:
        raise PromptTemplateError(
            f"task template must use placeholders $1, $2, $3 exactly; found {sorted(found)}"
        )
    substitutions = {
        "1": task.vulnerable_contract_path,
        "2": task.annotation_path,
        "3": task.poc_output_path,
    }
    filled = _PLACEHOLDER.sub(lambda m: substitutions[m.group(1)], text)
    if _PLACEHOLDER.search(filled):
        raise PromptTemplateError("unresolved placeholder after substitution")
    return filled
