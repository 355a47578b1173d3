"""LLM-as-judge scoring of raw findings for dataset prioritization."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from pocsmith.gateway.backends import Gateway
from pocsmith.gateway.messages import ChatMessage

logger = logging.getLogger(__name__)

QUALITY_ORDER = ("bad", "fair", "good", "excellent")

_ANSWER_LINE = {
    "has_patch": re.compile(r"^\s*PATCH\s*:\s*(yes|no)\s*$", re.IGNORECASE | re.MULTILINE),
    "has_poc": re.compile(r"^\s*POC\s*:\s*(yes|no)\s*$", re.IGNORECASE | re.MULTILINE),
    "has_mitigation": re.compile(r"^\s*MITIGATION\s*:\s*(yes|no)\s*$", re.IGNORECASE | re.MULTILINE),
    "quality": re.compile(r"^\s*QUALITY\s*:\s*(bad|fair|good|excellent)\s*$", re.IGNORECASE | re.MULTILINE),
}


@dataclass(frozen=True)
class JudgeVerdict:
    has_patch: bool
    has_poc: bool
    has_mitigation: bool
    quality: str
    parse_failed: bool = False

    def __post_init__(self) -> None:
        if self.quality not in QUALITY_ORDER:
            raise ValueError(f"quality must be one of {QUALITY_ORDER}")


def rank_key(verdict: JudgeVerdict) -> tuple[int, bool, bool, bool]:
    """Sort key: higher tuples are better findings."""
    return (QUALITY_ORDER.index(verdict.quality), verdict.has_patch, verdict.has_poc, verdict.has_mitigation)


def rank_findings(verdicts: dict[str, JudgeVerdict]) -> list[str]:
    """Finding ids ordered best-first; id breaks ties deterministically."""
    return sorted(verdicts, key=lambda fid: (rank_key(verdicts[fid]), fid), reverse=True)


def parse_judge_response(text: str) -> JudgeVerdict | None:
    values = {}
    for field, pattern in _ANSWER_LINE.items():
        match = pattern.search(text)
        if not match:
            return None
        values[field] = match.group(1).lower()
    return JudgeVerdict(
        has_patch=values["has_patch"] == "yes",
        has_poc=values["has_poc"] == "yes",
        has_mitigation=values["has_mitigation"] == "yes",
        quality=values["quality"],
    )


def _judge_prompt(raw_finding_text: str, template_path: str | Path | None) -> str:
    if template_path is not None:
        template = Path(template_path).read_text()
    else:
        template = resources.files("pocsmith").joinpath("templates/judge_prompt.txt").read_text()
    return template.replace("$1", raw_finding_text)


def judge_finding(
    raw_finding_text: str,
    gateway: Gateway,
    model_id: str,
    *,
    template_path: str | Path | None = None,
    temperature: float = 0.0,
    seed: int = 1615315,
) -> JudgeVerdict:
    """Score one finding; an unparseable response is retried once, then
    marked quality=bad with the parse flag set."""
    prompt = _judge_prompt(raw_finding_text, template_path)
    conversation = [ChatMessage.user(prompt)]
    for attempt in (1, 2):
        message, _usage = gateway.complete(
            conversation, model_id, temperature=temperature, seed=seed, available_tools=()
        )
        verdict = parse_judge_response(message.content)
        if verdict is not None:
            return verdict
        logger.warning("judge response unparseable (attempt %d)", attempt)
        conversation = [
            ChatMessage.user(prompt + "\n\nYour previous answer did not follow the format. "
                                      "Answer with exactly the four lines."),
        ]
    return JudgeVerdict(has_patch=False, has_poc=False, has_mitigation=False, quality="bad", parse_failed=True)
