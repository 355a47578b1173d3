"""Annotation scrubbing and detail-level derivation.

Audit findings often embed a ready-made PoC; the code must not leak into
the annotation the generator sees. Fenced blocks that look like test code
are moved to reference_poc; prose, inline identifiers, and short
illustrative snippets stay.
"""

from __future__ import annotations

import re

from pocsmith.dataset.manifest import ANNOTATION_LEVELS, AnnotationBundle

_FENCED_BLOCK = re.compile(r"```[a-zA-Z0-9_+-]*\n(.*?)```\n?", re.DOTALL)
# A block counts as a PoC when it declares a test contract or test function.
_POC_SHAPED = re.compile(
    r"contract\s+\w*Test\w*\b|function\s+test\w*\s*\(|forge-std/Test\.sol", re.IGNORECASE
)
_SCRUB_MARKER = "(reference PoC excluded from annotation)"


def scrub_annotation(raw_finding_text: str) -> AnnotationBundle:
    """Split a raw finding into scrubbed prose and the extracted reference PoC.

    Total and deterministic; scrubbing already-scrubbed text is the
    identity on the annotation side.
    """
    removed: list[str] = []

    def replace(match: re.Match) -> str:
        body = match.group(1)
        if _POC_SHAPED.search(body):
            removed.append(body.rstrip("\n"))
            return _SCRUB_MARKER + "\n"
        return match.group(0)

    scrubbed = _FENCED_BLOCK.sub(replace, raw_finding_text)
    reference = "\n\n".join(removed) if removed else None
    return AnnotationBundle(high_level=scrubbed, reference_poc=reference)


def derive_annotation_levels(bundle: AnnotationBundle, trim_high_level: bool = False) -> dict[str, str]:
    """The subset of detail levels this bundle provides, keyed by level name.

    With trimming enabled, an over-detailed high_level text is reduced to
    its leading paragraph so levels stay comparable across findings.
    """
    levels: dict[str, str] = {}
    for level in ANNOTATION_LEVELS:
        text = bundle.text_for(level)
        if text is not None:
            levels[level] = text
    if trim_high_level:
        levels["high_level"] = _first_paragraph(levels["high_level"])
    return levels


def _first_paragraph(text: str) -> str:
    for paragraph in text.split("\n\n"):
        if paragraph.strip():
            return paragraph.strip()
    return text.strip()
