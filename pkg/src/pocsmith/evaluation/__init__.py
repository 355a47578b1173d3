"""Well-formedness classification, patch-oracle validation, reporting."""

from pocsmith.evaluation.patch_oracle import ValidationOutcome, validate_against_patch
from pocsmith.evaluation.wellformed import (
    FLAG_PRIORITY,
    WellFormednessOutcome,
    classify_well_formedness,
    derive_flags,
    detect_assertions,
)

__all__ = [
    "FLAG_PRIORITY",
    "ValidationOutcome",
    "WellFormednessOutcome",
    "classify_well_formedness",
    "derive_flags",
    "detect_assertions",
    "validate_against_patch",
]
