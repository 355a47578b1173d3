"""Dataset ingestion: manifests, workspaces, patches, annotations, judging."""

from pocsmith.dataset.manifest import (
    AnnotationBundle,
    FindingRecord,
    ManifestError,
    PatchRef,
    load_manifest,
)
from pocsmith.dataset.scrub import derive_annotation_levels, scrub_annotation
from pocsmith.dataset.workspace import (
    DatasetFaultError,
    PatchConflictError,
    apply_patch,
    materialize_workspace,
    prepare_workspace,
    tree_hash,
)

__all__ = [
    "AnnotationBundle",
    "DatasetFaultError",
    "FindingRecord",
    "ManifestError",
    "PatchConflictError",
    "PatchRef",
    "apply_patch",
    "derive_annotation_levels",
    "load_manifest",
    "materialize_workspace",
    "prepare_workspace",
    "scrub_annotation",
    "tree_hash",
]
