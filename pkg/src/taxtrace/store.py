"""Artifact repository: one store for every artifact kind, plus persistence.

Requirements, design objects, test cases, source units, and compliance
clauses all live in a single repository file together with the taxonomy,
the artifact-to-class assignments, and the edit log.  Persistence is a
canonical JSON document: sorted keys, stable ordering, trailing newline,
so that saving the same repository twice yields byte-identical files.

The repository is single-writer: mutating helpers (here and in the
linkage module) must not run concurrently; reads between mutations may.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field

from .errors import (
    DuplicateId,
    MalformedRecord,
    ReferentialIntegrityError,
    RepositoryIOError,
    SchemaVersionMismatch,
    UnknownId,
)
from .linkage import Assignment, EditRecord
from .taxonomy import Taxonomy, parse_taxonomy, write_taxonomy

REQUIREMENT = "requirement"
DESIGN_OBJECT = "design-object"
TEST_CASE = "test-case"
SOURCE_UNIT = "source-unit"
COMPLIANCE_CLAUSE = "compliance-clause"

ARTIFACT_KINDS = frozenset(
    {REQUIREMENT, DESIGN_OBJECT, TEST_CASE, SOURCE_UNIT, COMPLIANCE_CLAUSE}
)

SCHEMA_VERSION = 1

CODE_ATTR = "sb11_code"


@dataclass
class Artifact:
    """One engineering artifact of any kind.

    ``attrs`` values are opaque strings; numeric interpretation is the
    audit module's business.  ``archived`` marks artifacts retired by a
    split: they stay on record but drop out of queries.
    """

    id: str
    kind: str
    title: str
    body: str | None = None
    attrs: dict[str, str] = field(default_factory=dict)
    document: str | None = None
    version: str | None = None
    archived: bool = False


@dataclass
class Repository:
    """Taxonomy, artifacts, assignments, and the append-only edit log."""

    taxonomy: Taxonomy
    artifacts: dict[str, Artifact] = field(default_factory=dict)
    assignments: list[Assignment] = field(default_factory=list)
    edit_log: list[EditRecord] = field(default_factory=list)


def new_repository(t: Taxonomy | None = None) -> Repository:
    return Repository(taxonomy=t if t is not None else Taxonomy())


def add_artifact(repo: Repository, artifact: Artifact) -> str:
    """Append an artifact.  Ids are caller-supplied and unique."""
    if artifact.kind not in ARTIFACT_KINDS:
        raise ValueError(f"unknown artifact kind {artifact.kind!r}")
    if artifact.id in repo.artifacts:
        raise DuplicateId(f"artifact id {artifact.id!r} already exists")
    repo.artifacts[artifact.id] = artifact
    return artifact.id


def get_artifact(repo: Repository, artifact_id: str) -> Artifact:
    try:
        return repo.artifacts[artifact_id]
    except KeyError:
        raise UnknownId(f"no artifact with id {artifact_id!r}") from None


def list_artifacts(
    repo: Repository,
    kind: str | None = None,
    attrs: dict[str, str] | None = None,
) -> list[Artifact]:
    """Artifacts ordered by id, filtered conjunctively.

    ``kind`` restricts to one artifact kind; ``attrs`` requires equality
    on every given attribute.  Archived artifacts are listed too; query
    operations apply their own exclusion.
    """
    result = []
    for artifact_id in sorted(repo.artifacts):
        artifact = repo.artifacts[artifact_id]
        if kind is not None and artifact.kind != kind:
            continue
        if attrs and any(artifact.attrs.get(k) != v for k, v in attrs.items()):
            continue
        result.append(artifact)
    return result


def check_integrity(repo: Repository) -> None:
    """Full-scan referential check: assignments point at real things."""
    for i, a in enumerate(repo.assignments):
        if a.artifact_id not in repo.artifacts:
            raise ReferentialIntegrityError(
                f"assignment #{i} ({a.artifact_id!r} -> {a.code!r}) references a missing artifact"
            )
        if a.code is not None and a.code not in repo.taxonomy.nodes:
            raise ReferentialIntegrityError(
                f"assignment #{i} ({a.artifact_id!r} -> {a.code!r}) references a missing taxonomy code"
            )


# --- canonical serialization ---


def _artifact_to_dict(artifact: Artifact) -> dict:
    doc: dict = {
        "id": artifact.id,
        "kind": artifact.kind,
        "title": artifact.title,
        "attrs": dict(sorted(artifact.attrs.items())),
        "archived": artifact.archived,
    }
    if artifact.body is not None:
        doc["body"] = artifact.body
    if artifact.document is not None:
        doc["document"] = artifact.document
    if artifact.version is not None:
        doc["version"] = artifact.version
    return doc


def _artifact_from_dict(doc: dict, where: str) -> Artifact:
    if not isinstance(doc, dict):
        raise MalformedRecord(f"{where}: expected an object")
    for key in ("id", "kind", "title"):
        if not isinstance(doc.get(key), str):
            raise MalformedRecord(f"{where}: missing or non-string {key!r}")
    if doc["kind"] not in ARTIFACT_KINDS:
        raise MalformedRecord(f"{where}: unknown artifact kind {doc['kind']!r}")
    attrs = doc.get("attrs") or {}
    if not isinstance(attrs, dict):
        raise MalformedRecord(f"{where}: attrs must be an object")
    return Artifact(
        id=doc["id"],
        kind=doc["kind"],
        title=doc["title"],
        body=doc.get("body"),
        attrs={str(k): str(v) for k, v in attrs.items()},
        document=doc.get("document"),
        version=doc.get("version"),
        archived=bool(doc.get("archived", False)),
    )


def _taxonomy_to_dict(t: Taxonomy) -> dict:
    return json.loads(write_taxonomy(t, format="structured"))


def serialize_repository(repo: Repository) -> str:
    """Render the repository as canonical JSON text."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "taxonomy": _taxonomy_to_dict(repo.taxonomy),
        "artifacts": [
            _artifact_to_dict(repo.artifacts[artifact_id])
            for artifact_id in sorted(repo.artifacts)
        ],
        "assignments": [a.to_dict() for a in repo.assignments],
        "edit_log": [e.to_dict() for e in repo.edit_log],
    }
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def deserialize_repository(text: str) -> Repository:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RepositoryIOError(f"repository file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise RepositoryIOError("repository file must hold a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"repository schema version {version!r}, expected {SCHEMA_VERSION}"
        )
    taxonomy = parse_taxonomy(
        json.dumps(doc.get("taxonomy") or {"nodes": []}), format="structured"
    )
    repo = Repository(taxonomy=taxonomy)
    for i, item in enumerate(doc.get("artifacts") or []):
        artifact = _artifact_from_dict(item, f"artifacts[{i}]")
        if artifact.id in repo.artifacts:
            raise ReferentialIntegrityError(f"artifact id {artifact.id!r} appears twice")
        repo.artifacts[artifact.id] = artifact
    for i, item in enumerate(doc.get("assignments") or []):
        repo.assignments.append(Assignment.from_dict(item, f"assignments[{i}]"))
    for i, item in enumerate(doc.get("edit_log") or []):
        repo.edit_log.append(EditRecord.from_dict(item, f"edit_log[{i}]"))
    check_integrity(repo)
    return repo


def save_repository(repo: Repository, path: str | os.PathLike) -> None:
    text = serialize_repository(repo)
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as exc:
        raise RepositoryIOError(f"cannot write repository {path!s}: {exc}") from exc


def load_repository(path: str | os.PathLike) -> Repository:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise RepositoryIOError(f"cannot read repository {path!s}: {exc}") from exc
    return deserialize_repository(text)


# --- bulk ingestion ---


def read_artifacts_jsonl(source) -> list[Artifact]:
    """Parse artifacts from JSON-Lines text, one object per line."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    artifacts = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"line {lineno}: invalid JSON: {exc}") from exc
        if isinstance(doc, dict) and "attrs" in doc and isinstance(doc["attrs"], dict):
            coerced = {}
            for k, v in doc["attrs"].items():
                if isinstance(v, (dict, list)):
                    raise MalformedRecord(f"line {lineno}: attr {k!r} must be scalar")
                coerced[str(k)] = v if isinstance(v, str) else json.dumps(v)
            doc = dict(doc, attrs=coerced)
        artifacts.append(_artifact_from_dict(doc, f"line {lineno}"))
    return artifacts


def read_design_objects_csv(source) -> list[Artifact]:
    """Parse a design-model export: `object_id,sb11_code,version,<attr...>`.

    Every column after the three fixed ones becomes an attribute.  The
    classification code lands in attr ``sb11_code`` exactly as exported
    (audits need the faulty spelling, so no normalization here); an empty
    code cell leaves the attribute unset.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise MalformedRecord("empty design-object file")
    header = rows[0]
    if header[:3] != ["object_id", CODE_ATTR, "version"]:
        raise MalformedRecord(
            f"expected header to start with 'object_id,{CODE_ATTR},version', got {','.join(header[:3])!r}"
        )
    attr_names = header[3:]
    artifacts = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise MalformedRecord(
                f"row {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        object_id = row[0].strip()
        if not object_id:
            raise MalformedRecord(f"row {lineno}: empty object_id")
        attrs = {name: value.strip() for name, value in zip(attr_names, row[3:])}
        code = row[1].strip()
        if code:
            attrs[CODE_ATTR] = code
        artifacts.append(
            Artifact(
                id=object_id,
                kind=DESIGN_OBJECT,
                title=object_id,
                attrs=attrs,
                version=row[2].strip() or None,
            )
        )
    return artifacts
