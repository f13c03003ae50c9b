"""Domain taxonomy: a forest of coded classes with is-a parent links.

A taxonomy is the shared classification system (SB11-style hierarchical
codes) that artifacts are traced through.  Codes are normalized strings;
the parent relation forms a forest (several top-level roots are allowed).
Taxonomies are immutable after construction and safe for concurrent reads.

Two sibling readings coexist here: nodes sharing a parent are siblings in
the usual structural sense, and top-level roots are treated as siblings of
each other (they share the absent parent).  Root pairs report the
conventional sibling distance 2 even though no path connects their trees;
breadth-first operations (``neighborhood``) never cross trees.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .errors import (
    CycleDetected,
    DuplicateCode,
    EmptyCode,
    MalformedRecord,
    UnknownCode,
    UnknownParent,
)

TABULAR = "tabular"
STRUCTURED = "structured"

SAME = "same"
ANCESTOR = "ancestor"
DESCENDANT = "descendant"
SIBLING = "sibling"
UNRELATED = "unrelated"

_CSV_HEADER = ["code", "parent", "title", "description", "synonyms"]


def normalize_code(raw: str) -> str:
    """Normalize a class code: trim, uppercase, strip trailing dash padding.

    Codes are exported padded to fixed width ("32QD--"); the padding is not
    part of the identity.  Raises EmptyCode when nothing remains.
    """
    code = raw.strip().upper().rstrip("-")
    if not code:
        raise EmptyCode(f"code {raw!r} is empty after normalization")
    return code


@dataclass
class TaxonomyNode:
    """One class of the taxonomy."""

    code: str
    title: str
    description: str | None = None
    synonyms: list[str] = field(default_factory=list)
    parent: str | None = None


@dataclass
class Taxonomy:
    """A forest of taxonomy nodes keyed by normalized code."""

    nodes: dict[str, TaxonomyNode] = field(default_factory=dict)

    @property
    def roots(self) -> list[str]:
        return sorted(code for code, node in self.nodes.items() if node.parent is None)

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, code: str) -> bool:
        return code in self.nodes

    def codes(self) -> list[str]:
        return sorted(self.nodes)

    def resolve(self, raw: str) -> str:
        """Normalize ``raw`` and check membership, returning the stored code."""
        code = normalize_code(raw)
        if code not in self.nodes:
            raise UnknownCode(f"code {code!r} is not in the taxonomy")
        return code


@dataclass
class Relation:
    """How two classes relate in the forest.

    ``distance`` is the undirected path length; it is None for nodes in
    different trees (except root pairs, which are siblings at the
    conventional distance 2).
    """

    kind: str
    distance: int | None


@dataclass
class ValidationFinding:
    category: str
    code: str
    detail: str

    def to_dict(self) -> dict:
        return {"category": self.category, "code": self.code, "detail": self.detail}


@dataclass
class ValidationReport:
    findings: list[ValidationFinding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def to_dict(self) -> dict:
        return {"ok": self.ok, "findings": [f.to_dict() for f in self.findings]}


def _children_index(t: Taxonomy) -> dict[str, list[str]]:
    children: dict[str, list[str]] = {code: [] for code in t.nodes}
    for code, node in t.nodes.items():
        if node.parent is not None and node.parent in t.nodes:
            children[node.parent].append(code)
    for kids in children.values():
        kids.sort()
    return children


def _parent_chain(t: Taxonomy, code: str) -> list[str]:
    """Ancestor codes ordered child-to-root.  Guards against cycles."""
    chain: list[str] = []
    seen = {code}
    current = t.nodes[code].parent
    while current is not None:
        if current in seen:
            raise CycleDetected(f"parent chain of {code!r} revisits {current!r}")
        if current not in t.nodes:
            break
        chain.append(current)
        seen.add(current)
        current = t.nodes[current].parent
    return chain


def ancestors(t: Taxonomy, code: str) -> list[str]:
    """Ancestors of ``code`` ordered child-to-root, excluding the node itself."""
    return _parent_chain(t, t.resolve(code))


def descendants(t: Taxonomy, code: str) -> list[str]:
    """All codes below ``code``, excluding it, in lexicographic order."""
    start = t.resolve(code)
    children = _children_index(t)
    found: set[str] = set()
    stack = list(children[start])
    while stack:
        current = stack.pop()
        if current in found:
            continue
        found.add(current)
        stack.extend(children[current])
    return sorted(found)


def relation(t: Taxonomy, a: str, b: str) -> Relation:
    """Relation of ``a`` seen from ``b``: a below b reports ``descendant``."""
    na = t.resolve(a)
    nb = t.resolve(b)
    if na == nb:
        return Relation(SAME, 0)
    chain_a = _parent_chain(t, na)
    if nb in chain_a:
        return Relation(DESCENDANT, chain_a.index(nb) + 1)
    chain_b = _parent_chain(t, nb)
    if na in chain_b:
        return Relation(ANCESTOR, chain_b.index(na) + 1)
    if t.nodes[na].parent == t.nodes[nb].parent:
        # Shared parent, or two roots sharing the absent parent.
        return Relation(SIBLING, 2)
    depth_b = {code: i + 1 for i, code in enumerate(chain_b)}
    for i, code in enumerate(chain_a):
        if code in depth_b:
            return Relation(UNRELATED, i + 1 + depth_b[code])
    return Relation(UNRELATED, None)


def neighborhood(t: Taxonomy, code: str, k: int) -> list[str]:
    """Codes within undirected forest distance ``k`` of ``code``, inclusive."""
    if k < 0:
        raise ValueError("neighborhood radius must be non-negative")
    start = t.resolve(code)
    children = _children_index(t)
    distances = {start: 0}
    frontier = [start]
    while frontier:
        nxt: list[str] = []
        for current in frontier:
            d = distances[current]
            if d == k:
                continue
            neighbors = list(children[current])
            parent = t.nodes[current].parent
            if parent is not None and parent in t.nodes:
                neighbors.append(parent)
            for n in neighbors:
                if n not in distances:
                    distances[n] = d + 1
                    nxt.append(n)
        frontier = nxt
    return sorted(distances)


def validate(t: Taxonomy) -> ValidationReport:
    """Check structural invariants; violations are findings, not errors.

    Semantic quality (e.g., sibling classes not overlapping in meaning) is
    not machine-checkable and is out of scope here.
    """
    findings: list[ValidationFinding] = []
    by_normal: dict[str, list[str]] = {}
    for key in sorted(t.nodes):
        node = t.nodes[key]
        if key != node.code:
            findings.append(
                ValidationFinding("duplicate-code", key, f"stored under key {key!r} but codes itself {node.code!r}")
            )
        try:
            normal = normalize_code(node.code)
        except EmptyCode:
            findings.append(ValidationFinding("duplicate-code", key, "code is empty after normalization"))
            continue
        by_normal.setdefault(normal, []).append(key)
        if normal != node.code:
            findings.append(ValidationFinding("duplicate-code", key, f"code {node.code!r} is not normalized"))
    for normal, keys in sorted(by_normal.items()):
        if len(keys) > 1:
            findings.append(
                ValidationFinding("duplicate-code", normal, f"codes {keys} collide after normalization")
            )
    for key in sorted(t.nodes):
        node = t.nodes[key]
        if not node.title.strip():
            findings.append(ValidationFinding("empty-title", key, "title is empty"))
        if node.parent is not None and node.parent not in t.nodes:
            findings.append(ValidationFinding("orphan-parent", key, f"parent {node.parent!r} does not exist"))
    acyclic: set[str] = set()
    on_cycle: set[str] = set()
    into_cycle: set[str] = set()
    for key in sorted(t.nodes):
        if key in acyclic or key in on_cycle or key in into_cycle:
            continue
        path: list[str] = []
        index: dict[str, int] = {}
        current: str | None = key
        while True:
            if current is None or current not in t.nodes or current in acyclic:
                acyclic.update(path)
                break
            if current in on_cycle or current in into_cycle:
                into_cycle.update(path)
                break
            if current in index:
                on_cycle.update(path[index[current] :])
                into_cycle.update(path[: index[current]])
                break
            index[current] = len(path)
            path.append(current)
            current = t.nodes[current].parent
    for key in sorted(on_cycle):
        findings.append(ValidationFinding("cycle", key, "node lies on a parent cycle"))
    return ValidationReport(findings)


def _build(records: list[TaxonomyNode]) -> Taxonomy:
    nodes: dict[str, TaxonomyNode] = {}
    for node in records:
        if node.code in nodes:
            raise DuplicateCode(f"code {node.code!r} appears more than once")
        nodes[node.code] = node
    for node in records:
        if node.parent is not None and node.parent not in nodes:
            raise UnknownParent(f"node {node.code!r} names unknown parent {node.parent!r}")
    t = Taxonomy(nodes)
    for code in nodes:
        try:
            _parent_chain(t, code)
        except CycleDetected as exc:
            raise CycleDetected(f"cycle through node {code!r}") from exc
    return t


def _decode(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def _parse_tabular(text: str) -> list[TaxonomyNode]:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or rows[0] != _CSV_HEADER:
        raise MalformedRecord(f"expected header {','.join(_CSV_HEADER)!r}")
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(_CSV_HEADER):
            raise MalformedRecord(f"row {lineno}: expected {len(_CSV_HEADER)} fields, got {len(row)}")
        raw_code, raw_parent, title, description, synonyms = row
        try:
            code = normalize_code(raw_code)
        except EmptyCode as exc:
            raise MalformedRecord(f"row {lineno}: empty code") from exc
        parent = None
        if raw_parent.strip():
            try:
                parent = normalize_code(raw_parent)
            except EmptyCode as exc:
                raise MalformedRecord(f"row {lineno}: unusable parent {raw_parent!r}") from exc
        if not title.strip():
            raise MalformedRecord(f"row {lineno}: empty title for code {code!r}")
        records.append(
            TaxonomyNode(
                code=code,
                title=title.strip(),
                description=description.strip() or None,
                synonyms=[s for s in (part.strip() for part in synonyms.split("|")) if s],
                parent=parent,
            )
        )
    return records


def _parse_structured(text: str) -> list[TaxonomyNode]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("nodes"), list):
        raise MalformedRecord("expected an object with a 'nodes' list")
    records = []
    allowed = {"code", "parent", "title", "description", "synonyms"}
    for i, item in enumerate(doc["nodes"]):
        where = f"nodes[{i}]"
        if not isinstance(item, dict):
            raise MalformedRecord(f"{where}: expected an object")
        extra = set(item) - allowed
        if extra:
            raise MalformedRecord(f"{where}: unknown fields {sorted(extra)}")
        if "code" not in item or "title" not in item:
            raise MalformedRecord(f"{where}: 'code' and 'title' are required")
        try:
            code = normalize_code(str(item["code"]))
        except EmptyCode as exc:
            raise MalformedRecord(f"{where}: empty code") from exc
        title = str(item["title"]).strip()
        if not title:
            raise MalformedRecord(f"{where}: empty title for code {code!r}")
        parent = None
        if item.get("parent") is not None:
            try:
                parent = normalize_code(str(item["parent"]))
            except EmptyCode as exc:
                raise MalformedRecord(f"{where}: unusable parent") from exc
        description = item.get("description")
        if description is not None:
            description = str(description).strip() or None
        synonyms = item.get("synonyms") or []
        if not isinstance(synonyms, list):
            raise MalformedRecord(f"{where}: synonyms must be a list")
        records.append(
            TaxonomyNode(
                code=code,
                title=title,
                description=description,
                synonyms=[str(s).strip() for s in synonyms if str(s).strip()],
                parent=parent,
            )
        )
    return records


def parse_taxonomy(source, format: str = TABULAR) -> Taxonomy:
    """Parse a taxonomy from CSV (``tabular``) or JSON (``structured``).

    ``source`` may be text, bytes, or a file-like object.  All codes come
    back normalized and the forest invariants are enforced.
    """
    text = _decode(source)
    if format == TABULAR:
        records = _parse_tabular(text)
    elif format == STRUCTURED:
        records = _parse_structured(text)
    else:
        raise ValueError(f"unknown taxonomy format {format!r}")
    return _build(records)


def write_taxonomy(t: Taxonomy, format: str = TABULAR) -> str:
    """Serialize a taxonomy so that parse_taxonomy round-trips it."""
    if format == TABULAR:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_CSV_HEADER)
        for code in sorted(t.nodes):
            node = t.nodes[code]
            writer.writerow(
                [
                    node.code,
                    node.parent or "",
                    node.title,
                    node.description or "",
                    "|".join(node.synonyms),
                ]
            )
        return buf.getvalue()
    if format == STRUCTURED:
        items = []
        for code in sorted(t.nodes):
            node = t.nodes[code]
            item: dict = {"code": node.code, "title": node.title}
            if node.parent is not None:
                item["parent"] = node.parent
            if node.description is not None:
                item["description"] = node.description
            if node.synonyms:
                item["synonyms"] = list(node.synonyms)
            items.append(item)
        return json.dumps({"nodes": items}, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    raise ValueError(f"unknown taxonomy format {format!r}")


def infer_parents(codes) -> dict[str, str | None]:
    """Map each code to its longest proper prefix present in the set."""
    present = {normalize_code(c) for c in codes}
    parents: dict[str, str | None] = {}
    for code in present:
        parent = None
        for length in range(len(code) - 1, 0, -1):
            if code[:length] in present:
                parent = code[:length]
                break
        parents[code] = parent
    return parents


def infer_hierarchy_from_codes(codes) -> Taxonomy:
    """Build a taxonomy from bare codes, nesting by code prefixes.

    Used for classification exports that carry codes but no explicit
    hierarchy ("3" contains "31" contains "31B").  Titles default to the
    code itself.
    """
    code_list = list(codes)
    if not code_list:
        raise EmptyCode("cannot infer a hierarchy from an empty code set")
    parents = infer_parents(code_list)
    records = [
        TaxonomyNode(code=code, title=code, parent=parent)
        for code, parent in sorted(parents.items())
    ]
    return _build(records)
