"""Trace retrieval, coverage, and change-impact over assigned classes.

A trace between two artifacts is never stored; it is computed by joining
their class assignments through a taxonomy relation filter.  The filter
describes where the target's code may sit relative to the source's code:
equal, above (ancestor), below (descendant), equal-or-descendant, sibling,
or within a breadth-first neighborhood of radius k.

Only human-confirmed assignments count by default; proposed ones join in
behind an explicit flag.  Rejected assignments and archived artifacts
never participate.  Everything here is read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import EmptyClassification, UnknownId
from .linkage import CONFIRMED, PROPOSED, UNCLASSIFIABLE
from .store import Repository, get_artifact
from .taxonomy import (
    Relation,
    SIBLING,
    Taxonomy,
    ancestors,
    descendants,
    neighborhood,
    relation,
)

EQUAL = "equal"
ANCESTOR_OF = "ancestor"
DESCENDANT_OF = "descendant"
EQUAL_OR_DESCENDANT = "equal-or-descendant"
SIBLING_OF = "sibling"
NEIGHBORHOOD = "neighborhood"

FILTER_KINDS = (
    EQUAL,
    ANCESTOR_OF,
    DESCENDANT_OF,
    EQUAL_OR_DESCENDANT,
    SIBLING_OF,
    NEIGHBORHOOD,
)

COUNT_UNCLASSIFIABLE = "count-unclassifiable"
EXCLUDE_UNCLASSIFIABLE = "exclude-unclassifiable"
POLICIES = (COUNT_UNCLASSIFIABLE, EXCLUDE_UNCLASSIFIABLE)


@dataclass
class RelationFilter:
    """Admissible relation between a target code and a source code."""

    kind: str
    k: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in FILTER_KINDS:
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.kind == NEIGHBORHOOD:
            if self.k is None or self.k < 0:
                raise ValueError("neighborhood filter needs a non-negative k")
        elif self.k is not None:
            raise ValueError(f"filter {self.kind!r} takes no k")

    def spec(self) -> str:
        return f"{self.kind}:{self.k}" if self.kind == NEIGHBORHOOD else self.kind


def parse_filter_spec(spec: str) -> RelationFilter:
    """Parse the shell-friendly grammar `name` or `neighborhood:k`."""
    name, sep, rest = spec.partition(":")
    if not sep:
        return RelationFilter(name)
    if name != NEIGHBORHOOD:
        raise ValueError(f"only the neighborhood filter takes a parameter, not {name!r}")
    try:
        k = int(rest)
    except ValueError:
        raise ValueError(f"neighborhood radius {rest!r} is not an integer") from None
    return RelationFilter(name, k)


def _admissible_codes(t: Taxonomy, f: RelationFilter, source_code: str) -> set[str]:
    """Target codes satisfying the filter for one source code."""
    if f.kind == EQUAL:
        return {source_code}
    if f.kind == DESCENDANT_OF:
        return set(descendants(t, source_code))
    if f.kind == ANCESTOR_OF:
        return set(ancestors(t, source_code))
    if f.kind == EQUAL_OR_DESCENDANT:
        return {source_code} | set(descendants(t, source_code))
    if f.kind == SIBLING_OF:
        return {
            code
            for code in t.nodes
            if code != source_code and relation(t, code, source_code).kind == SIBLING
        }
    assert f.k is not None
    return set(neighborhood(t, source_code, f.k))


@dataclass
class TraceHit:
    """One traced target with every code pair that justified it."""

    target: str
    via: list[tuple[str, str, Relation]]

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "via": [
                {
                    "source_code": s,
                    "target_code": c,
                    "relation": {"kind": r.kind, "distance": r.distance},
                }
                for s, c, r in self.via
            ],
        }


def _participating_codes(repo: Repository, include_proposed: bool) -> dict[str, set[str]]:
    wanted = {CONFIRMED, PROPOSED} if include_proposed else {CONFIRMED}
    codes: dict[str, set[str]] = {}
    for a in repo.assignments:
        if a.status in wanted and a.code is not None:
            codes.setdefault(a.artifact_id, set()).add(a.code)
    return codes


def trace(
    repo: Repository,
    source_id: str,
    target_kind: str | None,
    f: RelationFilter,
    include_proposed: bool = False,
) -> list[TraceHit]:
    """Targets whose codes relate to the source's codes per the filter.

    Raises EmptyClassification when the source carries no usable
    assignment: an unclassified artifact cannot be traced from.
    """
    get_artifact(repo, source_id)
    by_artifact = _participating_codes(repo, include_proposed)
    source_codes = by_artifact.get(source_id, set())
    if not source_codes:
        raise EmptyClassification(f"artifact {source_id!r} has no confirmed classification")
    admissible: dict[str, set[str]] = {
        s: _admissible_codes(repo.taxonomy, f, s) for s in sorted(source_codes)
    }
    hits = []
    for target_id in sorted(repo.artifacts):
        if target_id == source_id:
            continue
        target = repo.artifacts[target_id]
        if target.archived:
            continue
        if target_kind is not None and target.kind != target_kind:
            continue
        via = []
        for s in sorted(source_codes):
            for c in sorted(by_artifact.get(target_id, set())):
                if c in admissible[s]:
                    via.append((s, c, relation(repo.taxonomy, c, s)))
        if via:
            hits.append(TraceHit(target=target_id, via=via))
    return hits


@dataclass
class CoverageReport:
    covered: list[str]
    uncovered: list[str]
    rate: Fraction
    policy: str

    def to_dict(self) -> dict:
        return {
            "covered": list(self.covered),
            "uncovered": list(self.uncovered),
            "rate": str(self.rate),
            "policy": self.policy,
        }


def coverage(
    repo: Repository,
    from_kind: str,
    to_kind: str | None,
    f: RelationFilter | None = None,
    policy: str = COUNT_UNCLASSIFIABLE,
    include_proposed: bool = False,
) -> CoverageReport:
    """Which from-kind artifacts reach any to-kind artifact under the filter.

    With ``to_kind`` None the question degenerates to classification
    coverage: an artifact is covered as soon as it carries a usable
    assignment.  The exclude-unclassifiable policy drops artifacts that
    were explicitly marked unclassifiable from both lists and from the
    denominator; the default counts them as uncovered.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown coverage policy {policy!r}")
    if to_kind is not None:
        f = require_filter(f)
    marked = {
        a.artifact_id for a in repo.assignments if a.status == UNCLASSIFIABLE
    }
    by_artifact = _participating_codes(repo, include_proposed)
    covered: list[str] = []
    uncovered: list[str] = []
    for artifact_id in sorted(repo.artifacts):
        artifact = repo.artifacts[artifact_id]
        if artifact.kind != from_kind or artifact.archived:
            continue
        if policy == EXCLUDE_UNCLASSIFIABLE and artifact_id in marked:
            continue
        if not by_artifact.get(artifact_id):
            uncovered.append(artifact_id)
            continue
        if to_kind is None:
            covered.append(artifact_id)
            continue
        hits = trace(repo, artifact_id, to_kind, f, include_proposed)
        (covered if hits else uncovered).append(artifact_id)
    total = len(covered) + len(uncovered)
    rate = Fraction(len(covered), total) if total else Fraction(1)
    return CoverageReport(covered=covered, uncovered=uncovered, rate=rate, policy=policy)


@dataclass
class ImpactReport:
    changed: str
    groups: dict[str, list[TraceHit]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "changed": self.changed,
            "groups": {
                kind: [hit.to_dict() for hit in hits]
                for kind, hits in sorted(self.groups.items())
            },
        }


def impact(
    repo: Repository,
    changed_id: str,
    f: RelationFilter,
    include_proposed: bool = False,
) -> ImpactReport:
    """Artifacts of every kind traced from the changed one, grouped by kind."""
    get_artifact(repo, changed_id)
    hits = trace(repo, changed_id, None, f, include_proposed)
    groups: dict[str, list[TraceHit]] = {}
    for hit in hits:
        groups.setdefault(repo.artifacts[hit.target].kind, []).append(hit)
    return ImpactReport(changed=changed_id, groups=groups)


def require_filter(f: RelationFilter | None) -> RelationFilter:
    """Default to class equality when no filter was given."""
    return f if f is not None else RelationFilter(EQUAL)
