"""Command-line surface for the whole toolkit.

One repository file holds everything; commands load it, act, and (only
when they mutate) save it back.  The repository path comes from --repo or
the TTL_REPO environment variable.  Timestamps come from TTL_NOW when
set, so scripted runs are byte-reproducible.

Exit codes: 0 success; 1 findings under --strict (or uncovered items in
coverage --strict); 2 usage or data errors.  Diagnostics go to stderr,
data to stdout, as text or as schema-stable JSON via --format.

Relation filters use the grammar `name` or `neighborhood:k`, where name
is one of equal, ancestor, descendant, equal-or-descendant, sibling.
"ancestor" accepts targets anywhere above the source code (all levels);
for the one-level reading use neighborhood:1.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import audit, linkage, query, store, suggest, taxonomy
from .errors import TaxTraceError

TEXT = "text"
JSON = "json"


def _now() -> str | None:
    return os.environ.get("TTL_NOW")


def _repo_path(args) -> str:
    if args.repo:
        return args.repo
    raise ValueError("no repository given: pass --repo or set TTL_REPO")


def _load(args) -> store.Repository:
    return store.load_repository(_repo_path(args))


def _save(repo: store.Repository, args) -> None:
    store.save_repository(repo, _repo_path(args))


def _emit(args, doc: dict, lines: list[str]) -> None:
    if args.format == JSON:
        print(json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False))
    else:
        for line in lines:
            print(line)


def _read_file(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc}") from exc


def _finding_lines(findings: list[dict]) -> list[str]:
    return [
        f"{f['severity']}: {f['category']} {','.join(f['object_ids'])}: {f['detail']}"
        for f in findings
    ]


def _hit_lines(hits: list[dict]) -> list[str]:
    lines = []
    for hit in hits:
        via = ", ".join(
            f"{v['source_code']}->{v['target_code']}"
            f" ({v['relation']['kind']}, distance={v['relation']['distance']})"
            for v in hit["via"]
        )
        lines.append(f"{hit['target']}  via {via}")
    return lines


def _model_objects(repo: store.Repository, label: str) -> list[store.Artifact]:
    return [
        a
        for a in store.list_artifacts(repo, kind=store.DESIGN_OBJECT)
        if a.version == label
    ]


# --- command handlers ---


def cmd_init(args) -> int:
    path = args.path or args.repo
    if not path:
        raise ValueError("init needs a repository path")
    if os.path.exists(path):
        raise ValueError(f"refusing to overwrite existing file {path}")
    store.save_repository(store.new_repository(), path)
    _emit(args, {"initialized": path}, [f"initialized empty repository at {path}"])
    return 0


def cmd_import(args) -> int:
    repo = _load(args)
    text = _read_file(args.file)
    if args.what == "taxonomy":
        t = taxonomy.parse_taxonomy(text, format=args.taxonomy_format)
        if args.infer_hierarchy:
            parents = taxonomy.infer_parents(t.nodes)
            for code, parent in parents.items():
                t.nodes[code].parent = parent
        repo.taxonomy = t
        store.check_integrity(repo)
        doc = {"imported": "taxonomy", "nodes": len(t.nodes)}
        lines = [f"imported taxonomy: {len(t.nodes)} nodes"]
    elif args.what == "artifacts":
        artifacts = store.read_artifacts_jsonl(text)
        for artifact in artifacts:
            store.add_artifact(repo, artifact)
        doc = {"imported": "artifacts", "count": len(artifacts)}
        lines = [f"imported {len(artifacts)} artifacts"]
    else:
        objects = store.read_design_objects_csv(text)
        assigned = 0
        warnings = []
        for obj in objects:
            store.add_artifact(repo, obj)
            raw = obj.attrs.get(store.CODE_ATTR)
            if raw is None:
                continue
            try:
                linkage.assign(repo, obj.id, raw, provenance=linkage.IMPORTED, now=_now())
                assigned += 1
            except TaxTraceError as exc:
                warnings.append(f"{obj.id}: code {raw!r} not assigned ({exc})")
        for w in warnings:
            print(f"warning: {w}", file=sys.stderr)
        doc = {
            "imported": "model",
            "count": len(objects),
            "assigned": assigned,
            "warnings": warnings,
        }
        lines = [f"imported {len(objects)} design objects, {assigned} auto-assigned"]
    _save(repo, args)
    _emit(args, doc, lines)
    return 0


def cmd_validate(args) -> int:
    repo = _load(args)
    report = taxonomy.validate(repo.taxonomy)
    findings = report.to_dict()["findings"]
    try:
        store.check_integrity(repo)
    except TaxTraceError as exc:
        findings.append({"category": "referential-integrity", "code": "", "detail": str(exc)})
    doc = {"ok": not findings, "findings": findings}
    lines = (
        ["ok"]
        if not findings
        else [f"{f['category']} {f['code']}: {f['detail']}" for f in findings]
        + [f"{len(findings)} finding(s)"]
    )
    _emit(args, doc, lines)
    return 1 if findings and args.strict else 0


def cmd_suggest(args) -> int:
    repo = _load(args)
    artifact = store.get_artifact(repo, args.artifact_id)
    text = artifact.title if artifact.body is None else f"{artifact.title} {artifact.body}"
    results = suggest.suggest(text, repo.taxonomy, args.n)
    doc = {"artifact": artifact.id, "suggestions": [s.to_dict() for s in results]}
    lines = [
        f"{s.code}  {s.score:.4f}  "
        + ", ".join(f"{term}({source})" for term, source in s.matched_terms)
        for s in results
    ] or ["no suggestions"]
    _emit(args, doc, lines)
    return 0


def cmd_assign(args) -> int:
    repo = _load(args)
    a = linkage.assign(repo, args.artifact_id, args.code, provenance=args.provenance, now=_now())
    _save(repo, args)
    _emit(args, {"assigned": a.to_dict()}, [f"assigned {a.artifact_id} -> {a.code} ({a.status})"])
    return 0


def cmd_unassign(args) -> int:
    repo = _load(args)
    linkage.unassign(repo, args.artifact_id, args.code, now=_now())
    _save(repo, args)
    code = taxonomy.normalize_code(args.code)
    _emit(
        args,
        {"unassigned": {"artifact_id": args.artifact_id, "code": code}},
        [f"unassigned {args.artifact_id} -> {code}"],
    )
    return 0


def cmd_mark_unclassifiable(args) -> int:
    repo = _load(args)
    a = linkage.mark_unclassifiable(repo, args.artifact_id, args.category, args.note, now=_now())
    _save(repo, args)
    _emit(
        args,
        {"marked": a.to_dict()},
        [f"marked {a.artifact_id} unclassifiable ({a.note})"],
    )
    return 0


def cmd_split(args) -> int:
    repo = _load(args)
    original = store.get_artifact(repo, args.artifact_id)
    parts = []
    allocation: dict[str, set[str]] = {}
    for spec in args.part:
        part_id, sep, codes = spec.partition(":")
        if not part_id or not sep:
            raise ValueError(f"bad --part {spec!r}: expected NEW_ID:CODE[,CODE...]")
        parts.append(store.Artifact(id=part_id, kind=original.kind, title=part_id))
        allocation[part_id] = {c for c in codes.split(",") if c.strip()}
    outcome = linkage.split_artifact(repo, args.artifact_id, parts, allocation, now=_now())
    _save(repo, args)
    for w in outcome.warnings:
        print(f"warning: {w}", file=sys.stderr)
    _emit(
        args,
        {"split": outcome.to_dict()},
        [
            f"split {outcome.original_id} into {', '.join(outcome.part_ids)}:"
            f" deletes={outcome.deletes} adds={outcome.adds}"
        ],
    )
    return 0


def cmd_trace(args) -> int:
    repo = _load(args)
    f = query.parse_filter_spec(args.filter)
    hits = query.trace(repo, args.artifact_id, args.to_kind, f, args.include_proposed)
    doc = {
        "source": args.artifact_id,
        "filter": f.spec(),
        "hits": [h.to_dict() for h in hits],
    }
    _emit(args, doc, _hit_lines(doc["hits"]) or ["no hits"])
    return 0


def cmd_coverage(args) -> int:
    repo = _load(args)
    f = query.parse_filter_spec(args.filter) if args.filter else None
    report = query.coverage(
        repo,
        args.from_kind,
        args.to_kind,
        f,
        policy=args.policy,
        include_proposed=args.include_proposed,
    )
    doc = dict(report.to_dict(), from_kind=args.from_kind, to_kind=args.to_kind)
    covered, uncovered = len(report.covered), len(report.uncovered)
    lines = [f"covered {covered}/{covered + uncovered} (rate {report.rate})"]
    lines.extend(f"uncovered: {item}" for item in report.uncovered)
    _emit(args, doc, lines)
    return 1 if report.uncovered and args.strict else 0


def cmd_impact(args) -> int:
    repo = _load(args)
    f = query.parse_filter_spec(args.filter)
    report = query.impact(repo, args.artifact_id, f, args.include_proposed)
    doc = dict(report.to_dict(), filter=f.spec())
    lines = []
    for kind, hits in sorted(doc["groups"].items()):
        lines.append(f"{kind}:")
        lines.extend(f"  {line}" for line in _hit_lines(hits))
    _emit(args, doc, lines or ["no impact"])
    return 0


def _strict_findings_exit(args, findings: list[dict]) -> int:
    errors = [f for f in findings if f["severity"] == audit.ERROR]
    return 1 if errors and args.strict else 0


def cmd_audit(args) -> int:
    repo = _load(args)
    if args.check == "comprehensiveness":
        if len(args.model) != 1:
            raise ValueError("audit comprehensiveness needs exactly one --model")
        objects = _model_objects(repo, args.model[0])
        report = audit.check_comprehensiveness(objects, repo.taxonomy)
        doc = dict(report.to_dict(), model=args.model[0])
        lines = [
            f"total {report.total} classified {report.classified} ratio {report.ratio}"
        ] + _finding_lines(doc["findings"])
        _emit(args, doc, lines)
        return _strict_findings_exit(args, doc["findings"])
    if len(args.model) != 2:
        raise ValueError("audit inter needs exactly two --model labels")
    a = _model_objects(repo, args.model[0])
    b = _model_objects(repo, args.model[1])
    if args.sample:
        sample = set(args.sample)
    else:
        sample = {
            code
            for obj in a + b
            for code in [audit.object_code(obj)]
            if code is not None and code in repo.taxonomy.nodes
        }
    report = audit.inter_reliability(a, b, sample, args.type_attr, repo.taxonomy)
    doc = dict(report.to_dict(), models=list(args.model))
    lines = _finding_lines(doc["findings"]) or ["consistent"]
    _emit(args, doc, lines)
    return _strict_findings_exit(args, doc["findings"])


def cmd_diff(args) -> int:
    repo = _load(args)
    v1 = _model_objects(repo, args.from_version)
    v2 = _model_objects(repo, args.to_version)
    code_diff = audit.diff_codes(v1, v2)
    doc = dict(code_diff.to_dict(), from_model=args.from_version, to_model=args.to_version)
    lines = [
        "new in v2: " + (", ".join(code_diff.new_in_v2) or "none"),
        "absent in v2: " + (", ".join(code_diff.absent_in_v2) or "none"),
    ]
    if args.fingerprint:
        attrs = (
            audit.DEFAULT_FINGERPRINT_ATTRS
            if args.fingerprint == "default"
            else tuple(a.strip() for a in args.fingerprint.split(",") if a.strip())
        )
        match = audit.match_versions(v1, v2, attrs)
        doc["match"] = match.to_dict()
        lines.append(f"matched {len(match.matched_pairs)}/{len(v1)} (ratio {match.match_ratio})")
        lines.extend(_finding_lines(doc["match"]["code_changes"]))
    _emit(args, doc, lines)
    return 0


def cmd_cost(args) -> int:
    scenario = linkage.load_scenario(_read_file(args.scenario))
    count = linkage.maintenance_cost(scenario, args.strategy)
    doc = dict(count.to_dict(), strategy=args.strategy)
    _emit(
        args,
        doc,
        [f"strategy={args.strategy} deletes={count.deletes} adds={count.adds} touched={count.touched}"],
    )
    return 0


# --- parser ---


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taxtrace",
        description="Create and exploit taxonomy-mediated trace links between artifacts.",
    )
    parser.add_argument(
        "--repo",
        default=os.environ.get("TTL_REPO"),
        help="repository file (default: $TTL_REPO)",
    )
    parser.add_argument("--format", choices=[TEXT, JSON], default=TEXT)
    parser.add_argument(
        "--strict", action="store_true", help="exit 1 when findings or uncovered items exist"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create an empty repository file")
    p.add_argument("path", nargs="?", help="repository file (default: --repo)")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("import", help="ingest taxonomy, artifacts, or a model export")
    p.add_argument("what", choices=["taxonomy", "artifacts", "model"])
    p.add_argument("file")
    p.add_argument(
        "--taxonomy-format", choices=[taxonomy.TABULAR, taxonomy.STRUCTURED],
        default=taxonomy.TABULAR,
    )
    p.add_argument(
        "--infer-hierarchy",
        action="store_true",
        help="derive taxonomy parents from code prefixes",
    )
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("validate", help="check taxonomy and referential integrity")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("suggest", help="rank classes for an artifact's text")
    p.add_argument("artifact_id")
    p.add_argument("-n", type=int, default=5)
    p.set_defaults(func=cmd_suggest)

    p = sub.add_parser("assign", help="link an artifact to a class")
    p.add_argument("artifact_id")
    p.add_argument("code")
    p.add_argument(
        "--provenance", choices=sorted(linkage.PROVENANCES), default=linkage.MANUAL
    )
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("unassign", help="retire an artifact-to-class link")
    p.add_argument("artifact_id")
    p.add_argument("code")
    p.set_defaults(func=cmd_unassign)

    p = sub.add_parser("mark-unclassifiable", help="record that no class fits")
    p.add_argument("artifact_id")
    p.add_argument("category", choices=list(linkage.REASON_CATEGORIES))
    p.add_argument("--note")
    p.set_defaults(func=cmd_mark_unclassifiable)

    p = sub.add_parser("split", help="replace an artifact by parts, reallocating codes")
    p.add_argument("artifact_id")
    p.add_argument(
        "--part",
        action="append",
        required=True,
        metavar="NEW_ID:CODE[,CODE...]",
        help="repeat once per part",
    )
    p.set_defaults(func=cmd_split)

    filter_help = "equal|ancestor|descendant|equal-or-descendant|sibling|neighborhood:k"

    p = sub.add_parser("trace", help="find artifacts related through the taxonomy")
    p.add_argument("artifact_id")
    p.add_argument("--to", dest="to_kind", help="restrict to one target kind")
    p.add_argument("--filter", default=query.EQUAL, help=filter_help)
    p.add_argument("--include-proposed", action="store_true")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("coverage", help="which from-kind artifacts reach the to-kind")
    p.add_argument("--from", dest="from_kind", required=True)
    p.add_argument("--to", dest="to_kind")
    p.add_argument("--filter", help=filter_help)
    p.add_argument("--policy", choices=list(query.POLICIES), default=query.COUNT_UNCLASSIFIABLE)
    p.add_argument("--include-proposed", action="store_true")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("impact", help="artifacts affected by changing one artifact")
    p.add_argument("artifact_id")
    p.add_argument("--filter", default=query.EQUAL, help=filter_help)
    p.add_argument("--include-proposed", action="store_true")
    p.set_defaults(func=cmd_impact)

    p = sub.add_parser("audit", help="check model classification quality")
    p.add_argument("check", choices=["comprehensiveness", "inter"])
    p.add_argument("--model", action="append", required=True, metavar="VERSION_LABEL")
    p.add_argument("--sample", action="append", metavar="CODE")
    p.add_argument("--type-attr", default="type")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("diff", help="compare codes between two model versions")
    p.add_argument("--from", dest="from_version", required=True, metavar="VERSION_LABEL")
    p.add_argument("--to", dest="to_version", required=True, metavar="VERSION_LABEL")
    p.add_argument(
        "--fingerprint",
        metavar="ATTRS",
        help="comma-separated attribute names, or 'default', to also match objects",
    )
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("cost", help="compare link maintenance effort for a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--strategy", choices=[linkage.DIRECT, linkage.TAXONOMIC], required=True)
    p.set_defaults(func=cmd_cost)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TaxTraceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
