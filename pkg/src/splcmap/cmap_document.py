"""The concept-map hyper-document: assembly, overlays, and exports.

The document carries both trace types (concept to feature, feature to asset),
the glossary, scattering and tangling metrics, and the feature diagram, all in
a canonical order so that serialisation is byte reproducible.  The canonical
file form is JSON with the `.cmap.json` extension.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from .asset_scanner import AssetKind, Scattering, TraceMetrics, TraceTable
from .concept_builder import Concept
from .curation import CurationFile
from .errors import SplcmapError
from .feature_model import CrossTreeConstraint, Feature, FeatureModel, Variability
from .relationship_builder import EdgeProposal, Provenance

DOCUMENT_VERSION = 1
DEFINITION_MAX_CHARS = 240


class DocumentError(SplcmapError):
    """Dangling references, malformed document files, or bad export formats."""


class KnownStatus(str, Enum):
    KNOWN = "known"
    NEW = "new"


@dataclass(frozen=True)
class DocConcept:
    id: str
    label: str
    level: int
    relevance: float
    occurrences: int
    features: tuple[str, ...]
    assets: tuple[str, ...]
    asset_kinds: tuple[str, ...]
    members: tuple[str, ...]
    definition: Optional[str] = None


@dataclass(frozen=True)
class DocRelationship:
    source: str
    target: str
    label: str
    directed: bool
    provenance: str


@dataclass(frozen=True)
class TraceRow:
    feature: str
    asset: str
    span: tuple[int, int]
    kind: str


@dataclass(frozen=True)
class GlossaryEntry:
    term: str
    definition: str
    source: str  # "curation" | "extracted"


@dataclass(frozen=True)
class CmapDocument:
    version: int
    spl_name: str
    levels_built: int
    concepts: tuple[DocConcept, ...]
    relationships: tuple[DocRelationship, ...]
    features: tuple[Feature, ...]
    constraints: tuple[CrossTreeConstraint, ...]
    traces: tuple[TraceRow, ...]
    metrics: TraceMetrics
    glossary: tuple[GlossaryEntry, ...]

    def feature_names(self) -> frozenset[str]:
        return frozenset(f.name for f in self.features)

    def concept(self, concept_id: str) -> DocConcept:
        for c in self.concepts:
            if c.id == concept_id:
                return c
        raise DocumentError(f"unknown concept id: {concept_id!r}")


@dataclass(frozen=True)
class OverlayResult:
    statuses: dict[str, KnownStatus]


_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")


def extract_definition(label: str, doc_texts: dict[str, str]) -> Optional[str]:
    """First sentence of any documentation asset containing the label.

    Matching is whole-word and case insensitive; documentation assets are
    visited in path order and sentences in text order, so the result is
    deterministic.  The sentence is truncated to 240 characters.
    """
    pattern = re.compile(r"\b" + re.escape(label) + r"\b", re.IGNORECASE)
    for _path, text in sorted(doc_texts.items()):
        flat = " ".join(text.split())
        for sentence in _SENTENCE_SPLIT_RE.split(flat):
            sentence = sentence.strip()
            if sentence and pattern.search(sentence):
                return sentence[:DEFINITION_MAX_CHARS]
    return None


def assemble(
    spl_name: str,
    model: FeatureModel,
    table: TraceTable,
    metrics: TraceMetrics,
    concepts: list[Concept],
    edges: list[EdgeProposal],
    curation: CurationFile,
    levels_built: Optional[int] = None,
) -> CmapDocument:
    """Build the canonical document from one pipeline run's stage outputs."""
    feature_rows = (model.root,) + tuple(
        sorted(model.features, key=lambda f: (f.level, f.name))
    )
    feature_names = {f.name for f in feature_rows}
    asset_paths = {a.path for a in table.assets}
    kind_by_path = {a.path: a.kind for a in table.assets}

    doc_concepts = []
    glossary = []
    curated_definitions = dict(curation.definitions)
    for concept in concepts:
        if not concept.features <= feature_names:
            raise DocumentError(
                f"dangling reference: concept {concept.label!r} traces unknown features "
                f"{sorted(concept.features - feature_names)}"
            )
        if not concept.assets <= asset_paths:
            raise DocumentError(
                f"dangling reference: concept {concept.label!r} traces unknown assets "
                f"{sorted(concept.assets - asset_paths)}"
            )
        if concept.relevance is None:
            raise DocumentError(f"concept {concept.label!r} was never ranked")
        level = min(model.feature(f).level for f in concept.features)
        definition = concept.definition or curated_definitions.get(concept.label)
        if definition is not None:
            definition = definition[:DEFINITION_MAX_CHARS]
            glossary.append(GlossaryEntry(concept.label, definition, "curation"))
        else:
            definition = extract_definition(concept.label, table.doc_texts)
            if definition is not None:
                glossary.append(GlossaryEntry(concept.label, definition, "extracted"))
        doc_concepts.append(
            DocConcept(
                id=concept.id,
                label=concept.label,
                level=level,
                relevance=concept.relevance,
                occurrences=concept.occurrences,
                features=tuple(sorted(concept.features)),
                assets=tuple(sorted(concept.assets)),
                asset_kinds=tuple(sorted(k.value for k in concept.asset_kinds)),
                members=concept.member_surfaces,
                definition=definition,
            )
        )
    doc_concepts.sort(key=lambda c: (-c.relevance, c.label))
    glossary.sort(key=lambda g: g.term)

    concept_ids = {c.id for c in doc_concepts}
    relationships = []
    for edge in edges:
        if edge.source not in concept_ids or edge.target not in concept_ids:
            raise DocumentError(
                f"dangling reference: relationship {edge.source} -> {edge.target}"
            )
        relationships.append(
            DocRelationship(
                source=edge.source,
                target=edge.target,
                label=edge.label or "related-to",
                directed=edge.directed,
                provenance=edge.provenance.value,
            )
        )
    relationships.sort(key=lambda r: (r.source, r.target, r.label))

    traces = []
    for feature, segments in sorted(table.feature_segments.items()):
        if feature not in feature_names:
            continue  # unknown names already reported as scan diagnostics
        for seg in segments:
            traces.append(
                TraceRow(
                    feature=feature,
                    asset=seg.asset,
                    span=seg.span,
                    kind=kind_by_path[seg.asset].value,
                )
            )
    traces.sort(key=lambda t: (t.feature, t.asset, t.span))

    if levels_built is None:
        levels_built = max((c.level for c in doc_concepts), default=0)

    return CmapDocument(
        version=DOCUMENT_VERSION,
        spl_name=spl_name,
        levels_built=levels_built,
        concepts=tuple(doc_concepts),
        relationships=tuple(relationships),
        features=feature_rows,
        constraints=tuple(sorted(model.constraints, key=lambda c: (c.lhs, c.kind, c.rhs))),
        traces=tuple(traces),
        metrics=metrics,
        glossary=tuple(glossary),
    )


def known_overlay(doc: CmapDocument, configuration: Iterable[str]) -> OverlayResult:
    """Concepts are known when their feature trace intersects the configuration."""
    config = set(configuration)
    unknown = config - doc.feature_names()
    if unknown:
        raise DocumentError(f"unknown feature names in configuration: {sorted(unknown)}")
    statuses = {
        c.id: KnownStatus.KNOWN if config & set(c.features) else KnownStatus.NEW
        for c in doc.concepts
    }
    return OverlayResult(statuses=statuses)


def to_json_text(doc: CmapDocument) -> str:
    """Canonical serialisation; parse and re-serialise is byte identical."""
    payload = {
        "version": doc.version,
        "spl_name": doc.spl_name,
        "levels_built": doc.levels_built,
        "concepts": [
            {
                "id": c.id,
                "label": c.label,
                "level": c.level,
                "relevance": c.relevance,
                "occurrences": c.occurrences,
                "features": list(c.features),
                "assets": list(c.assets),
                "asset_kinds": list(c.asset_kinds),
                "members": list(c.members),
                "definition": c.definition,
            }
            for c in doc.concepts
        ],
        "relationships": [
            {
                "source": r.source,
                "target": r.target,
                "label": r.label,
                "directed": r.directed,
                "provenance": r.provenance,
            }
            for r in doc.relationships
        ],
        "features": [
            {
                "name": f.name,
                "parent": f.parent,
                "level": f.level,
                "variability": f.variability.value,
                "group_id": f.group_id,
            }
            for f in doc.features
        ],
        "constraints": [
            {"kind": c.kind, "lhs": c.lhs, "rhs": c.rhs} for c in doc.constraints
        ],
        "traces": [
            {"feature": t.feature, "asset": t.asset, "span": list(t.span), "kind": t.kind}
            for t in doc.traces
        ],
        "metrics": {
            "scattering": {
                feature: {"variation_points": s.vp_count, "files": s.file_count}
                for feature, s in sorted(doc.metrics.scattering.items())
            },
            "tangling": {
                feature: sorted(names)
                for feature, names in sorted(doc.metrics.tangling.items())
            },
        },
        "glossary": [
            {"term": g.term, "definition": g.definition, "source": g.source}
            for g in doc.glossary
        ],
    }
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def parse_document(text: str) -> CmapDocument:
    try:
        data = json.loads(text)
    except ValueError as exc:
        raise DocumentError(f"malformed document: {exc}") from exc
    if not isinstance(data, dict):
        raise DocumentError("malformed document: top level must be an object")
    version = data.get("version")
    if version != DOCUMENT_VERSION:
        raise DocumentError(f"unsupported document version: {version!r}")
    try:
        concepts = tuple(
            DocConcept(
                id=c["id"],
                label=c["label"],
                level=c["level"],
                relevance=c["relevance"],
                occurrences=c["occurrences"],
                features=tuple(c["features"]),
                assets=tuple(c["assets"]),
                asset_kinds=tuple(c["asset_kinds"]),
                members=tuple(c["members"]),
                definition=c.get("definition"),
            )
            for c in data["concepts"]
        )
        relationships = tuple(
            DocRelationship(
                source=r["source"],
                target=r["target"],
                label=r["label"],
                directed=r["directed"],
                provenance=r["provenance"],
            )
            for r in data["relationships"]
        )
        features = tuple(
            Feature(
                name=f["name"],
                parent=f["parent"],
                level=f["level"],
                variability=Variability(f["variability"]),
                group_id=f.get("group_id"),
            )
            for f in data["features"]
        )
        constraints = tuple(
            CrossTreeConstraint(kind=c["kind"], lhs=c["lhs"], rhs=c["rhs"])
            for c in data["constraints"]
        )
        traces = tuple(
            TraceRow(
                feature=t["feature"],
                asset=t["asset"],
                span=(t["span"][0], t["span"][1]),
                kind=t["kind"],
            )
            for t in data["traces"]
        )
        metrics = TraceMetrics(
            scattering={
                feature: Scattering(s["variation_points"], s["files"])
                for feature, s in data["metrics"]["scattering"].items()
            },
            tangling={
                feature: frozenset(names)
                for feature, names in data["metrics"]["tangling"].items()
            },
        )
        glossary = tuple(
            GlossaryEntry(term=g["term"], definition=g["definition"], source=g["source"])
            for g in data["glossary"]
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise DocumentError(f"malformed document: missing field {exc}") from exc
    return CmapDocument(
        version=version,
        spl_name=data["spl_name"],
        levels_built=data["levels_built"],
        concepts=concepts,
        relationships=relationships,
        features=features,
        constraints=constraints,
        traces=traces,
        metrics=metrics,
        glossary=glossary,
    )


def load_document(path: str | Path) -> CmapDocument:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read document {path}: {exc}") from exc
    return parse_document(text)


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _xml_escape(text: str) -> str:
    return (
        text.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def export(doc: CmapDocument, format: str) -> str:
    """Render the concept graph as `dot` or `graphml` text."""
    if format == "dot":
        lines = [f'digraph "{_dot_escape(doc.spl_name)}" {{']
        for c in doc.concepts:
            lines.append(
                f'  "{_dot_escape(c.id)}" [label="{_dot_escape(c.label)}", level={c.level}];'
            )
        for r in doc.relationships:
            attrs = f'label="{_dot_escape(r.label)}"'
            if not r.directed:
                attrs += ", dir=none"
            lines.append(f'  "{_dot_escape(r.source)}" -> "{_dot_escape(r.target)}" [{attrs}];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    if format == "graphml":
        lines = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
            '  <key id="label" for="node" attr.name="label" attr.type="string"/>',
            '  <key id="level" for="node" attr.name="level" attr.type="int"/>',
            '  <key id="elabel" for="edge" attr.name="label" attr.type="string"/>',
            f'  <graph id="{_xml_escape(doc.spl_name)}" edgedefault="directed">',
        ]
        for c in doc.concepts:
            lines.append(f'    <node id="{_xml_escape(c.id)}">')
            lines.append(f'      <data key="label">{_xml_escape(c.label)}</data>')
            lines.append(f'      <data key="level">{c.level}</data>')
            lines.append("    </node>")
        for r in doc.relationships:
            directed = "true" if r.directed else "false"
            lines.append(
                f'    <edge source="{_xml_escape(r.source)}" target="{_xml_escape(r.target)}"'
                f' directed="{directed}">'
            )
            lines.append(f'      <data key="elabel">{_xml_escape(r.label)}</data>')
            lines.append("    </edge>")
        lines.append("  </graph>")
        lines.append("</graphml>")
        return "\n".join(lines) + "\n"

    raise DocumentError(f"unsupported export format: {format!r}")
