"""Concept relationship proposals from feature trace-set intersections.

For every concept pair, compared via their traced feature sets: a subset is
subsumed into the superset concept; an overlap proposes an undirected edge
whose direction is left to the engineer; disjoint sets propose an edge only
when the feature diagram links some feature pair across the two sets.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from .concept_builder import Concept, merge_concepts
from .curation import CurationError, CurationFile
from .errors import SplcmapError
from .feature_model import Dependency, FeatureModel, features_dependent


class RelationshipError(SplcmapError):
    """Concepts unusable for relationship analysis or bad edge curation."""


class Provenance(str, Enum):
    SUBSUME = "subsume"
    INTERSECTION = "intersection"
    DEPENDENCY = "dependency"
    CURATED = "curated"


DEFAULT_EDGE_LABEL = "related-to"


@dataclass(frozen=True)
class EdgeProposal:
    source: str  # concept id
    target: str  # concept id; for subsume proposals, the absorbed concept
    provenance: Provenance
    label: Optional[str] = None
    directed: bool = False


def _rank_key(concept: Concept) -> tuple:
    return (-(concept.relevance or 0.0), concept.label)


def propose_relationships(
    concepts: list[Concept], model: FeatureModel
) -> tuple[list[Concept], list[EdgeProposal]]:
    """Apply the pairwise trace-set rules; returns (survivors, proposals).

    Pairs are processed in descending relevance order (label breaks ties).
    Subsumption is iterated to a fixpoint: equal feature sets absorb the
    lower-relevance concept, strict subsets are absorbed by the superset
    concept regardless of rank.  Subsume proposals record the absorptions;
    intersection and dependency proposals are the drawable edges.
    """
    for concept in concepts:
        if not concept.features:
            raise RelationshipError(f"concept {concept.label!r} has no feature traces")

    work = sorted((replace(c) for c in concepts), key=_rank_key)
    proposals: list[EdgeProposal] = []

    changed = True
    while changed:
        changed = False
        for i in range(len(work)):
            for j in range(i + 1, len(work)):
                a, b = work[i], work[j]
                if b.features <= a.features:
                    work[i] = merge_concepts(a, b)
                    proposals.append(EdgeProposal(a.id, b.id, Provenance.SUBSUME))
                    del work[j]
                    changed = True
                    break
                if a.features < b.features:
                    work[j] = merge_concepts(b, a)
                    proposals.append(EdgeProposal(b.id, a.id, Provenance.SUBSUME))
                    del work[i]
                    changed = True
                    break
            if changed:
                break

    for i in range(len(work)):
        for j in range(i + 1, len(work)):
            a, b = work[i], work[j]
            if a.features & b.features:
                proposals.append(EdgeProposal(a.id, b.id, Provenance.INTERSECTION))
            else:
                dependent = any(
                    features_dependent(model, fa, fb) is Dependency.DEPENDENT
                    for fa in sorted(a.features)
                    for fb in sorted(b.features)
                )
                if dependent:
                    proposals.append(EdgeProposal(a.id, b.id, Provenance.DEPENDENCY))

    proposals.sort(key=lambda p: (p.provenance.value, p.source, p.target))
    return work, proposals


def apply_edge_curation(
    proposals: list[EdgeProposal],
    curation: CurationFile,
    concepts: list[Concept],
    strict: bool = True,
) -> list[EdgeProposal]:
    """Final edge list: curation may add, remove, relabel, and direct edges.

    Uncurated intersection and dependency proposals survive undirected with
    the default label; subsume proposals are bookkeeping and never drawn.
    """
    id_by_label = {c.label: c.id for c in concepts}
    known_ids = {c.id for c in concepts}
    unknown: list[str] = []

    def resolve(label: str) -> Optional[str]:
        concept_id = id_by_label.get(label)
        if concept_id is None:
            unknown.append(label)
        return concept_id

    edges: dict[frozenset[str], EdgeProposal] = {}
    for p in proposals:
        if p.provenance is Provenance.SUBSUME:
            continue
        if p.source not in known_ids or p.target not in known_ids:
            raise RelationshipError(
                f"proposal references a concept absent from the map: {p.source} -> {p.target}"
            )
        edges[frozenset((p.source, p.target))] = p

    for edit in curation.edge_removes:
        src, dst = resolve(edit.source), resolve(edit.target)
        if src is None or dst is None:
            continue
        edges.pop(frozenset((src, dst)), None)

    for edit in curation.edge_relabels:
        src, dst = resolve(edit.source), resolve(edit.target)
        if src is None or dst is None:
            continue
        key = frozenset((src, dst))
        existing = edges.get(key)
        if existing is None:
            continue
        edges[key] = replace(
            existing, source=src, target=dst, label=edit.label, directed=edit.directed
        )

    added: list[EdgeProposal] = []
    for edit in curation.edge_adds:
        src, dst = resolve(edit.source), resolve(edit.target)
        if src is None or dst is None:
            continue
        if src == dst:
            raise RelationshipError(f"edge connects concept {edit.source!r} to itself")
        key = frozenset((src, dst))
        if key in edges or any(frozenset((a.source, a.target)) == key for a in added):
            raise RelationshipError(
                f"duplicate edge after normalization: {edit.source!r} -> {edit.target!r}"
            )
        added.append(
            EdgeProposal(src, dst, Provenance.CURATED, label=edit.label, directed=edit.directed)
        )

    if strict and unknown:
        raise RelationshipError(
            "edge curation references unknown concepts: " + ", ".join(sorted(set(unknown)))
        )

    final = [
        p if p.label is not None else replace(p, label=DEFAULT_EDGE_LABEL)
        for p in list(edges.values()) + added
    ]
    final.sort(key=lambda p: (p.source, p.target, p.label or ""))
    return final
