"""Keyword clustering, relevance calculation, ranking, and curation.

Keywords with equal normal form are pre-merged, then clustered by average-link
agglomerative clustering over cosine similarity of their per-asset frequency
vectors.  Each concept's relevance is the product of four frequencies: its
occurrence count relative to the concept count, and its feature, asset, and
asset-type trace counts relative to the corpus totals.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import AbstractSet, Optional

from .asset_scanner import AssetKind
from .curation import CurationError, CurationFile
from .errors import SplcmapError
from .lexicon import Keyword


class ConceptError(SplcmapError):
    """Invalid clustering parameters or corpus statistics."""


DEFAULT_SIMILARITY_THRESHOLD = 0.6


@dataclass
class Concept:
    id: str
    label: str
    members: tuple[Keyword, ...]
    occurrences: int
    features: frozenset[str]
    assets: frozenset[str]
    asset_kinds: frozenset[AssetKind]
    level: Optional[int] = None
    relevance: Optional[float] = None
    definition: Optional[str] = None

    @property
    def member_surfaces(self) -> tuple[str, ...]:
        return tuple(sorted({kw.surface for kw in self.members}))


@dataclass(frozen=True)
class CorpusStats:
    concept_count: int
    feature_count: int
    asset_count: int
    asset_type_count: int


def slugify(label: str) -> str:
    slug = re.sub(r"[^A-Za-z0-9]+", "-", label.lower()).strip("-")
    return slug or "concept"


def merge_concepts(target: Concept, source: Concept) -> Concept:
    """Union members and traces into `target`; id, label, level are kept."""
    level = target.level
    if source.level is not None:
        level = source.level if level is None else min(level, source.level)
    return replace(
        target,
        members=target.members + source.members,
        occurrences=target.occurrences + source.occurrences,
        features=target.features | source.features,
        assets=target.assets | source.assets,
        asset_kinds=target.asset_kinds | source.asset_kinds,
        level=level,
        definition=target.definition or source.definition,
    )


@dataclass
class _Unit:
    norm: str
    keywords: list[Keyword]
    occurrences: int
    vector: dict[str, int]

    @property
    def label(self) -> str:
        best = sorted(self.keywords, key=lambda kw: (-kw.occurrences, kw.surface))[0]
        return best.surface


def _cosine(u: dict[str, int], v: dict[str, int]) -> float:
    if len(u) > len(v):
        u, v = v, u
    dot = sum(count * v.get(path, 0) for path, count in u.items())
    if not dot:
        return 0.0
    nu = math.sqrt(sum(c * c for c in u.values()))
    nv = math.sqrt(sum(c * c for c in v.values()))
    return dot / (nu * nv)


def cluster_keywords(
    keywords: list[Keyword], tau: float = DEFAULT_SIMILARITY_THRESHOLD
) -> list[Concept]:
    """Deterministic average-link clustering of keywords into concepts.

    Merging continues while the best cluster-pair similarity reaches `tau`;
    ties prefer the pair with the higher combined occurrence count, then the
    lexicographically smaller label pair.  Output order: occurrences desc,
    label asc.
    """
    if not 0 < tau <= 1:
        raise ConceptError("similarity threshold must be in (0, 1]")
    if not keywords:
        return []

    units: dict[str, _Unit] = {}
    for kw in sorted(keywords, key=lambda k: k.surface):
        unit = units.setdefault(kw.norm, _Unit(kw.norm, [], 0, {}))
        unit.keywords.append(kw)
        unit.occurrences += kw.occurrences
        for path, count in kw.asset_counts.items():
            unit.vector[path] = unit.vector.get(path, 0) + count
    unit_list = [units[n] for n in sorted(units)]

    sim_cache: dict[tuple[int, int], float] = {}

    def unit_sim(i: int, j: int) -> float:
        key = (min(i, j), max(i, j))
        if key not in sim_cache:
            sim_cache[key] = _cosine(unit_list[key[0]].vector, unit_list[key[1]].vector)
        return sim_cache[key]

    clusters: list[list[int]] = [[i] for i in range(len(unit_list))]

    def cluster_label(members: list[int]) -> str:
        kws = [kw for i in members for kw in unit_list[i].keywords]
        best = sorted(kws, key=lambda kw: (-kw.occurrences, kw.surface))[0]
        return best.surface

    def cluster_occ(members: list[int]) -> int:
        return sum(unit_list[i].occurrences for i in members)

    while len(clusters) > 1:
        best_key = None
        best_pair = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                sims = [unit_sim(i, j) for i in clusters[a] for j in clusters[b]]
                sim = sum(sims) / len(sims)
                if sim < tau:
                    continue
                labels = sorted((cluster_label(clusters[a]), cluster_label(clusters[b])))
                key = (-sim, -(cluster_occ(clusters[a]) + cluster_occ(clusters[b])), labels[0], labels[1])
                if best_key is None or key < best_key:
                    best_key = key
                    best_pair = (a, b)
        if best_pair is None:
            break
        a, b = best_pair
        clusters[a] = clusters[a] + clusters[b]
        del clusters[b]

    concepts = []
    used_ids: set[str] = set()
    for members in clusters:
        kws = sorted(
            (kw for i in members for kw in unit_list[i].keywords), key=lambda kw: kw.surface
        )
        label = cluster_label(members)
        concepts.append(
            Concept(
                id="",
                label=label,
                members=tuple(kws),
                occurrences=cluster_occ(members),
                features=frozenset().union(*(kw.features for kw in kws)),
                assets=frozenset().union(*(kw.assets for kw in kws)),
                asset_kinds=frozenset().union(*(kw.asset_kinds for kw in kws)),
            )
        )
    concepts.sort(key=lambda c: (-c.occurrences, c.label))
    for concept in concepts:
        concept.id = _unique_id(slugify(concept.label), used_ids)
    return concepts


def _unique_id(base: str, used: set[str]) -> str:
    candidate = base
    counter = 2
    while candidate in used:
        candidate = f"{base}-{counter}"
        counter += 1
    used.add(candidate)
    return candidate


def relevance(concept: Concept, stats: CorpusStats) -> float:
    """Product of concept, feature, asset, and asset-type frequencies."""
    if min(
        stats.concept_count, stats.feature_count, stats.asset_count, stats.asset_type_count
    ) < 1:
        raise ConceptError("empty corpus statistics")
    f = len(concept.features)
    a = len(concept.assets)
    at = len(concept.asset_kinds)
    if min(concept.occurrences, f, a, at) < 1:
        raise ConceptError(f"concept {concept.label!r} has no trace statistics")
    return (
        (concept.occurrences / stats.concept_count)
        * (f / stats.feature_count)
        * (a / stats.asset_count)
        * (at / stats.asset_type_count)
    )


def rank_concepts(concepts: list[Concept], stats: CorpusStats) -> list[Concept]:
    """Order by relevance desc, then occurrences desc, then label asc."""
    for concept in concepts:
        concept.relevance = relevance(concept, stats)
    return sorted(concepts, key=lambda c: (-(c.relevance or 0.0), -c.occurrences, c.label))


def apply_curation(
    concepts: list[Concept],
    curation: CurationFile,
    stats: Optional[CorpusStats] = None,
    protected: AbstractSet[str] = frozenset(),
    strict: bool = True,
) -> list[Concept]:
    """Apply merge, rename, drop, and select decisions, then definitions.

    `protected` holds concept ids kept through a select regardless of the
    select list (concepts carried over from previously processed levels).
    With `strict` (the default), references that cannot resolve raise; the
    pipeline passes strict=False while replaying one curation file across
    levels and checks leftovers itself.  Applying the same curation twice is
    a no-op the second time.
    """
    work = [replace(c) for c in concepts]
    unknown: list[str] = []

    def find(label: str) -> Optional[int]:
        for i, c in enumerate(work):
            if c.label == label:
                return i
        return None

    for group in curation.merges:
        target_idx = find(group[0])
        if target_idx is None:
            if not any(find(lbl) is not None for lbl in group):
                unknown.append(f"merge of nonexistent label {group[0]!r}")
            elif strict:
                unknown.append(f"merge target {group[0]!r} does not exist")
            continue
        merged = work[target_idx]
        for label in group[1:]:
            idx = find(label)
            if idx is None:
                continue  # already absorbed on an earlier application
            merged = merge_concepts(merged, work[idx])
            del work[idx]
        work[find(group[0])] = merged  # type: ignore[index]

    for old, new in curation.renames:
        old_idx = find(old)
        if old_idx is None:
            if find(new) is None:
                unknown.append(f"rename of nonexistent label {old!r}")
            continue
        if find(new) is not None:
            unknown.append(f"rename target {new!r} already exists")
            continue
        work[old_idx].label = new

    for label in curation.drops:
        idx = find(label)
        if idx is not None:
            del work[idx]

    if curation.selects is not None:
        selected: set[str] = set()
        for label in curation.selects:
            idx = find(label)
            if idx is None:
                unknown.append(f"select of dropped or unknown label {label!r}")
                continue
            selected.add(work[idx].id)
        work = [c for c in work if c.id in selected or c.id in protected]

    for label, text in curation.definitions:
        idx = find(label)
        if idx is not None:
            work[idx].definition = text
        elif strict:
            unknown.append(f"definition for unknown label {label!r}")

    if strict and unknown:
        raise CurationError("unresolved curation references: " + "; ".join(unknown))

    if stats is not None and work:
        return rank_concepts(work, replace(stats, concept_count=len(work)))
    return work
