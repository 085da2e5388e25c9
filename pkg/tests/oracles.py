"""Independent brute-force oracles used by unit and acceptance tests.

These deliberately avoid the production code paths they check: the product
counter enumerates every subset of non-root features as a bitmask array, and
the relationship oracle transcribes the pairwise trace-set rules directly.
"""

from __future__ import annotations

import numpy as np

from splcmap.feature_model import Dependency, FeatureModel, Variability, features_dependent


def subset_enumeration_product_count(model: FeatureModel) -> int:
    """Count valid products by filtering all 2^n subsets of non-root features."""
    names = [f.name for f in model.features]
    n = len(names)
    index = {name: i for i, name in enumerate(names)}
    masks = np.arange(1 << n, dtype=np.uint64)

    def selected(name: str) -> np.ndarray:
        if name == model.root.name:
            return np.ones(1 << n, dtype=bool)
        return ((masks >> np.uint64(index[name])) & np.uint64(1)).astype(bool)

    valid = np.ones(1 << n, dtype=bool)
    groups: dict[str, list[str]] = {}
    for f in model.features:
        parent_sel = selected(f.parent)
        child_sel = selected(f.name)
        valid &= ~child_sel | parent_sel
        if f.variability is Variability.MANDATORY:
            valid &= ~parent_sel | child_sel
        if f.group_id is not None:
            groups.setdefault(f.group_id, []).append(f.name)

    for group_names in groups.values():
        parent = model.feature(group_names[0]).parent
        parent_sel = selected(parent)
        count = np.zeros(1 << n, dtype=np.int64)
        for name in group_names:
            count += selected(name).astype(np.int64)
        kind = model.feature(group_names[0]).variability
        if kind is Variability.ALT_MEMBER:
            valid &= ~parent_sel | (count == 1)
        else:
            valid &= ~parent_sel | (count >= 1)

    for c in model.constraints:
        lhs, rhs = selected(c.lhs), selected(c.rhs)
        if c.kind == "requires":
            valid &= ~lhs | rhs
        else:
            valid &= ~(lhs & rhs)

    return int(valid.sum())


def pairwise_rule_relationships(concept_rows, model: FeatureModel):
    """Literal application of the three trace-set rules to every pair.

    `concept_rows` is a list of (id, label, relevance, feature frozenset).
    Returns (survivor id set, survivor feature-set map, proposal tuple set)
    where proposals are (source, target, provenance) triples.
    """
    work = sorted(concept_rows, key=lambda r: (-r[2], r[1]))
    work = [list(r) for r in work]
    proposals = set()

    changed = True
    while changed:
        changed = False
        for i in range(len(work)):
            for j in range(i + 1, len(work)):
                a, b = work[i], work[j]
                if b[3] <= a[3]:
                    proposals.add((a[0], b[0], "subsume"))
                    del work[j]
                    changed = True
                    break
                if a[3] < b[3]:
                    proposals.add((b[0], a[0], "subsume"))
                    del work[i]
                    changed = True
                    break
            if changed:
                break

    for i in range(len(work)):
        for j in range(i + 1, len(work)):
            a, b = work[i], work[j]
            if a[3] & b[3]:
                proposals.add((a[0], b[0], "intersection"))
            else:
                if any(
                    features_dependent(model, fa, fb) is Dependency.DEPENDENT
                    for fa in a[3]
                    for fb in b[3]
                ):
                    proposals.add((a[0], b[0], "dependency"))

    survivors = {r[0] for r in work}
    feature_sets = {r[0]: r[3] for r in work}
    return survivors, feature_sets, proposals
