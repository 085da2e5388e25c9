"""Feature diagram parsing, validation, and analysis.

The feature model drives everything downstream: hierarchy levels decide the
order in which core assets are analysed, and the tree plus cross-tree
constraints answer product-counting and dependency queries.

Text format (UTF-8, line based):
  * first non-comment line: root feature name at indent 0
  * each following line: 2 spaces of indent per level, then a marker and the
    feature name.  Markers: ``!`` mandatory, ``?`` optional, ``*`` or-group
    member, ``^`` alternative-group member.  Consecutive siblings with the
    same group marker form one group.
  * ``#`` starts a comment line, ``---`` on its own line switches to the
    constraint section: ``<name> requires <name>`` / ``<name> excludes <name>``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from math import prod
from typing import Iterator, Optional

from .errors import SplcmapError


class FeatureModelError(SplcmapError):
    """Malformed feature-model input or a broken model invariant."""


class Variability(str, Enum):
    MANDATORY = "mandatory"
    OPTIONAL = "optional"
    OR_MEMBER = "or_member"
    ALT_MEMBER = "alt_member"


class Phase(str, Enum):
    MANDATORY = "mandatory"
    VARIABLE = "variable"


class Dependency(str, Enum):
    DEPENDENT = "dependent"
    DISCONNECTED = "disconnected"


_MARKER_TO_VARIABILITY = {
    "!": Variability.MANDATORY,
    "?": Variability.OPTIONAL,
    "*": Variability.OR_MEMBER,
    "^": Variability.ALT_MEMBER,
}
_VARIABILITY_TO_MARKER = {v: m for m, v in _MARKER_TO_VARIABILITY.items()}
_GROUP_MARKERS = ("*", "^")
_GROUP_KIND = {"*": "or", "^": "alt"}

_IDENTIFIER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_CONSTRAINT_RE = re.compile(r"(\S+)\s+(requires|excludes)\s+(\S+)\s*\Z")

#: Upper bound on candidate configurations enumerated by count_products.
DEFAULT_PRODUCT_CAP = 1 << 22


@dataclass(frozen=True)
class Feature:
    name: str
    parent: Optional[str]
    level: int
    variability: Variability
    group_id: Optional[str] = None


@dataclass(frozen=True)
class CrossTreeConstraint:
    kind: str  # "requires" | "excludes"
    lhs: str
    rhs: str


@dataclass(frozen=True)
class TraversalBatch:
    level: int
    phase: Phase
    features: tuple[str, ...]


@dataclass(frozen=True)
class TraversalPlan:
    batches: tuple[TraversalBatch, ...]


@dataclass(frozen=True)
class FeatureModel:
    """A validated feature diagram.

    ``features`` holds the non-root features in declaration order; the root
    sits apart at level 0.  Instances are immutable and safe to share.
    """

    spl_name: str
    root: Feature
    features: tuple[Feature, ...]
    constraints: tuple[CrossTreeConstraint, ...] = ()

    def __post_init__(self) -> None:
        _validate(self)

    @cached_property
    def _by_name(self) -> dict[str, Feature]:
        index = {self.root.name: self.root}
        index.update({f.name: f for f in self.features})
        return index

    @cached_property
    def _children(self) -> dict[str, tuple[Feature, ...]]:
        kids: dict[str, list[Feature]] = {self.root.name: []}
        for f in self.features:
            kids.setdefault(f.name, [])
            kids.setdefault(f.parent, []).append(f)  # type: ignore[arg-type]
        return {name: tuple(lst) for name, lst in kids.items()}

    def has_feature(self, name: str) -> bool:
        return name in self._by_name

    def feature(self, name: str) -> Feature:
        try:
            return self._by_name[name]
        except KeyError:
            raise FeatureModelError(f"unknown feature name: {name!r}") from None

    def children(self, name: str) -> tuple[Feature, ...]:
        self.feature(name)
        return self._children.get(name, ())

    def ancestors(self, name: str) -> Iterator[str]:
        parent = self.feature(name).parent
        while parent is not None:
            yield parent
            parent = self.feature(parent).parent

    @property
    def feature_count(self) -> int:
        """Number of non-root features."""
        return len(self.features)

    @property
    def max_level(self) -> int:
        return max((f.level for f in self.features), default=0)


def _validate(model: FeatureModel) -> None:
    root = model.root
    if root.parent is not None or root.level != 0:
        raise FeatureModelError("root must have no parent and level 0")
    if root.group_id is not None:
        raise FeatureModelError("root cannot belong to a group")

    names = {root.name}
    for f in model.features:
        if f.name in names:
            raise FeatureModelError(f"duplicate feature name: {f.name!r}")
        names.add(f.name)

    by_name = {root.name: root}
    by_name.update({f.name: f for f in model.features})
    for f in model.features:
        if not _IDENTIFIER_RE.match(f.name):
            raise FeatureModelError(f"invalid feature name: {f.name!r}")
        if f.parent is None or f.parent not in by_name:
            raise FeatureModelError(f"feature {f.name!r} has unknown parent {f.parent!r}")
        if f.level != by_name[f.parent].level + 1:
            raise FeatureModelError(
                f"feature {f.name!r} has level {f.level}, expected parent level + 1"
            )
        in_group = f.variability in (Variability.OR_MEMBER, Variability.ALT_MEMBER)
        if in_group and f.group_id is None:
            raise FeatureModelError(f"group member {f.name!r} lacks a group id")
        if not in_group and f.group_id is not None:
            raise FeatureModelError(f"feature {f.name!r} must not carry a group id")

    groups: dict[str, list[Feature]] = {}
    for f in model.features:
        if f.group_id is not None:
            groups.setdefault(f.group_id, []).append(f)
    for gid, members in groups.items():
        if len(members) < 2:
            raise FeatureModelError(f"group {gid!r} has a single member")
        parents = {m.parent for m in members}
        kinds = {m.variability for m in members}
        if len(parents) > 1 or len(kinds) > 1:
            raise FeatureModelError(f"group {gid!r} mixes parents or variability kinds")

    for c in model.constraints:
        if c.kind not in ("requires", "excludes"):
            raise FeatureModelError(f"unknown constraint kind: {c.kind!r}")
        if c.lhs == c.rhs:
            raise FeatureModelError(f"constraint relates {c.lhs!r} to itself")
        for name in (c.lhs, c.rhs):
            if name not in by_name:
                raise FeatureModelError(f"constraint references unknown feature: {name!r}")


def parse_feature_model(text: str) -> FeatureModel:
    """Parse the line-based feature-model format into a validated model."""
    root_name: Optional[str] = None
    rows: list[tuple[str, str, str, int]] = []  # (name, parent, marker, line_no)
    constraints: list[CrossTreeConstraint] = []
    stack: list[str] = []  # stack[level] = feature name at that level
    in_constraints = False

    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped == "---":
            if root_name is None:
                raise FeatureModelError(f"line {line_no}: constraints before root feature")
            in_constraints = True
            continue
        if in_constraints:
            m = _CONSTRAINT_RE.match(stripped)
            if not m:
                raise FeatureModelError(f"line {line_no}: malformed constraint: {stripped!r}")
            constraints.append(CrossTreeConstraint(kind=m.group(2), lhs=m.group(1), rhs=m.group(3)))
            continue

        indent = len(raw) - len(raw.lstrip(" "))
        if root_name is None:
            if indent != 0:
                raise FeatureModelError(f"line {line_no}: root feature must not be indented")
            if not _IDENTIFIER_RE.match(stripped):
                raise FeatureModelError(f"line {line_no}: invalid root name: {stripped!r}")
            root_name = stripped
            stack = [root_name]
            continue

        if indent % 2 != 0:
            raise FeatureModelError(f"line {line_no}: indentation must use 2 spaces per level")
        level = indent // 2
        if level < 1:
            raise FeatureModelError(f"line {line_no}: only one root feature is allowed")
        if level > len(stack):
            raise FeatureModelError(f"line {line_no}: indentation jump past parent level")
        marker = stripped[0]
        if marker not in _MARKER_TO_VARIABILITY:
            raise FeatureModelError(
                f"line {line_no}: missing variability marker (one of ! ? * ^)"
            )
        name = stripped[1:].strip()
        if not _IDENTIFIER_RE.match(name):
            raise FeatureModelError(f"line {line_no}: invalid feature name: {name!r}")
        parent = stack[level - 1]
        del stack[level:]
        stack.append(name)
        rows.append((name, parent, marker, line_no))

    if root_name is None:
        raise FeatureModelError("empty input: no root feature found")

    # Group assignment: runs of consecutive same-marker siblings become groups.
    group_of: dict[str, str] = {}
    group_seq: dict[str, int] = {}
    children_rows: dict[str, list[tuple[str, str, int]]] = {}
    for name, parent, marker, line_no in rows:
        children_rows.setdefault(parent, []).append((name, marker, line_no))
    for parent, kids in children_rows.items():
        run: list[str] = []
        run_marker = ""

        def flush() -> None:
            if not run:
                return
            if len(run) == 1:
                raise FeatureModelError(
                    f"group under {parent!r} has a single member: {run[0]!r}"
                )
            seq = group_seq.get(parent, 0) + 1
            group_seq[parent] = seq
            gid = f"{parent}/{_GROUP_KIND[run_marker]}{seq}"
            for member in run:
                group_of[member] = gid

        for name, marker, _line in kids:
            if marker in _GROUP_MARKERS and marker == run_marker:
                run.append(name)
                continue
            flush()
            if marker in _GROUP_MARKERS:
                run, run_marker = [name], marker
            else:
                run, run_marker = [], ""
        flush()

    levels = {root_name: 0}
    features = []
    for name, parent, marker, _line in rows:
        levels[name] = levels[parent] + 1
        features.append(
            Feature(
                name=name,
                parent=parent,
                level=levels[name],
                variability=_MARKER_TO_VARIABILITY[marker],
                group_id=group_of.get(name),
            )
        )

    root = Feature(name=root_name, parent=None, level=0, variability=Variability.MANDATORY)
    return FeatureModel(
        spl_name=root_name,
        root=root,
        features=tuple(features),
        constraints=tuple(constraints),
    )


def serialize_feature_model(model: FeatureModel) -> str:
    """Emit the canonical text form; parse(serialize(m)) is structurally m."""
    lines = [model.root.name]

    def emit(name: str) -> None:
        for child in model.children(name):
            marker = _VARIABILITY_TO_MARKER[child.variability]
            lines.append("  " * child.level + marker + child.name)
            emit(child.name)

    emit(model.root.name)
    if model.constraints:
        lines.append("---")
        for c in model.constraints:
            lines.append(f"{c.lhs} {c.kind} {c.rhs}")
    return "\n".join(lines) + "\n"


def traversal_plan(model: FeatureModel) -> TraversalPlan:
    """Batch non-root features by (level, mandatory-then-variable), names sorted."""
    buckets: dict[tuple[int, Phase], list[str]] = {}
    for f in model.features:
        phase = Phase.MANDATORY if f.variability is Variability.MANDATORY else Phase.VARIABLE
        buckets.setdefault((f.level, phase), []).append(f.name)
    batches = []
    for level in sorted({k[0] for k in buckets}):
        for phase in (Phase.MANDATORY, Phase.VARIABLE):
            names = buckets.get((level, phase))
            if names:
                batches.append(TraversalBatch(level, phase, tuple(sorted(names))))
    return TraversalPlan(tuple(batches))


def _child_units(
    model: FeatureModel, name: str
) -> tuple[list[str], list[str], list[tuple[str, list[str]]]]:
    """Split children into mandatory names, optional names, and groups."""
    mandatory: list[str] = []
    optional: list[str] = []
    groups: dict[str, tuple[str, list[str]]] = {}
    for child in model.children(name):
        if child.variability is Variability.MANDATORY:
            mandatory.append(child.name)
        elif child.variability is Variability.OPTIONAL:
            optional.append(child.name)
        else:
            kind = "or" if child.variability is Variability.OR_MEMBER else "alt"
            groups.setdefault(child.group_id, (kind, []))[1].append(child.name)  # type: ignore[arg-type]
    return mandatory, optional, [groups[g] for g in groups]


def _subtree_ways(model: FeatureModel, name: str) -> int:
    """Number of tree-valid selections of the subtree, given `name` selected."""
    mandatory, optional, groups = _child_units(model, name)
    total = 1
    for c in mandatory:
        total *= _subtree_ways(model, c)
    for c in optional:
        total *= 1 + _subtree_ways(model, c)
    for kind, members in groups:
        ways = [_subtree_ways(model, m) for m in members]
        if kind == "alt":
            total *= sum(ways)
        else:
            total *= prod(1 + w for w in ways) - 1
    return total


def _subtree_configs(model: FeatureModel, name: str, bits: dict[str, int]) -> Iterator[int]:
    """Yield every tree-valid selection mask for the subtree, `name` included."""
    mandatory, optional, groups = _child_units(model, name)
    units: list = []
    for c in mandatory:
        units.append(("sub", c))
    for c in optional:
        units.append(("opt", c))
    for kind, members in groups:
        units.append((kind, members))

    def unit_masks(unit) -> Iterator[int]:
        tag, payload = unit
        if tag == "sub":
            yield from _subtree_configs(model, payload, bits)
        elif tag == "opt":
            yield 0
            yield from _subtree_configs(model, payload, bits)
        elif tag == "alt":
            for m in payload:
                yield from _subtree_configs(model, m, bits)
        else:  # or-group: every non-empty member combination
            def rec_or(i: int, acc: int, any_sel: bool) -> Iterator[int]:
                if i == len(payload):
                    if any_sel:
                        yield acc
                    return
                yield from rec_or(i + 1, acc, any_sel)
                for part in _subtree_configs(model, payload[i], bits):
                    yield from rec_or(i + 1, acc | part, True)

            yield from rec_or(0, 0, False)

    def rec(i: int, acc: int) -> Iterator[int]:
        if i == len(units):
            yield acc
            return
        for part in unit_masks(units[i]):
            yield from rec(i + 1, acc | part)

    yield from rec(0, bits[name])


def count_products(model: FeatureModel, cap: int = DEFAULT_PRODUCT_CAP) -> Optional[int]:
    """Exact product count, or None when the candidate space exceeds `cap`.

    Candidates are the tree-valid selections (mandatory forced under a selected
    parent, alternative groups pick exactly one, or-groups at least one,
    optionals free); each candidate is then checked against the cross-tree
    constraints.  None means "exceeds cap", not an error.
    """
    if cap < 1:
        raise FeatureModelError("cap must be positive")
    candidates = _subtree_ways(model, model.root.name)
    if candidates > cap:
        return None
    if not model.constraints:
        return candidates

    bits = {model.root.name: 1}
    for i, f in enumerate(model.features):
        bits[f.name] = 1 << (i + 1)
    rules = [(c.kind, bits[c.lhs], bits[c.rhs]) for c in model.constraints]

    count = 0
    for mask in _subtree_configs(model, model.root.name, bits):
        ok = True
        for kind, lbit, rbit in rules:
            if kind == "requires":
                if mask & lbit and not mask & rbit:
                    ok = False
                    break
            else:
                if mask & lbit and mask & rbit:
                    ok = False
                    break
        if ok:
            count += 1
    return count


def features_dependent(model: FeatureModel, f1: str, f2: str) -> Dependency:
    """Dependent iff linked by a cross-tree constraint or by ancestry."""
    model.feature(f1)
    model.feature(f2)
    for c in model.constraints:
        if {c.lhs, c.rhs} == {f1, f2}:
            return Dependency.DEPENDENT
    if f1 != f2 and (f2 in model.ancestors(f1) or f1 in model.ancestors(f2)):
        return Dependency.DEPENDENT
    return Dependency.DISCONNECTED
