"""The domain engineer's recorded manual decisions.

A curation document is JSON with the keys `merge` (list of label lists),
`rename` (old label to new label map), `drop` (label list), `select` (label
list), `definitions` (label to text map), and `edges` with `add` / `remove` /
`relabel` entry lists of {source, target, label, directed}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import SplcmapError


class CurationError(SplcmapError):
    """Malformed curation file or references that never resolve."""


@dataclass(frozen=True)
class EdgeEdit:
    source: str
    target: str
    label: Optional[str] = None
    directed: bool = False


@dataclass(frozen=True)
class CurationFile:
    merges: tuple[tuple[str, ...], ...] = ()
    renames: tuple[tuple[str, str], ...] = ()
    drops: tuple[str, ...] = ()
    selects: Optional[tuple[str, ...]] = None
    definitions: tuple[tuple[str, str], ...] = ()
    edge_adds: tuple[EdgeEdit, ...] = ()
    edge_removes: tuple[EdgeEdit, ...] = ()
    edge_relabels: tuple[EdgeEdit, ...] = ()

    @classmethod
    def empty(cls) -> "CurationFile":
        return cls()

    def is_empty(self) -> bool:
        return self == CurationFile()

    @classmethod
    def from_dict(cls, data: dict) -> "CurationFile":
        known = {"merge", "rename", "drop", "select", "definitions", "edges"}
        extra = set(data) - known
        if extra:
            raise CurationError(f"unknown curation keys: {sorted(extra)}")
        for group in data.get("merge", ()):
            if not isinstance(group, list) or len(group) < 2:
                raise CurationError(f"merge entries need at least two labels: {group!r}")
        edges = data.get("edges", {})
        extra_edge = set(edges) - {"add", "remove", "relabel"}
        if extra_edge:
            raise CurationError(f"unknown edge curation keys: {sorted(extra_edge)}")

        def edits(entries, require_label: bool) -> tuple[EdgeEdit, ...]:
            out = []
            for e in entries:
                if "source" not in e or "target" not in e:
                    raise CurationError(f"edge entry needs source and target: {e!r}")
                if require_label and "label" not in e:
                    raise CurationError(f"edge entry needs a label: {e!r}")
                out.append(
                    EdgeEdit(
                        source=e["source"],
                        target=e["target"],
                        label=e.get("label"),
                        directed=bool(e.get("directed", False)),
                    )
                )
            return tuple(out)

        select = data.get("select")
        return cls(
            merges=tuple(tuple(g) for g in data.get("merge", ())),
            renames=tuple((old, new) for old, new in data.get("rename", {}).items()),
            drops=tuple(data.get("drop", ())),
            selects=tuple(select) if select is not None else None,
            definitions=tuple((k, v) for k, v in data.get("definitions", {}).items()),
            edge_adds=edits(edges.get("add", ()), require_label=True),
            edge_removes=edits(edges.get("remove", ()), require_label=False),
            edge_relabels=edits(edges.get("relabel", ()), require_label=True),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "CurationFile":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise CurationError(f"cannot read curation file {path}: {exc}") from exc
        return cls.from_dict(data)

    def referenced_labels(self) -> frozenset[str]:
        """Labels the document expects to exist at some point of the run."""
        refs: set[str] = set()
        for group in self.merges:
            refs.update(group)
        refs.update(old for old, _new in self.renames)
        refs.update(self.drops)
        if self.selects:
            refs.update(self.selects)
        refs.update(label for label, _text in self.definitions)
        for edit in self.edge_adds + self.edge_removes + self.edge_relabels:
            refs.add(edit.source)
            refs.add(edit.target)
        return frozenset(refs)
