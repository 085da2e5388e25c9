"""Corpus scanning: variation points, asset classification, trace recovery.

Two annotation dialects are recognised:

* preprocessor: ``#ifdef NAME`` / ``#ifndef NAME`` / ``#else`` / ``#endif``
  at line start, ignoring leading whitespace;
* PVSCL: ``PVSCL:IFCOND(EXPR)`` / ``PVSCL:ELSECOND`` / ``PVSCL:ENDCOND``
  anywhere in a line (normally inside a comment).

A variation point spans the guarded body lines only (markers excluded); the
effective condition of a nested block is the conjunction of every enclosing
block condition.  Files with unbalanced markers are skipped and reported.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Optional

from . import conditions
from .conditions import Expr
from .errors import SplcmapError


class ScanError(SplcmapError):
    """Unusable scan configuration or corpus root."""


class AssetKind(str, Enum):
    CODE = "code"
    DOCUMENTATION = "documentation"
    REQUIREMENT = "requirement"


DIALECT_PREPROCESSOR = "preprocessor"
DIALECT_PVSCL = "pvscl"
_KNOWN_DIALECTS = (DIALECT_PREPROCESSOR, DIALECT_PVSCL)

DEFAULT_MAX_FILE_BYTES = 1 << 20

DEFAULT_EXTENSIONS = {
    ".js": AssetKind.CODE,
    ".ts": AssetKind.CODE,
    ".c": AssetKind.CODE,
    ".h": AssetKind.CODE,
    ".py": AssetKind.CODE,
    ".java": AssetKind.CODE,
    ".md": AssetKind.DOCUMENTATION,
    ".rst": AssetKind.DOCUMENTATION,
    ".html": AssetKind.DOCUMENTATION,
}

_IFDEF_RE = re.compile(r"^\s*#(ifdef|ifndef)\s+([A-Za-z_][A-Za-z0-9_]*)\s*$")
_ELSE_RE = re.compile(r"^\s*#else\s*$")
_ENDIF_RE = re.compile(r"^\s*#endif\s*$")
_PVSCL_IF = "PVSCL:IFCOND("
_PVSCL_ELSE = "PVSCL:ELSECOND"
_PVSCL_END = "PVSCL:ENDCOND"
_FRONT_MATTER_RE = re.compile(r"features:\s*([A-Za-z_][A-Za-z0-9_]*(?:\s*,\s*[A-Za-z_][A-Za-z0-9_]*)*)")


@dataclass(frozen=True)
class ScanConfig:
    extensions: dict[str, AssetKind] = field(default_factory=lambda: dict(DEFAULT_EXTENSIONS))
    requirement_dirs: tuple[str, ...] = ()
    dialects: tuple[str, ...] = _KNOWN_DIALECTS
    max_file_bytes: int = DEFAULT_MAX_FILE_BYTES

    def __post_init__(self) -> None:
        if not self.dialects:
            raise ScanError("at least one annotation dialect must be enabled")
        for d in self.dialects:
            if d not in _KNOWN_DIALECTS:
                raise ScanError(f"unknown annotation dialect: {d!r}")
        if self.max_file_bytes < 1:
            raise ScanError("max_file_bytes must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "ScanConfig":
        known = {"extensions", "requirement_dirs", "dialects", "max_file_bytes"}
        extra = set(data) - known
        if extra:
            raise ScanError(f"unknown scan configuration keys: {sorted(extra)}")
        extensions = {
            ext: AssetKind(kind) for ext, kind in data.get("extensions", {}).items()
        } or dict(DEFAULT_EXTENSIONS)
        return cls(
            extensions=extensions,
            requirement_dirs=tuple(data.get("requirement_dirs", ())),
            dialects=tuple(data.get("dialects", _KNOWN_DIALECTS)),
            max_file_bytes=int(data.get("max_file_bytes", DEFAULT_MAX_FILE_BYTES)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ScanConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ScanError(f"cannot read scan configuration {path}: {exc}") from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class Asset:
    path: str
    kind: AssetKind
    size: int  # line count


@dataclass(frozen=True)
class VariationPoint:
    asset: str
    span: tuple[int, int]  # 1-based, inclusive, body lines only
    condition: Expr
    positive_features: frozenset[str]
    mentioned_features: frozenset[str]

    @property
    def condition_text(self) -> str:
        return conditions.to_text(self.condition)


@dataclass(frozen=True)
class Segment:
    asset: str
    span: tuple[int, int]
    text: str


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "warning" | "error"
    path: str
    line: Optional[int]
    message: str


@dataclass(frozen=True)
class Scattering:
    vp_count: int
    file_count: int


@dataclass(frozen=True)
class TraceMetrics:
    scattering: dict[str, Scattering]
    tangling: dict[str, frozenset[str]]


@dataclass(frozen=True)
class TraceTable:
    """Canonical, immutable result of a corpus scan."""

    assets: tuple[Asset, ...]
    variation_points: tuple[VariationPoint, ...]
    feature_segments: dict[str, tuple[Segment, ...]]
    doc_bindings: dict[str, frozenset[str]]
    doc_texts: dict[str, str]
    diagnostics: tuple[Diagnostic, ...] = ()
    known_features: Optional[frozenset[str]] = None

    @property
    def asset_count(self) -> int:
        return len(self.assets)

    @property
    def asset_type_count(self) -> int:
        return len({a.kind for a in self.assets})

    def asset_kind(self, path: str) -> AssetKind:
        for a in self.assets:
            if a.path == path:
                return a.kind
        raise ScanError(f"unknown asset path: {path!r}")

    def to_dict(self) -> dict:
        return {
            "assets": [
                {"path": a.path, "kind": a.kind.value, "size": a.size} for a in self.assets
            ],
            "variation_points": [
                {
                    "asset": vp.asset,
                    "span": list(vp.span),
                    "condition": vp.condition_text,
                    "positive_features": sorted(vp.positive_features),
                    "mentioned_features": sorted(vp.mentioned_features),
                }
                for vp in self.variation_points
            ],
            "feature_segments": {
                feature: [
                    {"asset": s.asset, "span": list(s.span), "text": s.text} for s in segs
                ]
                for feature, segs in sorted(self.feature_segments.items())
            },
            "doc_bindings": {
                path: sorted(names) for path, names in sorted(self.doc_bindings.items())
            },
            "diagnostics": [
                {
                    "severity": d.severity,
                    "path": d.path,
                    "line": d.line,
                    "message": d.message,
                }
                for d in self.diagnostics
            ],
        }

    def to_json_text(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


@dataclass
class _Frame:
    condition: Expr
    marker_line: int
    dialect: str
    saw_else: bool = False


class _UnbalancedMarkers(Exception):
    def __init__(self, line: int, message: str):
        super().__init__(message)
        self.line = line
        self.message = message


def _match_marker(line: str, dialects: tuple[str, ...]) -> Optional[tuple[str, str, Optional[str]]]:
    """Return (kind, dialect, payload) for a marker line, else None."""
    if DIALECT_PREPROCESSOR in dialects:
        m = _IFDEF_RE.match(line)
        if m:
            payload = m.group(2) if m.group(1) == "ifdef" else "NOT " + m.group(2)
            return ("open", DIALECT_PREPROCESSOR, payload)
        if _ELSE_RE.match(line):
            return ("else", DIALECT_PREPROCESSOR, None)
        if _ENDIF_RE.match(line):
            return ("close", DIALECT_PREPROCESSOR, None)
    if DIALECT_PVSCL in dialects:
        start = line.find(_PVSCL_IF)
        if start != -1:
            depth = 1
            pos = start + len(_PVSCL_IF)
            while pos < len(line) and depth:
                if line[pos] == "(":
                    depth += 1
                elif line[pos] == ")":
                    depth -= 1
                pos += 1
            if depth:
                raise _UnbalancedMarkers(0, "unclosed PVSCL:IFCOND parenthesis")
            return ("open", DIALECT_PVSCL, line[start + len(_PVSCL_IF) : pos - 1])
        if _PVSCL_ELSE in line:
            return ("else", DIALECT_PVSCL, None)
        if _PVSCL_END in line:
            return ("close", DIALECT_PVSCL, None)
    return None


def _scan_lines(lines: list[str], dialects: tuple[str, ...]) -> list[tuple[tuple[int, int], Expr]]:
    """Extract (body span, effective condition) blocks; raise on imbalance."""
    stack: list[_Frame] = []
    blocks: list[tuple[tuple[int, int], Expr]] = []

    def emit(upto: int) -> None:
        frame = stack[-1]
        effective = conditions.conjoin([f.condition for f in stack])
        start, end = frame.marker_line + 1, upto - 1
        if start <= end:
            blocks.append(((start, end), effective))

    for line_no, line in enumerate(lines, start=1):
        try:
            marker = _match_marker(line, dialects)
        except _UnbalancedMarkers as exc:
            raise _UnbalancedMarkers(line_no, exc.message) from None
        if marker is None:
            continue
        kind, dialect, payload = marker
        if kind == "open":
            try:
                cond = conditions.parse_condition(payload)
            except conditions.ConditionError as exc:
                raise _UnbalancedMarkers(line_no, f"bad condition: {exc}") from None
            stack.append(_Frame(cond, line_no, dialect))
        elif kind == "else":
            if not stack or stack[-1].dialect != dialect:
                raise _UnbalancedMarkers(line_no, "else marker without matching open marker")
            if stack[-1].saw_else:
                raise _UnbalancedMarkers(line_no, "duplicate else marker in block")
            emit(line_no)
            stack[-1].condition = conditions.negate(stack[-1].condition)
            stack[-1].marker_line = line_no
            stack[-1].saw_else = True
        else:
            if not stack or stack[-1].dialect != dialect:
                raise _UnbalancedMarkers(line_no, "close marker without matching open marker")
            emit(line_no)
            stack.pop()
    if stack:
        raise _UnbalancedMarkers(stack[-1].marker_line, "block never closed")
    return blocks


def _default_file_lister(root: Path) -> Iterable[Path]:
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in sorted(filenames):
            yield Path(dirpath) / name


def _classify(rel_path: str, config: ScanConfig) -> Optional[AssetKind]:
    # Requirement directories win over the extension map.
    parts = rel_path.split("/")
    for req_dir in config.requirement_dirs:
        req_parts = [p for p in req_dir.split("/") if p]
        if parts[: len(req_parts)] == req_parts:
            return AssetKind.REQUIREMENT
    ext = os.path.splitext(rel_path)[1]
    return config.extensions.get(ext)


def scan_corpus(
    root: str | Path,
    config: ScanConfig,
    known_features: Optional[frozenset[str]] = None,
    file_lister: Optional[Callable[[Path], Iterable[Path]]] = None,
) -> TraceTable:
    """Scan every matching file under `root` into a canonical TraceTable.

    `known_features`, when given, turns condition or front-matter names absent
    from it into warning diagnostics (the traces are kept).  `file_lister`
    exists so tests can present files in arbitrary order; the result is
    canonically sorted and therefore order independent.
    """
    root = Path(root)
    if not root.is_dir():
        raise ScanError(f"corpus root does not exist: {root}")
    lister = file_lister or _default_file_lister

    assets: list[Asset] = []
    vps: list[VariationPoint] = []
    segments: dict[str, list[Segment]] = {}
    doc_bindings: dict[str, frozenset[str]] = {}
    doc_texts: dict[str, str] = {}
    diagnostics: set[Diagnostic] = set()

    for path in lister(root):
        rel = path.relative_to(root).as_posix()
        kind = _classify(rel, config)
        if kind is None:
            continue
        try:
            size = path.stat().st_size
        except OSError as exc:
            diagnostics.add(Diagnostic("error", rel, None, f"unreadable file: {exc}"))
            continue
        if size > config.max_file_bytes:
            diagnostics.add(
                Diagnostic("warning", rel, None, f"file exceeds {config.max_file_bytes} bytes, skipped")
            )
            continue
        raw = path.read_bytes()
        if b"\0" in raw[:8192]:
            diagnostics.add(Diagnostic("warning", rel, None, "binary file skipped"))
            continue
        text = raw.decode("utf-8", errors="replace")
        lines = text.splitlines()

        try:
            blocks = _scan_lines(lines, config.dialects)
        except _UnbalancedMarkers as exc:
            diagnostics.add(
                Diagnostic("error", rel, exc.line, f"unbalanced block markers: {exc.message}")
            )
            continue

        assets.append(Asset(path=rel, kind=kind, size=len(lines)))

        for span, cond in blocks:
            positive = conditions.positive_names(cond)
            mentioned = conditions.mentioned_names(cond)
            vps.append(
                VariationPoint(
                    asset=rel,
                    span=span,
                    condition=cond,
                    positive_features=positive,
                    mentioned_features=mentioned,
                )
            )
            if known_features is not None:
                for name in sorted(mentioned - known_features):
                    diagnostics.add(
                        Diagnostic(
                            "warning", rel, span[0] - 1, f"condition names unknown feature {name!r}"
                        )
                    )
            body = "\n".join(lines[span[0] - 1 : span[1]])
            for feature in sorted(positive):
                segments.setdefault(feature, []).append(Segment(rel, span, body))

        if kind is AssetKind.DOCUMENTATION:
            doc_texts[rel] = text
            if lines:
                m = _FRONT_MATTER_RE.search(lines[0])
                if m:
                    names = frozenset(n.strip() for n in m.group(1).split(","))
                    doc_bindings[rel] = names
                    if known_features is not None:
                        for name in sorted(names - known_features):
                            diagnostics.add(
                                Diagnostic(
                                    "warning", rel, 1, f"front matter names unknown feature {name!r}"
                                )
                            )
                    # The directive line is scanner metadata, not content.
                    if len(lines) > 1:
                        body = "\n".join(lines[1:])
                        for feature in sorted(names):
                            segments.setdefault(feature, []).append(
                                Segment(rel, (2, len(lines)), body)
                            )

    assets.sort(key=lambda a: a.path)
    vps.sort(key=lambda v: (v.asset, v.span, v.condition_text))
    canonical_segments = {
        feature: tuple(sorted(segs, key=lambda s: (s.asset, s.span)))
        for feature, segs in sorted(segments.items())
    }
    return TraceTable(
        assets=tuple(assets),
        variation_points=tuple(vps),
        feature_segments=canonical_segments,
        doc_bindings=dict(sorted(doc_bindings.items())),
        doc_texts=dict(sorted(doc_texts.items())),
        diagnostics=tuple(sorted(diagnostics, key=lambda d: (d.path, d.line or 0, d.message))),
        known_features=known_features,
    )


def trace_metrics(table: TraceTable) -> TraceMetrics:
    """Scattering (VP and file counts) and symmetric tangling per feature."""
    vp_counts: dict[str, int] = {}
    files: dict[str, set[str]] = {}
    tangled: dict[str, set[str]] = {}
    for vp in table.variation_points:
        for feature in vp.mentioned_features:
            vp_counts[feature] = vp_counts.get(feature, 0) + 1
            files.setdefault(feature, set()).add(vp.asset)
            tangled.setdefault(feature, set()).update(vp.mentioned_features - {feature})
    scattering = {
        feature: Scattering(vp_counts[feature], len(files[feature]))
        for feature in sorted(vp_counts)
    }
    tangling = {feature: frozenset(tangled[feature]) for feature in sorted(tangled)}
    return TraceMetrics(scattering=scattering, tangling=tangling)
