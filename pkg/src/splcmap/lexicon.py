"""Keyword extraction from the text segments traced to a feature batch.

Code segments are tokenised into identifiers; compound identifiers are kept
whole and additionally split into their camelCase / underscore parts so that
morphological relatives can be clustered later.  Prose segments are split on
whitespace and punctuation.  Every keyword carries its feature, asset, and
asset-kind trace sets plus a tf-idf style proposal-ordering score.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Optional

from .asset_scanner import AssetKind, Diagnostic, TraceTable
from .errors import SplcmapError


class LexiconError(SplcmapError):
    """Unusable lexicon configuration."""


MODE_CODE = "code"
MODE_PROSE = "prose"
TokenMode = Literal["code", "prose"]

ENGLISH_STOPWORDS = frozenset(
    """
    the a an and or but if then else for while of to in on at by with from as
    is are was were be been being it its this that these those there here not
    no nor do does did done can could should would may might must will shall
    have has had having we you they he she him her them our your their what
    which who when where why how all any both each few more most other some
    such only own same so than too very just also once one two every upon per
    via whose after before again between into over under above below out up
    down within whenever
    """.split()
)

# Programming-language keywords plus the annotation-marker vocabulary; token
# text from marker lines of enclosing blocks must never surface as a keyword.
CODE_STOPWORDS = frozenset(
    """
    abstract assert async await boolean break case catch char class const
    continue def default delete double elif enum except export extends extern
    false final finally float func function goto impl implements import
    include int interface lambda let long module namespace new none null
    package pass private protected public raise return self short signed
    sizeof static struct super switch template this throw throws true try
    typedef typeof undefined union unsigned use using var virtual void
    volatile yield print require exports pragma define defined ifdef ifndef
    endif pvscl ifcond elsecond endcond
    """.split()
)

_IDENTIFIER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_WORD_RE = re.compile(r"[A-Za-z][A-Za-z0-9]*")
_CAMEL_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z0-9])|[A-Z]?[a-z0-9]+|[A-Z]+")

DEFAULT_KEYWORDS_PER_FEATURE = 50
DEFAULT_MIN_TOKEN_LEN = 3


@dataclass(frozen=True)
class LexiconConfig:
    stopwords_extra: frozenset[str] = frozenset()
    keywords_per_feature: int = DEFAULT_KEYWORDS_PER_FEATURE
    min_token_len: int = DEFAULT_MIN_TOKEN_LEN

    def __post_init__(self) -> None:
        if self.keywords_per_feature < 1:
            raise LexiconError("keywords_per_feature must be at least 1")
        if self.min_token_len < 1:
            raise LexiconError("min_token_len must be at least 1")

    @property
    def stopwords(self) -> frozenset[str]:
        return ENGLISH_STOPWORDS | CODE_STOPWORDS | frozenset(
            w.lower() for w in self.stopwords_extra
        )

    @classmethod
    def from_dict(cls, data: dict) -> "LexiconConfig":
        known = {"stopwords_extra", "keywords_per_feature", "min_token_len"}
        extra = set(data) - known
        if extra:
            raise LexiconError(f"unknown lexicon configuration keys: {sorted(extra)}")
        return cls(
            stopwords_extra=frozenset(data.get("stopwords_extra", ())),
            keywords_per_feature=int(
                data.get("keywords_per_feature", DEFAULT_KEYWORDS_PER_FEATURE)
            ),
            min_token_len=int(data.get("min_token_len", DEFAULT_MIN_TOKEN_LEN)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "LexiconConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise LexiconError(f"cannot read lexicon configuration {path}: {exc}") from exc
        return cls.from_dict(data)


@dataclass
class Keyword:
    surface: str
    norm: str
    occurrences: int
    features: frozenset[str]
    assets: frozenset[str]
    asset_kinds: frozenset[AssetKind]
    score: float
    asset_counts: dict[str, int] = field(default_factory=dict)


def normalize(surface: str) -> str:
    """Lowercase, strip underscores, strip one plural s on long words.

    Words ending in a double s keep it, which makes the function idempotent.
    """
    norm = surface.lower().replace("_", "")
    if len(norm) > 3 and norm.endswith("s") and not norm.endswith("ss"):
        norm = norm[:-1]
    return norm


def _compound_parts(token: str) -> list[str]:
    chunks = [c for c in token.split("_") if c]
    parts: list[str] = []
    for chunk in chunks:
        parts.extend(_CAMEL_RE.findall(chunk))
    return parts


def tokenize(text: str, mode: TokenMode, config: Optional[LexiconConfig] = None) -> list[str]:
    """Surface tokens of `text`; code mode also emits compound-identifier parts."""
    cfg = config or LexiconConfig()
    stopwords = cfg.stopwords

    def keep(token: str) -> bool:
        return len(token) >= cfg.min_token_len and token.lower() not in stopwords

    tokens: list[str] = []
    if mode == MODE_CODE:
        for match in _IDENTIFIER_RE.finditer(text):
            token = match.group(0)
            if keep(token):
                tokens.append(token)
            parts = _compound_parts(token)
            if len(parts) > 1:
                tokens.extend(p for p in parts if keep(p))
    elif mode == MODE_PROSE:
        tokens = [t for t in _WORD_RE.findall(text) if keep(t)]
    else:
        raise LexiconError(f"unknown tokenization mode: {mode!r}")
    return tokens


def extract_keywords(
    table: TraceTable,
    batch: Iterable[str],
    config: Optional[LexiconConfig] = None,
    diagnostics: Optional[list[Diagnostic]] = None,
) -> list[Keyword]:
    """Trace-enriched keywords from all segments of the batch features.

    Occurrences count each distinct (asset, span) segment once, even when the
    segment is shared by several batch features; the feature trace set still
    records every such feature.  The result is truncated to the top K keywords
    per feature and ordered by (score desc, surface asc).
    """
    cfg = config or LexiconConfig()
    kind_by_path = {a.path: a.kind for a in table.assets}
    known = table.known_features

    counted_spans: set[tuple[str, tuple[int, int]]] = set()
    surfaces: dict[str, dict] = {}
    batch_features: list[str] = []

    for feature in sorted(set(batch)):
        if known is not None and feature not in known:
            if diagnostics is not None:
                diagnostics.append(
                    Diagnostic(
                        "warning", "", None, f"batch feature unknown to the trace table: {feature!r}"
                    )
                )
            continue
        batch_features.append(feature)
        for seg in sorted(table.feature_segments.get(feature, ()), key=lambda s: (s.asset, s.span)):
            kind = kind_by_path[seg.asset]
            mode = MODE_CODE if kind is AssetKind.CODE else MODE_PROSE
            tokens = tokenize(seg.text, mode, cfg)
            fresh = (seg.asset, seg.span) not in counted_spans
            counted_spans.add((seg.asset, seg.span))
            for token in tokens:
                agg = surfaces.setdefault(
                    token,
                    {"occurrences": 0, "features": set(), "assets": set(), "kinds": set(), "counts": {}},
                )
                agg["features"].add(feature)
                agg["assets"].add(seg.asset)
                agg["kinds"].add(kind)
                if fresh:
                    agg["occurrences"] += 1
                    agg["counts"][seg.asset] = agg["counts"].get(seg.asset, 0) + 1

    total_assets = table.asset_count
    keywords: dict[str, Keyword] = {}
    for surface, agg in surfaces.items():
        assets_with = len(agg["assets"])
        score = agg["occurrences"] * math.log(1 + total_assets / assets_with)
        keywords[surface] = Keyword(
            surface=surface,
            norm=normalize(surface),
            occurrences=agg["occurrences"],
            features=frozenset(agg["features"]),
            assets=frozenset(agg["assets"]),
            asset_kinds=frozenset(agg["kinds"]),
            score=score,
            asset_counts=dict(sorted(agg["counts"].items())),
        )

    kept: set[str] = set()
    for feature in batch_features:
        candidates = sorted(
            (kw for kw in keywords.values() if feature in kw.features),
            key=lambda kw: (-kw.score, kw.surface),
        )
        kept.update(kw.surface for kw in candidates[: cfg.keywords_per_feature])

    result = [keywords[s] for s in kept]
    result.sort(key=lambda kw: (-kw.score, kw.surface))
    return result
