"""End-to-end build: parse, scan, and per-level concept map construction.

For every traversal batch (mandatory features first within each level) the
pipeline extracts keywords, clusters them, ranks the accumulated concepts,
replays the curation file, proposes relationships, and replays edge curation.
The final document, its exports, and a per-batch ranking report are written
atomically; identical inputs produce byte-identical outputs.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Union

from . import cmap_document
from .asset_scanner import Diagnostic, ScanConfig, TraceTable, scan_corpus, trace_metrics
from .cmap_document import CmapDocument, assemble, export, to_json_text
from .concept_builder import (
    Concept,
    CorpusStats,
    apply_curation,
    cluster_keywords,
    merge_concepts,
    rank_concepts,
)
from .curation import CurationError, CurationFile
from .errors import SplcmapError
from .feature_model import FeatureModel, TraversalBatch, parse_feature_model, traversal_plan
from .lexicon import LexiconConfig, extract_keywords
from .relationship_builder import (
    EdgeProposal,
    Provenance,
    apply_edge_curation,
    propose_relationships,
)

LOCK_FILE_NAME = ".splcmap.lock"


class PipelineError(SplcmapError):
    """A stage failed; the message names the stage and its location."""


@dataclass(frozen=True)
class PipelineConfig:
    model_path: Path
    corpus_root: Path
    out_dir: Path
    curation_path: Optional[Path] = None
    scan_config_path: Optional[Path] = None
    levels: Union[int, str] = "all"
    tau: float = 0.6
    keywords_per_feature: int = 50
    min_token_len: int = 3
    stopwords_extra: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not 0 < self.tau <= 1:
            raise PipelineError("tau must be in (0, 1]")
        if self.keywords_per_feature < 1:
            raise PipelineError("keywords-per-feature must be at least 1")
        if self.levels != "all":
            if not isinstance(self.levels, int):
                raise PipelineError(f"levels must be an integer or 'all': {self.levels!r}")
            if self.levels < 1:
                raise PipelineError("nothing to process: levels must be at least 1")


@dataclass
class BatchResult:
    batch: TraversalBatch
    keyword_count: int
    ranked: list[Concept]
    survivors: list[Concept]
    proposals: list[EdgeProposal]
    edges: list[EdgeProposal]


@dataclass
class RunResult:
    document: CmapDocument
    diagnostics: list[Diagnostic]
    batches: list[BatchResult]
    report_text: str
    written: dict[str, Path] = field(default_factory=dict)


@contextmanager
def _stage(name: str, location: str = ""):
    suffix = f" [{location}]" if location else ""
    try:
        yield
    except PipelineError:
        raise
    except SplcmapError as exc:
        raise PipelineError(f"stage {name}{suffix}: {exc}") from exc


@contextmanager
def _output_lock(out_dir: Path):
    lock_path = out_dir / LOCK_FILE_NAME
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise PipelineError(
            f"another build holds the output directory (remove {lock_path} if stale)"
        ) from None
    try:
        os.close(fd)
        yield
    finally:
        try:
            os.unlink(lock_path)
        except OSError:
            pass


def _load_inputs(config: PipelineConfig) -> tuple[FeatureModel, ScanConfig, CurationFile]:
    with _stage("parse-model", str(config.model_path)):
        try:
            text = Path(config.model_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise SplcmapError(f"cannot read model: {exc}") from exc
        model = parse_feature_model(text)
    with _stage("scan-config", str(config.scan_config_path or "")):
        if config.scan_config_path is not None:
            scan_config = ScanConfig.from_file(config.scan_config_path)
        else:
            default_path = Path(config.corpus_root) / "scan.json"
            scan_config = (
                ScanConfig.from_file(default_path) if default_path.is_file() else ScanConfig()
            )
    with _stage("curation", str(config.curation_path or "")):
        curation = (
            CurationFile.from_file(config.curation_path)
            if config.curation_path is not None
            else CurationFile.empty()
        )
    return model, scan_config, curation


def build_concept_map(
    config: PipelineConfig,
    file_lister: Optional[Callable[[Path], Iterable[Path]]] = None,
) -> RunResult:
    """Run every stage in memory; no files are touched."""
    model, scan_config, curation = _load_inputs(config)

    with _stage("scan-corpus", str(config.corpus_root)):
        known = frozenset([model.root.name] + [f.name for f in model.features])
        table = scan_corpus(config.corpus_root, scan_config, known, file_lister)
        metrics = trace_metrics(table)

    plan = traversal_plan(model)
    batches = [
        b
        for b in plan.batches
        if config.levels == "all" or b.level <= int(config.levels)
    ]

    lexicon_config = LexiconConfig(
        stopwords_extra=frozenset(config.stopwords_extra),
        keywords_per_feature=config.keywords_per_feature,
        min_token_len=config.min_token_len,
    )

    diagnostics: list[Diagnostic] = list(table.diagnostics)
    accumulated: list[Concept] = []
    edges: list[EdgeProposal] = []
    protected: set[str] = set()
    seen_labels: set[str] = set()
    batch_results: list[BatchResult] = []
    levels_built = 0

    for batch in batches:
        with _stage("extract-keywords", f"level {batch.level} {batch.phase.value}"):
            keywords = extract_keywords(table, batch.features, lexicon_config, diagnostics)
        with _stage("cluster", f"level {batch.level} {batch.phase.value}"):
            new_concepts = cluster_keywords(keywords, config.tau) if keywords else []
            for concept in new_concepts:
                concept.level = min(model.feature(f).level for f in concept.features)

        combined = list(accumulated)
        existing_ids = {c.id for c in combined}
        by_label = {c.label: i for i, c in enumerate(combined)}
        for concept in new_concepts:
            if concept.label in by_label:
                i = by_label[concept.label]
                combined[i] = merge_concepts(combined[i], concept)
            else:
                if concept.id in existing_ids:
                    base = concept.id
                    n = 2
                    while f"{base}-{n}" in existing_ids:
                        n += 1
                    concept.id = f"{base}-{n}"
                existing_ids.add(concept.id)
                by_label[concept.label] = len(combined)
                combined.append(concept)

        if not combined:
            batch_results.append(BatchResult(batch, len(keywords), [], [], [], []))
            levels_built = max(levels_built, batch.level)
            continue

        stats = CorpusStats(
            concept_count=len(combined),
            feature_count=model.feature_count,
            asset_count=table.asset_count,
            asset_type_count=table.asset_type_count,
        )
        with _stage("rank", f"level {batch.level} {batch.phase.value}"):
            ranked = rank_concepts(combined, stats)
        seen_labels.update(c.label for c in ranked)
        with _stage("curate-concepts", f"level {batch.level} {batch.phase.value}"):
            curated = apply_curation(ranked, curation, stats, protected, strict=False)
        seen_labels.update(c.label for c in curated)
        with _stage("propose-relationships", f"level {batch.level} {batch.phase.value}"):
            survivors, proposals = propose_relationships(curated, model)
        with _stage("curate-edges", f"level {batch.level} {batch.phase.value}"):
            edges = apply_edge_curation(proposals, curation, survivors, strict=False)

        accumulated = survivors
        protected = {c.id for c in survivors}
        levels_built = max(levels_built, batch.level)
        batch_results.append(
            BatchResult(batch, len(keywords), ranked, survivors, proposals, edges)
        )

    with _stage("curation-check"):
        unresolved = sorted(curation.referenced_labels() - seen_labels)
        if unresolved:
            raise CurationError(
                "curation references labels never produced by the run: "
                + ", ".join(repr(u) for u in unresolved)
            )

    with _stage("assemble"):
        document = assemble(
            spl_name=model.spl_name,
            model=model,
            table=table,
            metrics=metrics,
            concepts=accumulated,
            edges=edges,
            curation=curation,
            levels_built=levels_built,
        )

    report = render_report(model, table, batch_results, diagnostics)
    return RunResult(
        document=document,
        diagnostics=diagnostics,
        batches=batch_results,
        report_text=report,
    )


def run(
    config: PipelineConfig,
    file_lister: Optional[Callable[[Path], Iterable[Path]]] = None,
) -> RunResult:
    """Full build plus output files; partial outputs are never left behind."""
    result = build_concept_map(config, file_lister)
    doc = result.document

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = {
        f"{doc.spl_name}.cmap.json": to_json_text(doc),
        f"{doc.spl_name}.dot": export(doc, "dot"),
        f"{doc.spl_name}.graphml": export(doc, "graphml"),
        "report.txt": result.report_text,
    }
    with _output_lock(out_dir):
        with _stage("write-outputs", str(out_dir)):
            staged = []
            try:
                for name, text in outputs.items():
                    tmp = out_dir / (name + ".tmp")
                    tmp.write_text(text, encoding="utf-8")
                    staged.append((tmp, out_dir / name))
            except OSError as exc:
                for tmp, _final in staged:
                    tmp.unlink(missing_ok=True)
                raise SplcmapError(f"cannot write outputs: {exc}") from exc
            for tmp, final in staged:
                os.replace(tmp, final)
            result.written = {name: out_dir / name for name in outputs}
    return result


def render_report(
    model: FeatureModel,
    table: TraceTable,
    batches: list[BatchResult],
    diagnostics: list[Diagnostic],
) -> str:
    """Plain-text selection worksheet: ranked concepts with trace enrichment."""
    lines: list[str] = []
    lines.append(f"concept map build report for {model.spl_name}")
    kind_counts: dict[str, int] = {}
    for asset in table.assets:
        kind_counts[asset.kind.value] = kind_counts.get(asset.kind.value, 0) + 1
    kinds = ", ".join(f"{kind} {n}" for kind, n in sorted(kind_counts.items()))
    lines.append(f"corpus: {table.asset_count} assets ({kinds})")
    lines.append(f"features: {model.feature_count} non-root, {len(model.constraints)} constraints")
    lines.append("")

    for result in batches:
        batch = result.batch
        names = ", ".join(batch.features)
        lines.append(f"== level {batch.level} [{batch.phase.value}]: {names} ==")
        lines.append(f"keywords extracted: {result.keyword_count}")
        if not result.ranked:
            lines.append("no concepts for this batch")
            lines.append("")
            continue
        lines.append("ranked concepts:")
        for rank, concept in enumerate(result.ranked, start=1):
            lines.append(
                f"  {rank:3d}. {concept.label}  rv={concept.relevance!r}"
                f"  occurrences={concept.occurrences}  level={concept.level}"
            )
            lines.append(f"       features: {', '.join(sorted(concept.features))}")
            lines.append(f"       assets: {', '.join(sorted(concept.assets))}")
            lines.append(f"       members: {', '.join(concept.member_surfaces)}")
        survivor_ids = {c.id for c in result.survivors}
        absorbed = [p for p in result.proposals if p.provenance is Provenance.SUBSUME]
        if absorbed:
            lines.append("subsumed:")
            for p in absorbed:
                lines.append(f"  {p.target} absorbed into {p.source}")
        lines.append(f"map concepts after this batch: {len(survivor_ids)}")
        if result.edges:
            lines.append("edges:")
            for e in result.edges:
                arrow = "->" if e.directed else "--"
                lines.append(f"  {e.source} {arrow} {e.target}  [{e.label}] ({e.provenance.value})")
        lines.append("")

    if diagnostics:
        lines.append("diagnostics:")
        for d in sorted(diagnostics, key=lambda d: (d.path, d.line or 0, d.message)):
            where = f"{d.path}:{d.line}" if d.line else (d.path or "-")
            lines.append(f"  [{d.severity}] {where}: {d.message}")
        lines.append("")
    return "\n".join(lines) + "\n"
