"""Command-line interface: build, stats, export, serve."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .asset_scanner import ScanConfig, scan_corpus, trace_metrics
from .cmap_document import export, load_document
from .errors import SplcmapError
from .feature_model import (
    DEFAULT_PRODUCT_CAP,
    Variability,
    count_products,
    parse_feature_model,
    traversal_plan,
)
from .pipeline import PipelineConfig, run
from .server import serve

NO_COLOR_ENV = "SPLCMAP_NO_COLOR"


def _use_color(stream) -> bool:
    return os.environ.get(NO_COLOR_ENV) is None and stream.isatty()


def _heading(text: str, stream) -> str:
    if _use_color(stream):
        return f"\033[1;36m{text}\033[0m"
    return text


def _add_build_parser(subparsers) -> None:
    p = subparsers.add_parser("build", help="run the full construction pipeline")
    p.add_argument("--model", required=True, help="feature model file")
    p.add_argument("--corpus", required=True, help="corpus root directory")
    p.add_argument("--curation", help="curation file (JSON)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--levels", default="all", help="max level to process, or 'all'")
    p.add_argument("--tau", type=float, default=0.6, help="clustering similarity threshold")
    p.add_argument("--keywords-per-feature", type=int, default=50)
    p.add_argument("--scan-config", help="scan configuration file (JSON)")


def _add_stats_parser(subparsers) -> None:
    p = subparsers.add_parser("stats", help="feature counts, product count, trace metrics")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", help="corpus root; enables scattering/tangling output")
    p.add_argument("--scan-config")
    p.add_argument("--cap", type=int, default=DEFAULT_PRODUCT_CAP)


def _add_export_parser(subparsers) -> None:
    p = subparsers.add_parser("export", help="render a built document as dot or graphml")
    p.add_argument("--doc", required=True, help="a .cmap.json document")
    p.add_argument("--format", required=True, choices=("dot", "graphml"))
    p.add_argument("--out", help="output file (default: stdout)")


def _add_serve_parser(subparsers) -> None:
    p = subparsers.add_parser("serve", help="serve the exploration hub over local HTTP")
    p.add_argument("--doc", required=True, help="a .cmap.json document")
    p.add_argument("--corpus", help="corpus root for /api/asset")
    p.add_argument("--viewer", help="viewer bundle directory")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--host", default="127.0.0.1")


def _parse_levels(raw: str):
    if raw == "all":
        return "all"
    try:
        return int(raw)
    except ValueError:
        raise SplcmapError(f"--levels must be an integer or 'all', got {raw!r}") from None


def _cmd_build(args) -> int:
    config = PipelineConfig(
        model_path=Path(args.model),
        corpus_root=Path(args.corpus),
        out_dir=Path(args.out),
        curation_path=Path(args.curation) if args.curation else None,
        scan_config_path=Path(args.scan_config) if args.scan_config else None,
        levels=_parse_levels(args.levels),
        tau=args.tau,
        keywords_per_feature=args.keywords_per_feature,
    )
    result = run(config)
    doc = result.document
    print(_heading(f"built concept map for {doc.spl_name}", sys.stdout))
    print(f"levels built: {doc.levels_built}")
    print(f"concepts: {len(doc.concepts)}  relationships: {len(doc.relationships)}")
    for name, path in result.written.items():
        print(f"wrote {path}")
    for diag in result.diagnostics:
        where = f"{diag.path}:{diag.line}" if diag.line else (diag.path or "-")
        print(f"[{diag.severity}] {where}: {diag.message}", file=sys.stderr)
    return 0


def _cmd_stats(args) -> int:
    text = Path(args.model).read_text(encoding="utf-8")
    model = parse_feature_model(text)
    counts = {v: 0 for v in Variability}
    for f in model.features:
        counts[f.variability] += 1
    print(_heading(f"feature model: {model.spl_name}", sys.stdout))
    print(f"features (non-root): {model.feature_count}")
    for variability, n in counts.items():
        print(f"  {variability.value}: {n}")
    print(f"levels: {model.max_level}")
    print(f"constraints: {len(model.constraints)}")
    plan = traversal_plan(model)
    print(f"traversal batches: {len(plan.batches)}")
    products = count_products(model, cap=args.cap)
    print(f"products: {'exceeds cap' if products is None else products}")

    if args.corpus:
        scan_config = (
            ScanConfig.from_file(args.scan_config) if args.scan_config else ScanConfig()
        )
        known = frozenset([model.root.name] + [f.name for f in model.features])
        table = scan_corpus(args.corpus, scan_config, known)
        metrics = trace_metrics(table)
        print()
        print(_heading("scattering / tangling", sys.stdout))
        print(f"{'feature':<24} {'vps':>4} {'files':>6}  tangled-with")
        for feature, scattering in metrics.scattering.items():
            tangled = ", ".join(sorted(metrics.tangling.get(feature, ()))) or "-"
            print(
                f"{feature:<24} {scattering.vp_count:>4} {scattering.file_count:>6}  {tangled}"
            )
        for diag in table.diagnostics:
            where = f"{diag.path}:{diag.line}" if diag.line else diag.path
            print(f"[{diag.severity}] {where}: {diag.message}", file=sys.stderr)
    return 0


def _cmd_export(args) -> int:
    doc = load_document(args.doc)
    text = export(doc, args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_serve(args) -> int:
    serve(
        doc_path=args.doc,
        corpus_root=args.corpus,
        viewer_dir=args.viewer,
        host=args.host,
        port=args.port,
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="splcmap",
        description="Construct and explore concept maps for software product lines.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    _add_build_parser(subparsers)
    _add_stats_parser(subparsers)
    _add_export_parser(subparsers)
    _add_serve_parser(subparsers)
    args = parser.parse_args(argv)

    handlers = {
        "build": _cmd_build,
        "stats": _cmd_stats,
        "export": _cmd_export,
        "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except SplcmapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
