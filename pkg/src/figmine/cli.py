"""Command-line entry points for the full pipeline and each stage."""

from __future__ import annotations

import argparse
import functools
import http.server
import json
import logging
import os
import sys

from .models import SchemaError, parse_query

log = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="figmine", description="Mine labeled images from scientific-article figures.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="full pipeline: query file to dataset directory")
    run.add_argument("query", help="query JSON file")
    source = run.add_mutually_exclusive_group()
    source.add_argument("--detections", metavar="DIR", help="directory of per-figure detection JSON files")
    source.add_argument("--rule-based", action="store_true", help="segment figures with the built-in layout rules (default)")
    run.add_argument("--self-label", action="store_true", help="attach hierarchical labels from pre-trained models")
    run.add_argument("--out", metavar="DIR", help="output directory (default: query's output_directory)")
    run.add_argument("--delay", type=int, metavar="MS", help="per-host politeness delay in milliseconds")
    run.add_argument("--workers", type=int, metavar="N", help="figure-stage worker pool size (default: CPU count)")
    run.add_argument("--models", metavar="DIR", default="models", help="directory holding embeddings.txt / topics.json")
    run.add_argument("--adapters", metavar="FILE", help="journal adapter config overriding the packaged one")

    scrape = sub.add_parser("scrape", help="search and extract articles/captions only")
    scrape.add_argument("query", help="query JSON file")
    scrape.add_argument("--out", metavar="FILE", help="write article list JSON here instead of stdout")
    scrape.add_argument("--delay", type=int, metavar="MS")
    scrape.add_argument("--adapters", metavar="FILE")

    caption = sub.add_parser("caption", help="caption tagging and distribution")
    caption_sub = caption.add_subparsers(dest="caption_command", required=True)
    caption_parse = caption_sub.add_parser("parse", help="distribute one caption string")
    caption_parse.add_argument("text", help="caption text")
    caption_parse.add_argument("--patterns", metavar="FILE", help="tag-pattern dictionary overriding the packaged one")

    separate = sub.add_parser("separate", help="decompose one figure into master images")
    separate.add_argument("figure", help="figure image file")
    sep_source = separate.add_mutually_exclusive_group()
    sep_source.add_argument("--detections", metavar="FILE", help="detection JSON file for this figure")
    sep_source.add_argument("--rule-based", action="store_true")
    separate.add_argument("--threshold", type=float, default=0.99, help="high-confidence classification threshold")

    scale = sub.add_parser("scale", help="pair and measure scale bars from a detection file")
    scale.add_argument("detections", help="detection JSON file")
    scale.add_argument("--threshold", type=float, default=0.2, help="scale label confidence threshold")

    label = sub.add_parser("label", help="attach hierarchical labels to an existing dataset")
    label.add_argument("document", help="dataset JSON file")
    label.add_argument("--embeddings", required=True, metavar="FILE")
    label.add_argument("--topics", metavar="FILE")
    label.add_argument("--out", metavar="FILE", help="output path (default: rewrite in place)")
    label.add_argument("--threshold", type=float, default=0.80, help="topic confidence gate")

    ev = sub.add_parser("eval", help="score a dataset against ground-truth annotations")
    ev.add_argument("document", help="dataset JSON file")
    ev.add_argument("groundtruth", help="directory of ground-truth JSON files")

    serve = sub.add_parser("serve-fixture", help="serve the fixture journal (and repo files) over HTTP")
    serve.add_argument("--dir", default=".", help="directory to serve (default: current)")
    serve.add_argument("--port", type=int, default=8000)

    emb = sub.add_parser("train-embeddings", help="train word embeddings on a text corpus")
    emb.add_argument("corpus", help="text file, one document per line")
    emb.add_argument("--out", required=True, metavar="FILE")
    emb.add_argument("--dim", type=int, default=100)
    emb.add_argument("--window", type=int, default=5)
    emb.add_argument("--negative", type=int, default=5)
    emb.add_argument("--min-count", type=int, default=5)
    emb.add_argument("--epochs", type=int, default=5)
    emb.add_argument("--lr", type=float, default=0.025)
    emb.add_argument("--seed", type=int, default=0)

    lda = sub.add_parser("train-lda", help="train a topic model on a text corpus")
    lda.add_argument("corpus", help="text file, one document per line")
    lda.add_argument("--out", required=True, metavar="FILE")
    lda.add_argument("--topics", type=int, default=10)
    lda.add_argument("--alpha", type=float)
    lda.add_argument("--beta", type=float, default=0.01)
    lda.add_argument("--iterations", type=int, default=1000)
    lda.add_argument("--seed", type=int, default=0)

    return parser


def _print_json(payload, out_path=None) -> None:
    text = json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _read_query(path):
    with open(path, encoding="utf-8") as f:
        return parse_query(f.read())


def _cmd_run(args) -> int:
    from .pipeline import PipelineOptions, run_pipeline

    try:
        query = _read_query(args.query)
    except (OSError, SchemaError) as e:
        print(f"error: unreadable query: {e}", file=sys.stderr)
        return 2
    options = PipelineOptions(
        detections_dir=args.detections,
        rule_based=args.detections is None,
        self_label=args.self_label,
        out_dir=args.out,
        delay_ms=args.delay,
        workers=args.workers,
        models_dir=args.models,
        adapters_path=args.adapters,
    )
    result = run_pipeline(query, options)
    print(
        f"{result.figures_processed}/{result.figures_discovered} figures processed "
        f"from {result.articles_found} articles -> {result.out_dir}/exsclaim.json"
    )
    if result.articles_found == 0:
        log.warning("no articles found for query %r", query.name)
        return 0
    if result.figures_discovered > 0 and result.figures_processed == 0:
        return 1
    return 0


def _cmd_scrape(args) -> int:
    from .scraper import FetchConfig, Fetcher, load_adapters, search_and_scrape

    query = _read_query(args.query)
    config = FetchConfig() if args.delay is None else FetchConfig(delay_ms=args.delay)
    scraped = search_and_scrape(query, Fetcher(config), load_adapters(args.adapters))
    payload = [
        {
            "article": record.to_dict(),
            "figures": [
                {
                    "figure_id": fig.figure_id,
                    "image_url": fig.image_url,
                    "caption": fig.caption_text,
                    "missing_caption": fig.missing_caption,
                }
                for fig in figs
            ],
        }
        for record, figs in scraped
    ]
    _print_json(payload, args.out)
    return 0


def _cmd_caption_parse(args) -> int:
    from .captions import load_patterns, parse_caption

    patterns = load_patterns(args.patterns)
    segments = parse_caption(args.text, patterns)
    _print_json([seg.to_dict() for seg in segments])
    return 0


def _load_detections(path):
    from .models import parse_detections_file

    with open(path, encoding="utf-8") as f:
        return parse_detections_file(json.load(f))


def _cmd_separate(args) -> int:
    import numpy as np
    from PIL import Image

    from .separator import assemble_mdi, rule_based_segment

    image = Image.open(args.figure)
    size = image.size
    if args.detections:
        _fid, det_size, detections = _load_detections(args.detections)
        size = det_size or size
    else:
        detections = rule_based_segment(np.asarray(image.convert("L")))
    masters, unmatched = assemble_mdi(detections, size, args.threshold)
    _print_json(
        {
            "masters": [m.to_dict() for m in masters],
            "unmatched_detections": [d.to_dict() for d in unmatched],
        }
    )
    return 0


def _cmd_scale(args) -> int:
    from .scale import resolve_scales
    from .separator import assemble_mdi

    _fid, size, detections = _load_detections(args.detections)
    if size is None:
        print("error: detections file needs image_size for scale resolution", file=sys.stderr)
        return 2
    masters, _ = assemble_mdi(detections, size)
    masters, unpaired = resolve_scales(detections, masters, args.threshold)
    _print_json(
        {
            "masters": [m.to_dict() for m in masters],
            "unpaired": [d.to_dict() for d in unpaired],
        }
    )
    return 0


def _cmd_label(args) -> int:
    import dataclasses

    from .labeling.embeddings import EmbeddingModel
    from .labeling.hierarchy import build_labels
    from .labeling.lda import TopicModel
    from .models import parse_document, serialize_document

    with open(args.document, encoding="utf-8") as f:
        document = parse_document(f.read())
    embeddings = EmbeddingModel.load(args.embeddings)
    topics = TopicModel.load(args.topics) if args.topics else None
    abstracts = {a.doi: a.abstract_text for a in document.articles}
    figures = []
    for figure in document.figures:
        masters = tuple(
            m
            if m.caption_segment is None
            else dataclasses.replace(
                m,
                hierarchical_labels=build_labels(
                    m.caption_segment, abstracts.get(figure.article_doi), embeddings, topics, args.threshold
                ),
            )
            for m in figure.masters
        )
        figures.append(dataclasses.replace(figure, masters=masters))
    document = dataclasses.replace(document, figures=tuple(figures))
    out_path = args.out or args.document
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(serialize_document(document))
    print(f"labeled dataset written to {out_path}")
    return 0


def _cmd_eval(args) -> int:
    from .evaluation import evaluate_document
    from .models import parse_document
    from .validation import validate_payload

    with open(args.document, encoding="utf-8") as f:
        document = parse_document(f.read())
    payloads = []
    for name in sorted(os.listdir(args.groundtruth)):
        if not name.endswith(".json"):
            continue
        with open(os.path.join(args.groundtruth, name), encoding="utf-8") as f:
            payload = json.load(f)
        validate_payload(payload, "groundtruth")
        payloads.append(payload)
    report = evaluate_document(document, payloads)
    _print_json(report)
    return 0


def _cmd_serve_fixture(args) -> int:
    handler = functools.partial(http.server.SimpleHTTPRequestHandler, directory=args.dir)
    with http.server.ThreadingHTTPServer(("127.0.0.1", args.port), handler) as server:
        print(f"serving {os.path.abspath(args.dir)} at http://127.0.0.1:{args.port}/ (Ctrl-C to stop)")
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
    return 0


def _read_corpus(path):
    # One document per non-empty line; the trainers tokenize internally.
    with open(path, encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip()]


def _cmd_train_embeddings(args) -> int:
    from .labeling.embeddings import EmbeddingConfig, train_embeddings

    config = EmbeddingConfig(
        dim=args.dim,
        window=args.window,
        negative=args.negative,
        min_count=args.min_count,
        epochs=args.epochs,
        learning_rate=args.lr,
        seed=args.seed,
    )
    model = train_embeddings(_read_corpus(args.corpus), config)
    model.save(args.out)
    print(f"{len(model.vocabulary)} vectors written to {args.out}")
    return 0


def _cmd_train_lda(args) -> int:
    from .labeling.lda import LdaConfig, train_lda

    config = LdaConfig(
        k=args.topics,
        alpha=args.alpha,
        beta=args.beta,
        iterations=args.iterations,
        seed=args.seed,
    )
    model = train_lda(_read_corpus(args.corpus), config)
    model.save(args.out)
    print(f"{config.k}-topic model written to {args.out}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "scrape": _cmd_scrape,
    "separate": _cmd_separate,
    "scale": _cmd_scale,
    "label": _cmd_label,
    "eval": _cmd_eval,
    "serve-fixture": _cmd_serve_fixture,
    "train-embeddings": _cmd_train_embeddings,
    "train-lda": _cmd_train_lda,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "caption":
        handler = _cmd_caption_parse
    else:
        handler = _COMMANDS[args.command]
    try:
        return handler(args)
    except (SchemaError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
