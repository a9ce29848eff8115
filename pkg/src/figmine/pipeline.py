"""End-to-end orchestration: a query in, a labeled image dataset on disk out.

Stages run in a fixed, logged order: scrape, caption distribution, figure
separation, scale resolution, caption assignment, optional self-labeling,
dataset write. Figure-level work runs in a bounded worker pool; document
assembly is a single-threaded reduction in figure_id order so reruns are
byte-stable apart from the timestamp.
"""

from __future__ import annotations

import dataclasses
import io
import json
import logging
import os
import shutil
from concurrent.futures import ThreadPoolExecutor
from urllib.parse import urlparse

import numpy as np
from PIL import Image

from .assigner import assign_captions, mark_keywords
from .captions import load_patterns, parse_caption
from .models import (
    ExsclaimDocument,
    FigureRecord,
    Query,
    compute_statistics,
    parse_detections_file,
    serialize_document,
    utc_now_rfc3339,
)
from .scale import resolve_scales
from .scraper import Fetcher, FetchConfig, FetchError, load_adapters, search_and_scrape
from .separator import SeparatorConfig, assemble_mdi, rule_based_segment
from .validation import validate_payload

log = logging.getLogger(__name__)

EMBEDDINGS_FILENAME = "embeddings.txt"
TOPICS_FILENAME = "topics.json"


@dataclasses.dataclass(frozen=True)
class PipelineOptions:
    """Run-level knobs; query-level settings live on the Query itself."""

    detections_dir: str | None = None
    rule_based: bool = False
    self_label: bool = False
    out_dir: str | None = None
    delay_ms: int | None = None
    workers: int | None = None
    models_dir: str = "models"
    adapters_path: str | None = None


@dataclasses.dataclass(frozen=True)
class PipelineResult:
    document: ExsclaimDocument
    out_dir: str
    articles_found: int
    figures_discovered: int
    figures_processed: int


@dataclasses.dataclass
class _FigureState:
    figure_id: str
    article_doi: str
    article_url: str
    figure_url: str
    caption_text: str
    image_path: str = ""
    segments: tuple = ()
    detections: tuple = ()
    image_size: tuple = (0, 0)
    masters: tuple = ()
    unmatched: tuple = ()
    orphans: tuple = ()


def _figure_ext(url: str) -> str:
    ext = os.path.splitext(urlparse(url).path or url)[1].lower()
    return ext if ext in (".png", ".jpg", ".jpeg", ".gif") else ".png"


def _crop_name(master, index: int) -> str:
    return f"{master.subfigure_id if master.subfigure_id is not None else index}.png"


def run_pipeline(query: Query, options: PipelineOptions = PipelineOptions()) -> PipelineResult:
    out_dir = options.out_dir or query.output_directory
    os.makedirs(out_dir, exist_ok=True)

    pkg_log = logging.getLogger("figmine")
    pkg_log.setLevel(logging.INFO)
    handler = logging.FileHandler(os.path.join(out_dir, "run.log"), mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    pkg_log.addHandler(handler)
    try:
        return _run_pipeline(query, options, out_dir)
    finally:
        pkg_log.removeHandler(handler)
        handler.close()


def _run_pipeline(query: Query, options: PipelineOptions, out_dir: str) -> PipelineResult:
    fetch_config = FetchConfig() if options.delay_ms is None else FetchConfig(delay_ms=options.delay_ms)
    fetcher = Fetcher(fetch_config)
    workers = options.workers or os.cpu_count() or 1
    patterns = load_patterns()
    sep_config = SeparatorConfig()

    # -- scrape ------------------------------------------------------------
    log.info("stage: scraper")
    adapters = load_adapters(options.adapters_path)
    scraped = search_and_scrape(query, fetcher, adapters)
    articles = tuple(record for record, _figs in scraped)
    states: list = []
    for record, figs in scraped:
        for raw in figs:
            states.append(
                _FigureState(
                    figure_id=raw.figure_id,
                    article_doi=record.doi,
                    article_url=record.url,
                    figure_url=raw.image_url,
                    caption_text=raw.caption_text,
                )
            )
    log.info("scraper: %d articles, %d figures", len(articles), len(states))
    figures_discovered = len(states)

    figures_dir = os.path.join(out_dir, "figures")
    os.makedirs(figures_dir, exist_ok=True)
    survivors = []
    images: dict = {}
    for state in states:
        try:
            data = fetcher.fetch_bytes(state.figure_url)
            image = Image.open(io.BytesIO(data))
            image.load()
        except (FetchError, OSError) as e:
            log.warning("figure %s: image fetch failed (%s); skipped", state.figure_id, e)
            continue
        state.image_path = f"figures/{state.figure_id}{_figure_ext(state.figure_url)}"
        with open(os.path.join(out_dir, state.image_path), "wb") as f:
            f.write(data)
        state.image_size = image.size
        images[state.figure_id] = image.convert("RGB")
        survivors.append(state)
    states = survivors

    # -- caption distribution ---------------------------------------------
    log.info("stage: caption distributor")
    survivors = []
    for state in states:
        try:
            state.segments = tuple(parse_caption(state.caption_text, patterns))
        except Exception:
            log.exception("figure %s: caption distribution failed; skipped", state.figure_id)
            continue
        survivors.append(state)
    states = survivors

    # -- figure separation --------------------------------------------------
    log.info("stage: figure separator")

    def separate(state: _FigureState):
        if options.detections_dir is not None:
            path = os.path.join(options.detections_dir, f"{state.figure_id}.json")
            if os.path.exists(path):
                with open(path, encoding="utf-8") as f:
                    _fid, size, dets = parse_detections_file(json.load(f))
                state.detections = dets
                if size is not None and size != state.image_size:
                    log.warning("figure %s: detections image_size %s != actual %s", state.figure_id, size, state.image_size)
            else:
                log.warning("figure %s: no detections file; treated as empty", state.figure_id)
                state.detections = ()
        else:
            gray = np.asarray(images[state.figure_id].convert("L"))
            state.detections = tuple(rule_based_segment(gray, sep_config))
        masters, unmatched = assemble_mdi(
            state.detections, state.image_size, query.high_confidence_threshold, sep_config
        )
        state.masters = tuple(masters)
        state.unmatched = tuple(unmatched)
        return state

    survivors = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [(state, pool.submit(separate, state)) for state in states]
        for state, future in futures:
            try:
                survivors.append(future.result())
            except Exception:
                log.exception("figure %s: separation failed; skipped", state.figure_id)
    states = survivors

    # -- scale resolution ----------------------------------------------------
    log.info("stage: scale resolver")
    survivors = []
    for state in states:
        try:
            masters, unpaired = resolve_scales(
                state.detections, state.masters, query.scale_label_confidence_threshold
            )
            state.masters = tuple(masters)
            state.unmatched = state.unmatched + tuple(unpaired)
        except Exception:
            log.exception("figure %s: scale resolution failed; skipped", state.figure_id)
            continue
        survivors.append(state)
    states = survivors

    # -- caption assignment ---------------------------------------------------
    log.info("stage: caption assignment")
    survivors = []
    for state in states:
        try:
            masters, orphans = assign_captions(state.masters, state.segments)
            state.masters = tuple(mark_keywords(m, query) for m in masters)
            state.orphans = tuple(orphans)
        except Exception:
            log.exception("figure %s: caption assignment failed; skipped", state.figure_id)
            continue
        survivors.append(state)
    states = survivors

    # -- self-labeling (opt-in) ------------------------------------------------
    if options.self_label:
        log.info("stage: self labeler")
        states = _self_label(states, articles, query, options)

    # -- write -------------------------------------------------------------
    log.info("stage: writer")
    states.sort(key=lambda s: s.figure_id)
    figures = []
    for state in states:
        try:
            figures.append(_finalize_figure(state, images[state.figure_id], out_dir))
        except Exception:
            log.exception("figure %s: write failed; skipped", state.figure_id)

    document = ExsclaimDocument(
        query=query,
        articles=articles,
        figures=tuple(figures),
        statistics=compute_statistics(figures),
        created_at=utc_now_rfc3339(),
    )
    serialized = serialize_document(document)
    validate_payload(json.loads(serialized), "exsclaim")
    with open(os.path.join(out_dir, "exsclaim.json"), "w", encoding="utf-8") as f:
        f.write(serialized)
    log.info(
        "writer: %d figures processed (%d discovered), %d masters",
        len(figures),
        figures_discovered,
        sum(len(f.masters) for f in figures),
    )
    return PipelineResult(
        document=document,
        out_dir=out_dir,
        articles_found=len(articles),
        figures_discovered=figures_discovered,
        figures_processed=len(figures),
    )


def _finalize_figure(state: _FigureState, image: Image.Image, out_dir: str) -> FigureRecord:
    crops_dir = os.path.join(out_dir, "images", state.figure_id)
    if os.path.isdir(crops_dir):
        shutil.rmtree(crops_dir)
    masters = []
    if state.masters:
        os.makedirs(crops_dir, exist_ok=True)
    for idx, master in enumerate(state.masters):
        crop_rel = f"images/{state.figure_id}/{_crop_name(master, idx)}"
        box = master.box
        image.crop((box.x0, box.y0, box.x1, box.y1)).save(os.path.join(out_dir, crop_rel))
        masters.append(dataclasses.replace(master, crop_path=crop_rel))
    return FigureRecord(
        figure_id=state.figure_id,
        article_doi=state.article_doi,
        article_url=state.article_url,
        figure_url=state.figure_url,
        image_path=state.image_path,
        caption_text=state.caption_text,
        detections=state.detections,
        masters=tuple(masters),
        unmatched_detections=state.unmatched,
        orphan_segments=state.orphans,
    )


def _self_label(states, articles, query: Query, options: PipelineOptions):
    from .labeling.embeddings import EmbeddingModel
    from .labeling.hierarchy import build_labels
    from .labeling.lda import TopicModel

    emb_path = os.path.join(options.models_dir, EMBEDDINGS_FILENAME)
    if not os.path.exists(emb_path):
        raise FileNotFoundError(f"self-labeling requires a trained embedding model at {emb_path}")
    embeddings = EmbeddingModel.load(emb_path)
    topics_path = os.path.join(options.models_dir, TOPICS_FILENAME)
    topics = TopicModel.load(topics_path) if os.path.exists(topics_path) else None
    if topics is None:
        log.warning("no topic model at %s; topic labels will be empty", topics_path)

    abstracts = {a.doi: a.abstract_text for a in articles}
    out = []
    for state in states:
        masters = []
        for master in state.masters:
            if master.caption_segment is None:
                masters.append(master)
                continue
            try:
                labels = build_labels(
                    master.caption_segment,
                    abstracts.get(state.article_doi),
                    embeddings,
                    topics,
                    query.topic_confidence_threshold,
                )
                masters.append(dataclasses.replace(master, hierarchical_labels=labels))
            except Exception:
                log.exception("figure %s: self-labeling failed for one master", state.figure_id)
                masters.append(master)
        state.masters = tuple(masters)
        out.append(state)
    return out
