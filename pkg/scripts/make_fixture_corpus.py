#!/usr/bin/env python3
"""Regenerate the fixture journal corpus under fixtures/.

Emits a small authored publisher site (HTML articles + figure images), the
matching per-figure detection files, hand-written ground-truth annotations,
a search manifest, the demo query, and the expected-count summary that the
tests assert against. Everything is deterministic so reruns are byte-stable.
"""

from __future__ import annotations

import json
import os
import sys

from PIL import Image, ImageDraw

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), os.pardir))
FIXTURES = os.path.join(ROOT, "fixtures")
CORPUS = os.path.join(FIXTURES, "corpus")

MASTER_FILL = ["#c8d8e8", "#d8e8c8", "#e8d0c8", "#e0c8e8", "#c8e8e0", "#e8e4c0"]


def box(x0, y0, x1, y1):
    return {"x0": x0, "y0": y0, "x1": x1, "y1": y1}


def scores(**kw):
    return dict(kw)


def det(b, kind, confidence=0.9, text=None, class_scores=None):
    d = {"box": box(*b), "kind": kind, "confidence": confidence, "text": text}
    d["class_scores"] = class_scores
    return d


def master(b, class_scores, confidence=0.9):
    return det(b, "master_candidate", confidence, class_scores=class_scores)


def label(b, text, confidence=0.9):
    return det(b, "subfigure_label", confidence, text=text)


def bar(b, confidence=0.9):
    return det(b, "scale_bar_line", confidence)


def bar_label(b, text, confidence=0.9):
    return det(b, "scale_bar_label", confidence, text=text)


def truth(item, b, classification, subfigure_id=None, dependents=(), insets=(), scale_bar=None):
    return {
        "item_id": item,
        "box": box(*b),
        "classification": classification,
        "subfigure_id": subfigure_id,
        "dependents": [box(*d) for d in dependents],
        "insets": [box(*i) for i in insets],
        "scale_bar": scale_bar,
        "reviewed": True,
    }


ARTICLES = [
    {
        "file": "article1.html",
        "doi": "10.0001/fixture.0001",
        "slug": "10-0001-fixture-0001",
        "access": "open",
        "title": "Growth of Ru-WSe2 nanowire networks by chemical vapor deposition",
        "abstract": "We report dense networks of Ru-WSe ₂ . Transmission electron microscopy "
        "(TEM) shows single-crystalline nanowire cores decorated with Ru nanoparticle clusters.",
        "introduction": "Layered selenides host a rich family of nanostructures. Here the focus is "
        "the nanowire morphology and its atomic-scale characterization by TEM and HRTEM.",
    },
    {
        "file": "article2.html",
        "doi": "10.0002/fixture.0002",
        "slug": "10-0002-fixture-0002",
        "access": "open",
        "title": "Elemental mapping of core-shell nanoparticle catalysts",
        "abstract": "Energy-dispersive spectroscopy resolves the elemental distribution of core-shell "
        "nanoparticle catalysts with nanometer precision.",
        "introduction": "Core-shell architectures dominate modern catalyst design; mapping their "
        "composition requires TEM-based spectroscopy.",
    },
    {
        "file": "article3.html",
        "doi": "10.0003/fixture.0003",
        "slug": "10-0003-fixture-0003",
        "access": "open",
        "title": "Surface reconstruction of layered crystals at atomic resolution",
        "abstract": "Scanning tunneling microscopy reveals a reversible surface reconstruction in a "
        "layered crystal, with photoluminescence tracking the transition.",
        "introduction": "Surface phases of layered materials respond strongly to temperature.",
    },
    {
        "file": "article4.html",
        "doi": "10.0004/fixture.0004",
        "slug": "10-0004-fixture-0004",
        "access": "open",
        "title": "Optical characterization of nanoparticle thin films",
        "abstract": "Raman and X-ray diffraction characterize nanoparticle thin films assembled from "
        "TEM-screened building blocks.",
        "introduction": "Film quality depends on the uniformity of the constituent nanoparticle batch.",
    },
    {
        "file": "article5.html",
        "doi": "10.0005/fixture.0005",
        "slug": "10-0005-fixture-0005",
        "access": "open",
        "title": "Device integration of single-nanowire transistors",
        "abstract": "Arrays of single-nanowire transistors are fabricated and imaged from the wafer "
        "scale down to cross-sectional TEM of individual channels.",
        "introduction": "Scaling nanowire devices requires inspection across six orders of magnitude.",
    },
    {
        "file": "article6.html",
        "doi": "10.0006/fixture.0006",
        "slug": "10-0006-fixture-0006",
        "access": "closed",
        "title": "Subscription-only reference measurements",
        "abstract": "Reference data behind a paywall; the open-access filter must drop this article.",
        "introduction": "Not part of the open corpus.",
    },
]

# Figure layouts. Captions are authored against the tag grammar; ground truth
# is hand-simulated from the documented assembly, pairing, and category rules.
FIGURES = [
    # -- article 1 ---------------------------------------------------------
    {
        "article": 0,
        "n": 1,
        "size": (600, 600),
        "caption_html": "(a) TEM image of Ru-WSe<sub>2</sub> nanowires. "
        "(b) HAADF-STEM images of the nanoparticle assembly.",
        "detections": [
            master((10, 10, 290, 590), scores(microscopy=0.995, unclear=0.005)),
            master((310, 10, 590, 190), scores(microscopy=0.6, graph=0.3, unclear=0.1)),
            master((310, 210, 590, 390), scores(microscopy=0.55, unclear=0.45)),
            master((310, 410, 590, 590), scores(microscopy=0.6, unclear=0.4)),
            label((15, 15, 35, 35), "(a)"),
            label((315, 15, 335, 35), "(b)"),
            bar((20, 550, 80, 556)),
            bar_label((20, 560, 70, 576), "100 nm"),
        ],
        "truth": [
            truth("a", (10, 10, 290, 590), "microscopy", "a", scale_bar={"length_px": 60, "label_text": "100 nm"}),
            truth(
                "b",
                (310, 10, 590, 590),
                "parent",
                "b",
                dependents=[(310, 210, 590, 390), (310, 410, 590, 590)],
            ),
        ],
    },
    {
        "article": 0,
        "n": 2,
        "size": (600, 300),
        "caption_html": "(a) HRTEM image of the WSe<sub>2</sub> lattice and the FFT inset. "
        "(b) The size distribution of the nanoparticles.",
        "detections": [
            master((10, 10, 290, 290), scores(microscopy=0.97, unclear=0.03)),
            master((200, 200, 280, 280), scores(microscopy=0.6, unclear=0.4)),
            master((310, 10, 590, 290), scores(graph=0.998, unclear=0.002)),
            label((15, 15, 35, 35), "(a)"),
            label((315, 15, 335, 35), "(b)"),
            bar((20, 260, 70, 264)),
            bar_label((20, 268, 60, 284), "5 nm", confidence=0.95),
            bar((320, 260, 370, 264)),
            bar_label((320, 268, 370, 284), "10 nm", confidence=0.1),
        ],
        "truth": [
            truth(
                "a",
                (10, 10, 290, 290),
                "microscopy",
                "a",
                insets=[(200, 200, 280, 280)],
                scale_bar={"length_px": 50, "label_text": "5 nm"},
            ),
            truth("b", (310, 10, 590, 290), "graph", "b"),
        ],
    },
    {
        "article": 0,
        "n": 3,
        "size": (400, 400),
        "caption_html": "HAADF-STEM image of a single Ru atom on the WSe ₂ monolayer.",
        "detections": [
            master((10, 10, 390, 390), scores(microscopy=0.7, unclear=0.3)),
            bar((360, 100, 366, 200)),
            bar_label((340, 210, 380, 230), "2 Å", confidence=0.8),
        ],
        "truth": [
            truth("0", (10, 10, 390, 390), "microscopy", None, scale_bar={"length_px": 100, "label_text": "2 Å"}),
        ],
    },
    # -- article 2 ---------------------------------------------------------
    {
        "article": 1,
        "n": 1,
        "size": (900, 300),
        "caption_html": "(a-c) The EDS mapping of Ru, W, and Se, respectively.",
        "detections": [
            master((10, 10, 290, 290), scores(microscopy=0.995, unclear=0.005)),
            master((310, 10, 590, 290), scores(microscopy=0.995, unclear=0.005)),
            master((610, 10, 890, 290), scores(microscopy=0.995, unclear=0.005)),
            label((15, 15, 35, 35), "(a)"),
            label((315, 15, 335, 35), "(b)"),
            label((615, 15, 635, 35), "(c)"),
            bar((20, 260, 100, 264)),
            bar_label((20, 268, 80, 284), "200 nm"),
            bar((320, 260, 400, 264)),
            bar_label((320, 268, 380, 284), "200 nm"),
            bar((620, 20, 700, 24)),
            bar_label((620, 28, 676, 44), "500 nm", confidence=0.95),
            bar((620, 260, 700, 264)),
            bar_label((620, 268, 668, 284), "1 µm", confidence=0.9),
        ],
        "truth": [
            truth("a", (10, 10, 290, 290), "microscopy", "a", scale_bar={"length_px": 80, "label_text": "200 nm"}),
            truth("b", (310, 10, 590, 290), "microscopy", "b", scale_bar={"length_px": 80, "label_text": "200 nm"}),
            truth("c", (610, 10, 890, 290), "microscopy", "c", scale_bar={"length_px": 80, "label_text": "500 nm"}),
        ],
    },
    {
        "article": 1,
        "n": 2,
        "size": (600, 300),
        "caption_html": "(a) TEM image of the pristine sample. "
        "(b) The enlarged area denoted in (a) corresponds to the nanowire tip.",
        "detections": [
            master((10, 10, 290, 290), scores(microscopy=0.96, unclear=0.04)),
            master((310, 10, 590, 290), scores(microscopy=0.9, unclear=0.1)),
            label((15, 15, 35, 35), "(a)"),
            label((315, 15, 335, 35), "(b)"),
        ],
        "truth": [
            truth("a", (10, 10, 290, 290), "microscopy", "a"),
            truth("b", (310, 10, 590, 290), "microscopy", "b"),
        ],
    },
    {
        "article": 1,
        "n": 3,
        "size": (600, 300),
        "caption_html": "(a) SEM image of the array. (b) Current-voltage curves of the device.",
        "detections": [
            master((10, 10, 290, 290), scores(microscopy=0.992, unclear=0.008)),
            master((310, 10, 590, 290), scores(graph=0.95, unclear=0.05)),
            label((15, 15, 35, 35), "(a)"),
            label((315, 15, 335, 35), "(b)"),
            bar((20, 260, 100, 264)),
            bar_label((20, 268, 70, 284), "0.5 µm"),
            bar((320, 240, 380, 244)),
            bar_label((320, 248, 370, 264), "nm 50"),
            bar((320, 20, 380, 24)),
            bar_label((320, 28, 370, 44), "50 px"),
        ],
        "truth": [
            truth("a", (10, 10, 290, 290), "microscopy", "a", scale_bar={"length_px": 80, "label_text": "0.5 µm"}),
            truth("b", (310, 10, 590, 290), "graph", "b"),
        ],
    },
    # -- article 3 ---------------------------------------------------------
    {
        "article": 2,
        "n": 1,
        "size": (600, 300),
        "caption_html": "(a) STM images of the surface reconstruction. (b) Schematic illustration of the setup.",
        "detections": [
            master((10, 10, 430, 290), scores(microscopy=0.9, unclear=0.1)),
            master((440, 10, 590, 290), scores(illustration=0.85, graph=0.1, unclear=0.05)),
            det((300, 20, 420, 280), "dependent_candidate", 0.8),
            label((15, 15, 35, 35), "(a)"),
            label((445, 15, 465, 35), "(b)"),
        ],
        "truth": [
            truth("a", (10, 10, 430, 290), "parent", "a", dependents=[(300, 20, 420, 280)]),
            truth("b", (440, 10, 590, 290), "illustration", "b"),
        ],
    },
    {
        "article": 2,
        "n": 2,
        "size": (600, 300),
        "caption_html": "(a) Photoluminescence spectra at increasing temperature.",
        "detections": [
            master((10, 10, 290, 290), scores(graph=0.99, unclear=0.01)),
            master((310, 10, 590, 290), scores(graph=0.6, unclear=0.4)),
            label((15, 15, 35, 35), "(a)"),
            label((315, 15, 335, 35), "(a)"),
        ],
        "truth": [
            truth("a", (10, 10, 290, 290), "graph", "a"),
            truth("1", (310, 10, 590, 290), "graph", None),
        ],
    },
    # -- article 4 ---------------------------------------------------------
    {
        "article": 3,
        "n": 1,
        "size": (600, 400),
        "caption_html": "(a) Raman spectra of the TEM-characterized nanoparticle films.",
        "detections": [
            master((10, 10, 590, 390), scores(graph=0.999, unclear=0.001)),
            label((15, 15, 35, 35), "(a)"),
        ],
        "truth": [
            truth("a", (10, 10, 590, 390), "graph", "a"),
        ],
    },
    {
        "article": 3,
        "n": 2,
        "size": (600, 300),
        "caption_html": "(a) XRD patterns of the as-grown samples.",
        "detections": [
            master((10, 10, 290, 290), scores(graph=0.7, microscopy=0.2, unclear=0.1)),
            master((310, 10, 590, 290), scores(diffraction=0.95, unclear=0.05)),
            label((15, 15, 35, 35), "(a)"),
        ],
        "truth": [
            truth("a", (10, 10, 290, 290), "graph", "a"),
            truth("1", (310, 10, 590, 290), "diffraction", None),
        ],
    },
    # -- article 5 ---------------------------------------------------------
    {
        "article": 4,
        "n": 1,
        "size": (600, 300),
        "caption_html": "(a) Optical photograph of the device array. "
        "(b) Magnified view of a single nanowire channel with the cross-sectional TEM inset.",
        "detections": [
            master((10, 10, 290, 290), scores(photo=0.97, unclear=0.03)),
            master((310, 10, 590, 290), scores(microscopy=0.9, unclear=0.1)),
            det((480, 180, 570, 270), "inset_candidate", 0.8),
            label((15, 15, 35, 35), "(a)"),
            label((315, 15, 335, 35), "(b)"),
            bar((20, 260, 120, 264)),
            bar_label((20, 268, 60, 284), "1 mm", confidence=0.85),
        ],
        "truth": [
            truth("a", (10, 10, 290, 290), "photo", "a", scale_bar={"length_px": 100, "label_text": "1 mm"}),
            truth("b", (310, 10, 590, 290), "microscopy", "b", insets=[(480, 180, 570, 270)]),
        ],
    },
    {
        "article": 4,
        "n": 2,
        "size": (600, 300),
        "caption_html": "(a) Absorbance spectra. (b) Emission spectra. "
        "(c) Quantum yield versus nanoparticle diameter.",
        "detections": [
            master((10, 10, 290, 290), scores(graph=0.98, unclear=0.02)),
            master((310, 10, 590, 290), scores(graph=0.6, illustration=0.3, unclear=0.1)),
            label((15, 15, 35, 35), "(a)"),
            label((315, 15, 335, 35), "(b)"),
        ],
        "truth": [
            truth("a", (10, 10, 290, 290), "graph", "a"),
            truth("b", (310, 10, 590, 290), "graph", "b"),
        ],
    },
    # -- article 6 (paywalled; never scraped by the demo query) -------------
    {
        "article": 5,
        "n": 1,
        "size": (400, 300),
        "caption_html": "(a) Reference spectra.",
        "detections": [
            master((10, 10, 390, 290), scores(graph=0.9, unclear=0.1)),
            label((15, 15, 35, 35), "(a)"),
        ],
        "truth": [
            truth("a", (10, 10, 390, 290), "graph", "a"),
        ],
    },
]

MANIFEST = {
    "format_version": "1",
    "results": {
        "nanoparticle tem": ["article1.html", "article2.html", "article4.html"],
        "nanoparticle hrtem": ["article2.html", "article1.html", "article5.html"],
        "nanowire tem": ["article3.html", "article6.html"],
        "nanowire hrtem": ["article5.html", "article3.html"],
    },
}

QUERY = {
    "name": "fixture-demo",
    "journal_family": "fixture",
    "article_limit": 6,
    "sort_order": "relevance",
    "keyword_families": [["nanoparticle", "nanowire"], ["tem", "hrtem"]],
    "open_access_only": True,
    "output_directory": "output/fixture-demo",
}

EXPECTED = {
    "articles": 5,
    "figures": 12,
    "masters": 23,
    "parents": 2,
    "dependents": 3,
    "insets": 2,
    "high_confidence": 8,
    "label_categories": {
        "caption_unassigned": 3,
        "label_unassigned": 12,
        "single_label": 5,
        "multi_label": 3,
    },
    "class_counts": {
        "microscopy": 10,
        "diffraction": 1,
        "graph": 8,
        "illustration": 1,
        "photo": 1,
        "parent": 2,
        "unclear": 0,
    },
    "scales_nm_per_pixel": {
        "10-0001-fixture-0001_fig1/a": 1.66667,
        "10-0001-fixture-0001_fig2/a": 0.1,
        "10-0001-fixture-0001_fig3/0": 0.002,
        "10-0002-fixture-0002_fig1/a": 2.5,
        "10-0002-fixture-0002_fig1/b": 2.5,
        "10-0002-fixture-0002_fig1/c": 6.25,
        "10-0002-fixture-0002_fig3/a": 6.25,
        "10-0005-fixture-0005_fig1/a": 10000.0,
    },
}


def figure_id(fig) -> str:
    return f"{ARTICLES[fig['article']]['slug']}_fig{fig['n']}"


def draw_figure(fig, path: str) -> None:
    img = Image.new("RGB", fig["size"], "white")
    draw = ImageDraw.Draw(img)
    fill_idx = 0
    for d in fig["detections"]:
        b = d["box"]
        xy = (b["x0"], b["y0"], b["x1"] - 1, b["y1"] - 1)
        kind = d["kind"]
        if kind in ("master_candidate", "dependent_candidate", "inset_candidate"):
            draw.rectangle(xy, fill=MASTER_FILL[fill_idx % len(MASTER_FILL)], outline="#404040")
            fill_idx += 1
        elif kind == "subfigure_label":
            draw.rectangle(xy, fill="white", outline="#404040")
            draw.text((b["x0"] + 4, b["y0"] + 4), d["text"].strip("()"), fill="black")
        elif kind == "scale_bar_line":
            draw.rectangle(xy, fill="black")
        elif kind == "scale_bar_label":
            draw.text((b["x0"], b["y0"]), d["text"], fill="black")
    img.save(path)


def write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, ensure_ascii=False, sort_keys=True)
        f.write("\n")


def article_html(article, figs) -> str:
    blocks = []
    for fig in figs:
        fid = figure_id(fig)
        blocks.append(
            f'<figure>\n<img src="images/{fid}.png">\n<figcaption>{fig["caption_html"]}</figcaption>\n</figure>'
        )
    figure_markup = "\n".join(blocks)
    return f"""<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<meta name="dc.identifier" content="{article["doi"]}">
<meta name="access" content="{article["access"]}">
<title>{article["title"]}</title>
</head>
<body>
<h1 class="article-title">{article["title"]}</h1>
<div class="abstract">{article["abstract"]}</div>
<div class="introduction">{article["introduction"]}</div>
{figure_markup}
</body>
</html>
"""


def main() -> int:
    images_dir = os.path.join(CORPUS, "images")
    detections_dir = os.path.join(FIXTURES, "detections")
    groundtruth_dir = os.path.join(FIXTURES, "groundtruth")
    for d in (images_dir, detections_dir, groundtruth_dir):
        os.makedirs(d, exist_ok=True)

    for fig in FIGURES:
        fid = figure_id(fig)
        width, height = fig["size"]
        draw_figure(fig, os.path.join(images_dir, f"{fid}.png"))
        if ARTICLES[fig["article"]]["access"] != "open":
            continue
        write_json(
            os.path.join(detections_dir, f"{fid}.json"),
            {
                "schema_version": "1",
                "figure_id": fid,
                "image_size": {"width": width, "height": height},
                "detections": fig["detections"],
            },
        )
        write_json(
            os.path.join(groundtruth_dir, f"{fid}.json"),
            {
                "schema_version": "1",
                "figure_id": fid,
                "image_size": {"width": width, "height": height},
                "annotations": [
                    dict(t, item_id=f"{fid}/{t['item_id']}") for t in fig["truth"]
                ],
            },
        )

    for i, article in enumerate(ARTICLES):
        figs = [f for f in FIGURES if f["article"] == i]
        with open(os.path.join(CORPUS, article["file"]), "w", encoding="utf-8") as f:
            f.write(article_html(article, figs))

    write_json(os.path.join(CORPUS, "manifest.json"), MANIFEST)
    write_json(os.path.join(FIXTURES, "query.json"), QUERY)
    write_json(os.path.join(FIXTURES, "expected_counts.json"), EXPECTED)
    print(f"fixture corpus written under {FIXTURES}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
