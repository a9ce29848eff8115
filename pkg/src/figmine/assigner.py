"""Joining caption segments to masters and marking query keywords."""

from __future__ import annotations

import dataclasses
import logging
import re

from .models import MasterImage, Query, label_category_for

log = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _plural_eq(token: str, word: str) -> bool:
    if token == word:
        return True
    if token.endswith("es") and token[:-2] == word:
        return True
    return token.endswith("s") and token[:-1] == word


def term_in_text(text: str, term: str) -> bool:
    """Whole-word, case- and plural-insensitive match of a (possibly multi-word) term."""
    tokens = _TOKEN_RE.findall(text.lower())
    words = term.split()
    if not words:
        return False
    for i in range(len(tokens) - len(words) + 1):
        if all(_plural_eq(tokens[i + j], words[j]) for j in range(len(words))):
            return True
    return False


def match_keywords(text: str, query: Query) -> tuple:
    """Distinct query terms present in the text, in query declaration order."""
    return tuple(term for term in query.all_terms() if term_in_text(text, term))


def assign_captions(masters, segments):
    """Bind segments to masters by subfigure_id; returns (masters, orphan_segments).

    A master keeps the first segment carrying its id; later duplicates and
    segments matching no master become orphans.
    """
    first: dict = {}
    for seg in segments:
        if seg.subfigure_id in first:
            log.warning("duplicate caption segment for id %r; keeping first", seg.subfigure_id)
        else:
            first[seg.subfigure_id] = seg
    master_ids = {m.subfigure_id for m in masters if m.subfigure_id is not None}
    out = []
    for m in masters:
        seg = first.get(m.subfigure_id) if m.subfigure_id is not None else None
        if seg is None:
            out.append(m)
        else:
            out.append(
                dataclasses.replace(
                    m,
                    caption_segment=seg.text,
                    label_category=label_category_for(m.keywords, seg.text),
                )
            )
    orphans = [
        seg for seg in segments if first[seg.subfigure_id] is not seg or seg.subfigure_id not in master_ids
    ]
    return out, orphans


def mark_keywords(master: MasterImage, query: Query) -> MasterImage:
    """Fill master.keywords from its caption segment and refresh label_category."""
    if master.caption_segment is None:
        keywords: tuple = ()
    else:
        keywords = match_keywords(master.caption_segment, query)
    return dataclasses.replace(
        master,
        keywords=keywords,
        label_category=label_category_for(keywords, master.caption_segment),
    )
