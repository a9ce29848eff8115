"""Caption tokenization, tagging and distribution to subfigure identifiers.

The tagger is a deterministic rule cascade: subfigure-identifier groups are
found by a regular expression, prepositions and verbs come from closed word
lists, and maximal runs of remaining words become noun chunks. A small
sequence-pattern grammar over the tags then assigns each sentence's text to
the identifiers it describes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources

from .models import CaptionSegment, SchemaError, normalize_subfigure_id


class Tag(str, Enum):
    CAP = "CAP"  # subfigure identifier group, e.g. "a) and (b)"
    NC = "NC"  # noun chunk
    IN = "IN"  # preposition
    IR = "IR"  # linking or participial verb
    FULLSTOP = "FULLSTOP"
    WORD = "WORD"  # anything else: conjunctions, punctuation, stray text


# Closed word lists. Unknown words degrade into noun chunks, never crash.
IN_WORDS = frozenset(
    """of in on at to from with for by into onto within without under over
    between among through during near above below across along after before
    around via versus upon per against about inside outside beside behind
    beneath throughout toward towards until""".split()
)

# Finite/linking verb forms: always IR.
IR_FINITE = frozenset(
    """is are was were be been being am has have had shows show showed
    showing denotes denoting corresponds correspond corresponded indicates
    indicate indicating illustrates illustrate illustrating depicts depict
    depicting displays display displaying reveals reveal revealing represents
    represent representing demonstrates demonstrate demonstrating exhibits
    exhibit exhibiting highlights highlight highlighting""".split()
)

# Participial forms: IR only when not directly modifying a following word
# ("denoted in ..." is a verb; "the enlarged area" keeps the noun chunk).
IR_PARTICIPIAL = frozenset(
    """shown denoted indicated illustrated depicted displayed revealed
    represented demonstrated exhibited highlighted obtained acquired recorded
    collected measured observed taken prepared synthesized deposited grown
    annealed calculated simulated marked labeled labelled enlarged magnified
    extracted performed described presented""".split()
)

# Words that terminate a noun chunk without being prepositions or verbs.
NC_BREAKERS = frozenset(
    """and or nor but while whereas which that where when respectively etc
    also then thus hence therefore however both either neither not no
    there here""".split()
)

_ID = r"[A-Za-z]\d{0,2}"
_RANGE = rf"{_ID}(?:\s*[-–—]\s*{_ID})?"
_IDS = rf"{_RANGE}(?:\s*(?:,\s*(?:and\s+)?|\s+and\s+)\s*{_RANGE})*"
_UNIT_PAREN = rf"\(\s*{_IDS}\s*\)"
_UNIT_BARE = rf"{_IDS}\s*\)"
_SEP = r"(?:\s*,\s*(?:and\s+)?|\s+and\s+)"
# Mid-sentence groups must be fully parenthesized; at a sentence start the
# opening parenthesis may be missing ("a) and (b) ...").
CAP_MID_RE = re.compile(rf"{_UNIT_PAREN}(?:{_SEP}(?:{_UNIT_PAREN}|{_UNIT_BARE}))*")
CAP_INITIAL_RE = re.compile(rf"(?:{_UNIT_PAREN}|{_UNIT_BARE})(?:{_SEP}(?:{_UNIT_PAREN}|{_UNIT_BARE}))*")

_WORD_RE = re.compile(r"\d+(?:\.\d+)?%?|\w[\w%]*(?:[-–—]\w[\w%]*)*")
_RANGE_PART_RE = re.compile(rf"^({_ID})\s*[-–—]\s*({_ID})$")
_ID_PART_RE = re.compile(rf"^{_ID}$")


@dataclass(frozen=True)
class IdentifierGroup:
    """A CAP group and its expanded, normalized identifiers."""

    raw: str
    expanded: tuple
    flagged: bool = False

    def __post_init__(self):
        object.__setattr__(self, "expanded", tuple(self.expanded))
        if not self.expanded:
            raise SchemaError("expanded", f"no identifiers in {self.raw!r}")


def _expand_range(lo: str, hi: str) -> tuple[list, bool]:
    """Inclusive alphabetic expansion; incoherent ranges keep endpoints only."""
    lo_n, hi_n = lo.lower(), hi.lower()
    if len(lo) == 1 and len(hi) == 1:
        same_case = lo.isupper() == hi.isupper()
        if same_case and ord(lo_n) < ord(hi_n):
            return [chr(c) for c in range(ord(lo_n), ord(hi_n) + 1)], False
        if lo_n == hi_n:
            return [lo_n], not same_case
        return [lo_n, hi_n], True
    # letter+digit forms: expand over the digit when the letters agree
    if lo_n[0] == hi_n[0] and lo_n[1:].isdigit() and hi_n[1:].isdigit():
        a, b = int(lo_n[1:]), int(hi_n[1:])
        if a < b:
            return [f"{lo_n[0]}{k}" for k in range(a, b + 1)], False
    return [lo_n, hi_n], True


def expand_identifiers(group_text: str) -> IdentifierGroup:
    """Expand a CAP group like "(a) and (b)" or "(g-i)" into normalized ids."""
    cleaned = group_text.replace("(", " ").replace(")", " ").replace(".", " ")
    parts = [p.strip() for p in re.split(r",|\band\b", cleaned)]
    expanded: list = []
    flagged = False
    for part in parts:
        if not part:
            continue
        m = _RANGE_PART_RE.match(part)
        if m:
            ids, bad = _expand_range(m.group(1), m.group(2))
            flagged = flagged or bad
        elif _ID_PART_RE.match(part):
            ids = [part.lower()]
        else:
            flagged = True
            continue
        for i in ids:
            if i not in expanded:
                expanded.append(i)
    if not expanded:
        raise SchemaError("group_text", f"no identifiers found in {group_text!r}")
    return IdentifierGroup(raw=group_text, expanded=tuple(expanded), flagged=flagged)


@dataclass(frozen=True)
class CaptionToken:
    """One tagged token; char_span indexes the original caption text."""

    text: str
    tag: Tag
    char_span: tuple
    gap_before: str = ""
    identifiers: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "identifiers", tuple(self.identifiers))
        if self.tag is Tag.CAP and not self.identifiers:
            raise SchemaError("identifiers", "CAP token must carry expanded identifiers")


def _raw_scan(caption: str) -> list:
    """First pass: (kind, text, span) triples; kind in cap/stop/punct/word."""
    out = []
    i = 0
    n = len(caption)
    sentence_initial = True
    while i < n:
        ch = caption[i]
        if ch.isspace():
            i += 1
            continue
        boundary = i == 0 or not (caption[i - 1].isalnum())
        if boundary:
            cap_re = CAP_INITIAL_RE if sentence_initial else CAP_MID_RE
            m = cap_re.match(caption, i)
            if m:
                start = m.start() + (1 if caption[m.start()] == "(" else 0)
                out.append(("cap", caption[start : m.end()], (start, m.end())))
                i = m.end()
                sentence_initial = False
                continue
        m = _WORD_RE.match(caption, i)
        if m:
            out.append(("word", m.group(), (i, m.end())))
            i = m.end()
            sentence_initial = False
            continue
        if ch in ".!?":
            out.append(("stop", ch, (i, i + 1)))
            sentence_initial = True
        elif ch in ",;:":
            out.append(("punct", ch, (i, i + 1)))
            sentence_initial = False
        else:
            out.append(("punct", ch, (i, i + 1)))
            sentence_initial = False
        i += 1
    return out


def _is_plain(raw_token) -> bool:
    kind, text, _ = raw_token
    if kind != "word":
        return False
    w = text.lower()
    return w not in IN_WORDS and w not in IR_FINITE and w not in IR_PARTICIPIAL and w not in NC_BREAKERS


def tokenize_and_tag(caption: str) -> list:
    """Tokenize a caption into tagged tokens; spans index the input exactly."""
    if not caption:
        raise SchemaError("caption", "must be non-empty")
    raw = _raw_scan(caption)
    kinds: list = []
    for idx, (kind, text, span) in enumerate(raw):
        if kind == "cap":
            kinds.append(Tag.CAP)
        elif kind == "stop":
            kinds.append(Tag.FULLSTOP)
        elif kind == "punct":
            kinds.append(Tag.WORD)
        else:
            w = text.lower()
            if w in IN_WORDS:
                kinds.append(Tag.IN)
            elif w in IR_FINITE:
                kinds.append(Tag.IR)
            elif w in IR_PARTICIPIAL and not (idx + 1 < len(raw) and _is_plain(raw[idx + 1])):
                kinds.append(Tag.IR)
            elif w in NC_BREAKERS:
                kinds.append(Tag.WORD)
            else:
                kinds.append(None)  # noun-chunk candidate, merged below
    tokens: list = []
    prev_end = 0
    i = 0
    while i < len(raw):
        if kinds[i] is None:
            j = i
            while j + 1 < len(raw) and kinds[j + 1] is None:
                j += 1
            start, end = raw[i][2][0], raw[j][2][1]
            tag, text, span = Tag.NC, caption[start:end], (start, end)
            i = j + 1
        else:
            kind, text, span = raw[i]
            tag = kinds[i]
            i += 1
        identifiers = ()
        if tag is Tag.CAP:
            identifiers = expand_identifiers(text).expanded
        tokens.append(
            CaptionToken(
                text=text,
                tag=tag,
                char_span=span,
                gap_before=caption[prev_end : span[0]],
                identifiers=identifiers,
            )
        )
        prev_end = span[1]
    return tokens


def reconstruct(tokens) -> str:
    """Inverse of tokenization up to the trailing gap: gaps + texts rejoined."""
    return "".join(t.gap_before + t.text for t in tokens)


# ---------------------------------------------------------------------------
# Pattern grammar
# ---------------------------------------------------------------------------

WILDCARDS = ("!", "*")
_LITERALS = tuple(t.value for t in Tag)


@dataclass(frozen=True)
class TagPattern:
    """Atom sequence over tags; "!" skips unrecorded, "*" records, until the next atom."""

    name: str
    atoms: tuple
    provenance: str = "invented"

    def __post_init__(self):
        atoms = tuple("FULLSTOP" if a == "." else a for a in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not atoms or atoms[0] != "CAP":
            raise SchemaError("atoms", f"pattern {self.name!r} must begin with CAP")
        if atoms[-1] != "FULLSTOP":
            raise SchemaError("atoms", f"pattern {self.name!r} must end with FULLSTOP")
        for a, b in zip(atoms, atoms[1:]):
            if a in WILDCARDS and b in WILDCARDS:
                raise SchemaError("atoms", f"pattern {self.name!r} has adjacent wildcards")
        for a in atoms:
            if a not in WILDCARDS and a not in _LITERALS:
                raise SchemaError("atoms", f"pattern {self.name!r} has unknown atom {a!r}")


def load_patterns(path=None) -> tuple:
    """Load the pattern dictionary; defaults to the packaged configuration."""
    if path is None:
        text = (resources.files("figmine") / "data" / "caption_patterns.json").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    data = json.loads(text)
    patterns = tuple(
        TagPattern(name=p["name"], atoms=tuple(p["atoms"]), provenance=p.get("provenance", "invented"))
        for p in data["patterns"]
    )
    if not patterns:
        raise SchemaError("patterns", "pattern dictionary is empty")
    return patterns


def _match(pattern: TagPattern, tokens, start: int):
    """Try one pattern anchored at tokens[start] (a CAP).

    Single-token lookahead, no backtracking: a wildcard consumes until the
    first token matching the following atom; if the rest of the pattern then
    fails, the whole pattern fails. Wildcards never cross a FULLSTOP. A
    missing final period is treated as an implicit terminal FULLSTOP.
    Returns (recorded_indices, cross_reference_ids) or None.
    """
    atoms = pattern.atoms
    rec: list = []
    xrefs: list = []
    i = start + 1
    k = 1
    while k < len(atoms):
        atom = atoms[k]
        if atom in WILDCARDS:
            nxt = atoms[k + 1]
            while True:
                if i >= len(tokens):
                    if nxt == "FULLSTOP":
                        break
                    return None
                t = tokens[i]
                if t.tag.value == nxt:
                    break
                if t.tag is Tag.FULLSTOP:
                    return None
                if atom == "*":
                    rec.append(i)
                if t.tag is Tag.CAP:
                    xrefs.extend(t.identifiers)
                i += 1
        else:
            if i >= len(tokens):
                if atom == "FULLSTOP" and rec:
                    return rec, xrefs
                return None
            t = tokens[i]
            if t.tag.value != atom:
                return None
            if atom != "FULLSTOP":
                rec.append(i)
                if t.tag is Tag.CAP:
                    xrefs.extend(t.identifiers)
            i += 1
        k += 1
    if not rec:
        return None
    return rec, xrefs


def _render(tokens, indices) -> str:
    """Rejoin recorded tokens; adjacent tokens keep their original gap."""
    parts = [tokens[indices[0]].text]
    for prev, cur in zip(indices, indices[1:]):
        parts.append(tokens[cur].gap_before if cur == prev + 1 else " ")
        parts.append(tokens[cur].text)
    return "".join(parts)


_LIST_SEPARATORS = frozenset({",", "and", "or"})


def _respectively_split(tokens, rec, n_ids: int):
    """Positional distribution for trailing "..., respectively" noun lists.

    Fires only when the recorded region ends with "respectively" and the
    preceding comma/"and"-separated noun chunks count exactly n_ids; returns
    the per-identifier texts, else None (caller replicates unsplit).
    """
    if n_ids < 2:
        return None
    k = len(rec) - 1
    if k < 0 or tokens[rec[k]].text.lower() != "respectively":
        return None
    k -= 1
    if k >= 0 and tokens[rec[k]].text == ",":
        k -= 1
    if k < 0 or tokens[rec[k]].tag is not Tag.NC:
        return None
    ncs = [rec[k]]
    k -= 1
    while k >= 0:
        if tokens[rec[k]].text.lower() not in _LIST_SEPARATORS:
            break
        j = k
        while j >= 0 and tokens[rec[j]].text.lower() in _LIST_SEPARATORS:
            j -= 1
        if j < 0 or tokens[rec[j]].tag is not Tag.NC:
            break
        ncs.append(rec[j])
        k = j - 1
    ncs.reverse()
    if len(ncs) != n_ids:
        return None
    head = [i for i in rec if i < ncs[0]]
    prefix = _render(tokens, head) + " " if head else ""
    return [prefix + tokens[i].text for i in ncs]


def _sentence_initial(tokens, idx: int) -> bool:
    return idx == 0 or tokens[idx - 1].tag is Tag.FULLSTOP


def distribute_caption(tokens, patterns) -> list:
    """Assign sentence text to subfigure identifiers, first matching pattern wins.

    Only sentence-initial CAP tokens anchor patterns; CAP tokens inside a
    sentence are cross-references. Identifiers whose sentence matches no
    pattern yield no segment.
    """
    segments: list = []
    for idx, tok in enumerate(tokens):
        if tok.tag is not Tag.CAP or not _sentence_initial(tokens, idx):
            continue
        for p_idx, pattern in enumerate(patterns):
            m = _match(pattern, tokens, idx)
            if m is None:
                continue
            rec, xrefs = m
            ids = tok.identifiers
            xref_ids = tuple(dict.fromkeys(x for x in xrefs if x not in ids))
            split = _respectively_split(tokens, rec, len(ids))
            if split is not None:
                texts = split
            else:
                texts = [_render(tokens, rec)] * len(ids)
            for sub_id, text in zip(ids, texts):
                segments.append(
                    CaptionSegment(
                        subfigure_id=sub_id,
                        text=text,
                        matched_pattern=p_idx,
                        cross_references=xref_ids,
                    )
                )
            break
    return segments


def parse_caption(caption: str, patterns=None) -> list:
    """Tokenize, tag and distribute one caption with the given (or default) patterns."""
    if patterns is None:
        patterns = load_patterns()
    return distribute_caption(tokenize_and_tag(caption), patterns)
