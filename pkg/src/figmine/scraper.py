"""Journal search, polite fetching, and figure/caption extraction from HTML.

Publisher layouts are data, not code: each journal family has an adapter
entry in a JSON config naming its search URL template and extraction
selectors over a small stdlib-based DOM. The fixture family reads a local
directory with a search manifest instead of the network, exercising the same
extraction path.
"""

from __future__ import annotations

import itertools
import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from html.parser import HTMLParser
from importlib import resources
from urllib.parse import quote_plus, urljoin, urlparse

from .models import ArticleRecord, JournalFamily, KeywordFamily, Query, SchemaError, SortOrder

log = logging.getLogger(__name__)

USER_AGENT_ENV = "FIGMINE_USER_AGENT"
FIXTURE_DIR_ENV = "FIGMINE_FIXTURE_DIR"
DEFAULT_USER_AGENT = "figmine/0.1 (research dataset builder; contact: see repository)"


# ---------------------------------------------------------------------------
# Minimal DOM over html.parser
# ---------------------------------------------------------------------------

_VOID_TAGS = frozenset({"img", "br", "meta", "link", "input", "hr", "source", "area", "base", "col", "embed", "track", "wbr"})


class HtmlNode:
    """Element or text node; text nodes have tag None."""

    __slots__ = ("tag", "attrs", "children", "text")

    def __init__(self, tag, attrs=None, text=""):
        self.tag = tag
        self.attrs = dict(attrs or {})
        self.children: list = []
        self.text = text

    def iter_elements(self):
        for child in self.children:
            if child.tag is not None:
                yield child
                yield from child.iter_elements()

    def get_text(self) -> str:
        if self.tag is None:
            return self.text
        return "".join(c.get_text() for c in self.children)

    def classes(self) -> list:
        return self.attrs.get("class", "").split()


class _DomBuilder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.root = HtmlNode("document")
        self.stack = [self.root]

    def handle_starttag(self, tag, attrs):
        node = HtmlNode(tag, dict(attrs))
        self.stack[-1].children.append(node)
        if tag not in _VOID_TAGS:
            self.stack.append(node)

    def handle_startendtag(self, tag, attrs):
        self.stack[-1].children.append(HtmlNode(tag, dict(attrs)))

    def handle_endtag(self, tag):
        for i in range(len(self.stack) - 1, 0, -1):
            if self.stack[i].tag == tag:
                del self.stack[i:]
                return

    def handle_data(self, data):
        self.stack[-1].children.append(HtmlNode(None, text=data))


def parse_html(text: str) -> HtmlNode:
    builder = _DomBuilder()
    builder.feed(text)
    builder.close()
    return builder.root


def select(node: HtmlNode, rule: dict) -> list:
    """All elements matching a selector rule {tag, class, attrs}."""
    out = []
    want_tag = rule.get("tag")
    want_class = rule.get("class")
    want_attrs = rule.get("attrs", {})
    for el in node.iter_elements():
        if want_tag and el.tag != want_tag:
            continue
        if want_class and want_class not in el.classes():
            continue
        if any(el.attrs.get(k) != v for k, v in want_attrs.items()):
            continue
        out.append(el)
    return out


def extract_first(node: HtmlNode, rule: dict):
    """Text (or named attribute) of the first match, else None."""
    matches = select(node, rule)
    if not matches:
        return None
    if rule.get("attribute"):
        return matches[0].attrs.get(rule["attribute"])
    return matches[0].get_text()


# ---------------------------------------------------------------------------
# Caption/text normalization
# ---------------------------------------------------------------------------

_SUB_SUPER = "₀₁₂₃₄₅₆₇₈₉" "⁰¹²³⁴⁵⁶⁷⁸⁹"
_SUB_SUPER_MAP = str.maketrans(_SUB_SUPER, "01234567890123456789")
_SUB_SUPER_CLASS = f"[{_SUB_SUPER}]"


def normalize_text(text: str) -> str:
    """Whitespace-collapsed text with unicode sub/superscript digits flattened.

    Digits typeset as subscripts re-attach to the preceding word, so
    "Ru-WSe ₂ ." becomes "Ru-WSe2."
    """
    text = re.sub(rf"\s+(?={_SUB_SUPER_CLASS})", "", text)
    text = text.translate(_SUB_SUPER_MAP)
    text = re.sub(r"\s+", " ", text).strip()
    text = re.sub(r"\s+([.,;:!?])", r"\1", text)
    return text


def doi_slug(doi: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "-", doi).strip("-")


# ---------------------------------------------------------------------------
# Fetching with politeness controls
# ---------------------------------------------------------------------------


class FetchError(RuntimeError):
    pass


@dataclass(frozen=True)
class FetchConfig:
    delay_ms: int = 1000
    retries: int = 2
    timeout_s: float = 15.0
    workers: int = 4
    user_agent: str = field(default_factory=lambda: os.environ.get(USER_AGENT_ENV, DEFAULT_USER_AGENT))


def _default_transport(url: str, headers: dict, timeout: float):
    """(status_code, bytes) for http(s) URLs; local paths read directly."""
    parsed = urlparse(url)
    if parsed.scheme in ("http", "https"):
        import requests

        resp = requests.get(url, headers=headers, timeout=timeout)
        return resp.status_code, resp.content
    path = parsed.path if parsed.scheme == "file" else url
    try:
        with open(path, "rb") as f:
            return 200, f.read()
    except FileNotFoundError:
        return 404, b""


class Fetcher:
    """Rate-limited, retrying fetch front end; the transport is injectable."""

    def __init__(self, config: FetchConfig = FetchConfig(), transport=None, clock=time.monotonic, sleep=time.sleep):
        self.config = config
        self.transport = transport or _default_transport
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next_slot: dict = {}

    def _respect_delay(self, url: str) -> None:
        host = urlparse(url).netloc or "local"
        delay = self.config.delay_ms / 1000.0
        with self._lock:
            now = self._clock()
            slot = max(now, self._next_slot.get(host, now))
            self._next_slot[host] = slot + delay
        wait = slot - self._clock()
        if wait > 0:
            self._sleep(wait)

    def fetch_bytes(self, url: str) -> bytes:
        headers = {"User-Agent": self.config.user_agent}
        backoff = 0.5
        last_error = None
        for attempt in range(self.config.retries + 1):
            self._respect_delay(url)
            try:
                status, body = self.transport(url, headers, self.config.timeout_s)
            except Exception as e:  # timeouts and connection resets retry
                last_error = f"{type(e).__name__}: {e}"
                status, body = None, b""
            else:
                if status == 200:
                    return body
                last_error = f"HTTP {status}"
                if status is not None and 400 <= status < 500:
                    raise FetchError(f"{url}: {last_error}")
            if attempt < self.config.retries:
                self._sleep(backoff)
                backoff *= 2
        raise FetchError(f"{url}: {last_error}")

    def fetch_text(self, url: str) -> str:
        return self.fetch_bytes(url).decode("utf-8", errors="replace")


def resolve_url(base: str, ref: str) -> str:
    if urlparse(ref).scheme or ref.startswith("//"):
        return ref
    if urlparse(base).scheme:
        return urljoin(base, ref)
    return os.path.normpath(os.path.join(os.path.dirname(base), ref))


# ---------------------------------------------------------------------------
# Adapters
# ---------------------------------------------------------------------------

_REQUIRED_SELECTORS = (
    "result_links",
    "title",
    "doi",
    "abstract",
    "open_access_marker",
    "figures",
    "figure_image",
    "figure_caption",
)


@dataclass(frozen=True)
class JournalAdapter:
    family: JournalFamily
    base_url: str
    search_url: str
    selectors: dict
    open_access_value: str | None = None

    def __post_init__(self):
        for name in _REQUIRED_SELECTORS:
            if not self.selectors.get(name):
                raise SchemaError("selectors", f"missing or empty rule {name!r} for {self.family.value}")


def load_adapters(path=None) -> dict:
    """Adapter map from the packaged (or given) JSON config."""
    if path is None:
        text = (resources.files("figmine") / "data" / "journal_adapters.json").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    data = json.loads(text)
    adapters = {}
    for entry in data["adapters"]:
        family = JournalFamily(entry["family"])
        base_url = entry["base_url"]
        if family is JournalFamily.FIXTURE:
            base_url = os.environ.get(FIXTURE_DIR_ENV, base_url)
        adapters[family] = JournalAdapter(
            family=family,
            base_url=base_url,
            search_url=entry["search_url"],
            selectors=entry["selectors"],
            open_access_value=entry.get("open_access_value"),
        )
    return adapters


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchCombination:
    """One term chosen from each keyword family, in family order."""

    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise SchemaError("terms", "combination must be non-empty")

    def query_string(self) -> str:
        return " ".join(self.terms)


def enumerate_combinations(families) -> list:
    """Cartesian product of family terms in family order x term order."""
    if not families:
        raise SchemaError("families", "must be non-empty")
    for i, fam in enumerate(families):
        if not fam.terms:
            raise SchemaError(f"families[{i}]", "family has no terms")
    return [SearchCombination(terms=combo) for combo in itertools.product(*(f.terms for f in families))]


def _search_one(adapter: JournalAdapter, combo: SearchCombination, sort_order: SortOrder, fetcher: Fetcher):
    """Result URLs for one combination in the journal's own order."""
    if adapter.family is JournalFamily.FIXTURE:
        manifest_path = os.path.join(adapter.base_url, "manifest.json")
        with open(manifest_path, encoding="utf-8") as f:
            manifest = json.load(f)
        names = manifest.get("results", {}).get(combo.query_string(), [])
        return [os.path.join(adapter.base_url, name) for name in names]
    url = adapter.search_url.format(
        base=adapter.base_url,
        query=quote_plus(combo.query_string()),
        sort="relevance" if sort_order is SortOrder.RELEVANCE else "date",
    )
    html = fetcher.fetch_text(url)
    dom = parse_html(html)
    links = []
    for el in select(dom, adapter.selectors["result_links"]):
        href = el.attrs.get("href")
        if href:
            links.append(resolve_url(adapter.base_url, href))
    return links


def collect_article_urls(adapter: JournalAdapter, combos, limit: int, sort_order=SortOrder.RELEVANCE, fetcher: Fetcher | None = None) -> list:
    """Merged (url, rank) list: deduplicated keeping the best rank, truncated.

    Rank is the position in a journal's own result ordering; across
    combinations ties break by earliest combination index. Failed searches are
    logged and skipped.
    """
    if limit < 1:
        raise SchemaError("limit", f"must be >= 1, got {limit}")
    fetcher = fetcher or Fetcher()
    results: list = [None] * len(combos)

    def run(i):
        try:
            results[i] = _search_one(adapter, combos[i], sort_order, fetcher)
        except (FetchError, OSError, json.JSONDecodeError) as e:
            log.warning("search failed for %r: %s", combos[i].terms, e)
            results[i] = []

    with ThreadPoolExecutor(max_workers=fetcher.config.workers) as pool:
        list(pool.map(run, range(len(combos))))

    best: dict = {}
    for combo_idx, urls in enumerate(results):
        for rank, url in enumerate(urls):
            key = (rank, combo_idx)
            if url not in best or key < best[url]:
                best[url] = key
    merged = sorted(best.items(), key=lambda kv: (kv[1][0], kv[1][1], kv[0]))
    return [(url, rank) for url, (rank, _) in merged[:limit]]


# ---------------------------------------------------------------------------
# Article extraction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RawFigure:
    figure_id: str
    image_url: str
    caption_text: str
    missing_caption: bool = False


def scrape_article(adapter: JournalAdapter, url: str, fetcher: Fetcher | None = None, open_access_only: bool = True):
    """(ArticleRecord, [RawFigure]) from one article page; None when dropped."""
    fetcher = fetcher or Fetcher()
    try:
        html = fetcher.fetch_text(url)
    except FetchError as e:
        log.warning("article fetch failed: %s", e)
        return None
    if "<" not in html:
        log.warning("non-HTML response from %s; skipped", url)
        return None
    dom = parse_html(html)
    sel = adapter.selectors

    marker = extract_first(dom, sel["open_access_marker"])
    if adapter.open_access_value is not None:
        open_access = marker is not None and marker.strip() == adapter.open_access_value
    else:
        open_access = marker is not None
    if open_access_only and not open_access:
        log.info("article %s is not open access; dropped", url)
        return None

    doi = extract_first(dom, sel["doi"])
    if not doi:
        log.warning("article %s has no DOI; skipped", url)
        return None
    doi = doi.strip()
    title = normalize_text(extract_first(dom, sel["title"]) or "")
    abstract_parts = [n.get_text() for n in select(dom, sel["abstract"])]
    intro_rule = sel.get("introduction")
    if intro_rule:
        abstract_parts.extend(n.get_text() for n in select(dom, intro_rule))
    abstract = normalize_text(" ".join(abstract_parts)) or None

    record = ArticleRecord(doi=doi, title=title, url=url, open_access=open_access, abstract_text=abstract)
    figures = []
    slug = doi_slug(doi)
    for n, fig_el in enumerate(select(dom, sel["figures"]), start=1):
        image = extract_first(fig_el, sel["figure_image"])
        if not image:
            log.warning("figure %d of %s has no image; skipped", n, url)
            continue
        caption_raw = extract_first(fig_el, sel["figure_caption"])
        missing = caption_raw is None or not normalize_text(caption_raw)
        if missing:
            log.warning("figure %d of %s has no caption", n, url)
        figures.append(
            RawFigure(
                figure_id=f"{slug}_fig{n}",
                image_url=resolve_url(url, image),
                caption_text="" if missing else normalize_text(caption_raw),
                missing_caption=missing,
            )
        )
    return record, figures


def search_and_scrape(query: Query, fetcher: Fetcher | None = None, adapters: dict | None = None) -> list:
    """Full scrape stage: [(ArticleRecord, [RawFigure])] for a query."""
    adapters = adapters or load_adapters()
    adapter = adapters[query.journal_family]
    fetcher = fetcher or Fetcher()
    combos = enumerate_combinations(query.keyword_families)
    ranked = collect_article_urls(adapter, combos, query.article_limit, query.sort_order, fetcher)
    out = []
    for url, _rank in ranked:
        scraped = scrape_article(adapter, url, fetcher, query.open_access_only)
        if scraped is not None:
            out.append(scraped)
    return out
