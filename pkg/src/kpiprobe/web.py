"""Web-dashboard KPI extraction: log in over HTTP, fetch the status page,
pull KPI fields out of the HTML via a configurable selector map.

Vendor GUIs demand a browser; the emulator serves plain HTML, so a
browserless HTTP client keeps the test surface deterministic while the
selector map preserves the locate-fields-by-element-path approach.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from html.parser import HTMLParser

import requests

from . import wire
from .clock import SystemClock
from .errors import AuthFailed, ParseFailed, TransportDown
from .model import (
    FIELD_NAMES,
    CellIdentity,
    KpiSnapshot,
    Method,
    RadioMetrics,
    Timestamp,
    Unit,
    normalize_rat,
)

_VOID_TAGS = {"br", "hr", "img", "input", "link", "meta", "col", "area", "base", "wbr"}

# Start tags that implicitly close a still-open sibling, the way browsers do.
_IMPLIED_CLOSERS = {
    "tr": {"tr", "td", "th"},
    "td": {"td", "th"},
    "th": {"td", "th"},
    "li": {"li"},
    "option": {"option"},
    "p": {"p"},
}

_STEP_RE = re.compile(
    r"^(?P<tag>[a-zA-Z][a-zA-Z0-9]*|\*)?"
    r"(?:#(?P<id>[\w-]+))?"
    r"(?:\.(?P<cls>[\w-]+))?$"
)


class HtmlNode:
    """One element in the parsed page tree."""

    __slots__ = ("tag", "attrs", "children", "_text_parts")

    def __init__(self, tag: str, attrs: dict[str, str]):
        self.tag = tag
        self.attrs = attrs
        self.children: list[HtmlNode] = []
        self._text_parts: list[str] = []

    def text(self) -> str:
        parts = list(self._text_parts)
        for child in self.children:
            parts.append(child.text())
        return "".join(parts)

    def iter_nodes(self):
        yield self
        for child in self.children:
            yield from child.iter_nodes()


class _TreeBuilder(HTMLParser):
    """Lenient tree builder: unclosed and stray end tags are tolerated."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.root = HtmlNode("#root", {})
        self._stack = [self.root]

    def handle_starttag(self, tag, attrs):
        tag = tag.lower()
        closes = _IMPLIED_CLOSERS.get(tag, ())
        while len(self._stack) > 1 and self._stack[-1].tag in closes:
            self._stack.pop()
        node = HtmlNode(tag, {k: (v or "") for k, v in attrs})
        self._stack[-1].children.append(node)
        if tag not in _VOID_TAGS:
            self._stack.append(node)

    def handle_startendtag(self, tag, attrs):
        self._stack[-1].children.append(HtmlNode(tag.lower(), {k: (v or "") for k, v in attrs}))

    def handle_endtag(self, tag):
        tag = tag.lower()
        for index in range(len(self._stack) - 1, 0, -1):
            if self._stack[index].tag == tag:
                del self._stack[index:]
                return

    def handle_data(self, data):
        self._stack[-1]._text_parts.append(data)


def parse_html(text: str) -> HtmlNode:
    builder = _TreeBuilder()
    try:
        builder.feed(text)
        builder.close()
    except Exception as exc:  # stdlib parser is lenient, but stay total
        raise ParseFailed(f"unparseable HTML: {exc}", raw=text) from exc
    return builder.root


@dataclass(frozen=True)
class _Step:
    tag: str | None
    id: str | None
    cls: str | None

    def matches(self, node: HtmlNode) -> bool:
        if self.tag and self.tag != "*" and node.tag != self.tag:
            return False
        if self.id is not None and node.attrs.get("id") != self.id:
            return False
        if self.cls is not None and self.cls not in node.attrs.get("class", "").split():
            return False
        return True


def compile_path(path: str) -> tuple[_Step, ...]:
    """Compile a slash-separated element path like ``table#cell-info/tr/td#rsrp``.

    Each step is a tag name with optional ``#id`` / ``.class`` predicates;
    the first step may match anywhere in the tree, subsequent steps must be
    direct children. Malformed paths fail here, at configuration load time.
    """
    steps = []
    if not path.strip().strip("/"):
        raise ValueError(f"empty selector path {path!r}")
    for raw_step in path.strip().strip("/").split("/"):
        match = _STEP_RE.match(raw_step)
        if not match or not raw_step:
            raise ValueError(f"malformed selector step {raw_step!r} in {path!r}")
        if not match.group("tag") and not match.group("id") and not match.group("cls"):
            raise ValueError(f"empty selector step {raw_step!r} in {path!r}")
        steps.append(_Step(match.group("tag"), match.group("id"), match.group("cls")))
    return tuple(steps)


def select(root: HtmlNode, steps: tuple[_Step, ...]) -> list[HtmlNode]:
    matches = [node for node in root.iter_nodes() if node is not root and steps[0].matches(node)]
    for step in steps[1:]:
        matches = [child for node in matches for child in node.children if step.matches(child)]
    return matches


@dataclass(frozen=True)
class FieldSelector:
    path: str
    pattern: str | None = None

    def compiled(self):
        return compile_path(self.path)


class SelectorMap:
    """Field name -> (element path, optional value pattern)."""

    def __init__(self, selectors: dict[str, FieldSelector]):
        for name, selector in selectors.items():
            if name not in FIELD_NAMES:
                raise ValueError(f"selector map names unknown KPI field {name!r}")
            compile_path(selector.path)
            if selector.pattern is not None:
                re.compile(selector.pattern)
        self.selectors = dict(selectors)

    @classmethod
    def from_paths(cls, paths: dict[str, str]) -> "SelectorMap":
        return cls({name: FieldSelector(path) for name, path in paths.items()})

    def items(self):
        return self.selectors.items()


def extract_fields(html: str, selectors: SelectorMap) -> dict[str, str]:
    """Resolve every selector against the page; unmatched selectors yield
    absent entries, a selector matching more than one node is an error
    naming the field."""
    root = parse_html(html)
    raw: dict[str, str] = {}
    for name, selector in selectors.items():
        nodes = select(root, selector.compiled())
        if not nodes:
            continue
        if len(nodes) > 1:
            raise ParseFailed(f"selector for {name!r} matched {len(nodes)} nodes", raw=html)
        text = nodes[0].text().strip()
        if selector.pattern is not None:
            match = re.search(selector.pattern, text)
            if not match:
                raise ParseFailed(
                    f"value pattern for {name!r} found nothing in {text!r}", raw=html
                )
            text = match.group(1) if match.groups() else match.group(0)
        raw[name] = text
    return raw


_WEB_MEASURES = {
    # field -> unit; grain is inferred from the decimals the page displays
    "rsrp": Unit.DBM,
    "rsrq": Unit.DB,
    "snr": Unit.DB,
    "sinr": Unit.DB,
    "bandwidth": Unit.MHZ,
}


def parse_web_snapshot(raw: dict[str, str], device: str) -> KpiSnapshot:
    """Turn extracted raw strings into a snapshot for (WEB, device).

    Numeric tokens are parsed with unit stripping; the grain is inferred
    from the decimal places shown on the page.
    """
    if not raw:
        raise ParseFailed("empty page")
    audit = "\n".join(f"{k}={v}" for k, v in sorted(raw.items()))
    try:
        measures = {}
        for name, unit in _WEB_MEASURES.items():
            if name in raw:
                measures[name] = wire.parse_measurement_inferred(raw[name], unit)
        band, band_raw = (None, None)
        if "band" in raw:
            band, band_raw = wire.parse_band(raw["band"])
        cell = CellIdentity(
            rat=normalize_rat(raw["rat"]) if "rat" in raw else None,
            rat_raw=raw.get("rat"),
            mcc=raw.get("mcc"),
            mnc=raw.get("mnc"),
            nr_cell_id=wire.parse_int(raw["nr_cell_id"]) if "nr_cell_id" in raw else None,
            tac=wire.parse_int(raw["tac"]) if "tac" in raw else None,
            pci=wire.parse_int(raw["pci"]) if "pci" in raw else None,
            band=band,
            band_raw=band_raw,
            arfcn=wire.parse_int(raw["arfcn"]) if "arfcn" in raw else None,
        )
        radio = RadioMetrics(
            rsrp=measures.get("rsrp"),
            rsrq=measures.get("rsrq"),
            snr=measures.get("snr"),
            sinr=measures.get("sinr"),
            bandwidth=measures.get("bandwidth"),
        )
    except ValueError as exc:
        raise ParseFailed(str(exc), raw=audit) from exc
    return KpiSnapshot(method=Method.WEB, device=device, cell=cell, radio=radio, raw=audit)


@dataclass(frozen=True)
class WebSessionConfig:
    base_url: str
    device: str
    username: str | None = None
    password: str | None = None
    login_path: str = "/login"
    status_path: str = "/status"
    timeout: float = 3.0


class WebSession:
    def __init__(self, config: WebSessionConfig, http: requests.Session):
        self.config = config
        self.http = http

    def fetch_status(self) -> str:
        config = self.config
        try:
            response = self.http.get(
                config.base_url + config.status_path, timeout=config.timeout
            )
        except requests.exceptions.RequestException as exc:
            raise TransportDown(f"status fetch failed: {exc}") from exc
        if response.status_code in (401, 403):
            raise AuthFailed(f"status fetch rejected with {response.status_code}",
                             raw=response.text)
        if response.status_code != 200:
            raise TransportDown(f"status fetch returned {response.status_code}",
                                raw=response.text)
        return response.text

    def close(self) -> None:
        self.http.close()


def login(config: WebSessionConfig) -> WebSession:
    """Authenticate against the dashboard; re-login is idempotent.

    When the config carries no credentials the session is usable without a
    login round-trip.
    """
    http = requests.Session()
    if config.username is None and config.password is None:
        return WebSession(config, http)
    try:
        response = http.post(
            config.base_url + config.login_path,
            data={"user": config.username or "", "pass": config.password or ""},
            timeout=config.timeout,
        )
    except requests.exceptions.RequestException as exc:
        http.close()
        raise TransportDown(f"login failed: {exc}") from exc
    if response.status_code in (401, 403):
        http.close()
        raise AuthFailed("dashboard rejected the credentials", raw=response.text)
    if response.status_code != 200:
        http.close()
        raise TransportDown(f"login returned {response.status_code}", raw=response.text)
    return WebSession(config, http)


class WebCollector:
    """Polls one CPE dashboard; one session per collector task."""

    method = Method.WEB

    def __init__(self, config: WebSessionConfig, selectors: SelectorMap, clock=None):
        self.config = config
        self.selectors = selectors
        self.device = config.device
        self.clock = clock or SystemClock()
        self.session: WebSession | None = None

    def connect(self) -> None:
        self.session = login(self.config)

    def poll(self) -> KpiSnapshot:
        if self.session is None:
            raise TransportDown("web collector polled before login")
        html = self.session.fetch_status()
        raw = extract_fields(html, self.selectors)
        snapshot = parse_web_snapshot(raw, device=self.device)
        snapshot = dataclasses.replace(snapshot, raw=html)
        return snapshot.stamped(Timestamp(self.clock.now(), self.clock.wall()))

    def close(self) -> None:
        if self.session is not None:
            self.session.close()
            self.session = None
