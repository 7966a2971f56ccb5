"""ccREL license fragments: XHTML with a handful of RDFa attributes.

Emission produces one fixed three-line fragment. Parsing is deliberately
lenient about surrounding markup (fragments copied from the CC license
chooser carry images, ``<br>`` tags and extra namespaces) but strict about
the structure of the elements it actually reads.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass, field

from geolicense.algebra import LicenseDesignation

__all__ = [
    "CcrelError",
    "MissingLicense",
    "UnknownLicenseUri",
    "ParseError",
    "LicenseDocument",
    "canonical_uri",
    "label",
    "designation_from_uri",
    "parse_ccrel",
    "emit_ccrel",
    "emit_incompatible",
    "xml_escape",
    "CC_NS",
    "DC_NS",
]

CC_NS = "http://creativecommons.org/ns#"
DC_NS = "http://purl.org/dc/elements/1.1/"

D = LicenseDesignation


class CcrelError(ValueError):
    pass


class MissingLicense(CcrelError):
    def __init__(self, message: str = 'no element with rel="license" found'):
        super().__init__(message)


class UnknownLicenseUri(CcrelError):
    def __init__(self, uri: str):
        super().__init__(f"license URI not recognised: {uri}")
        self.uri = uri


class ParseError(CcrelError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


_URIS = {
    D.PD: "http://creativecommons.org/publicdomain/mark/1.0/",
    D.CC0: "http://creativecommons.org/publicdomain/zero/1.0/",
    D.BY: "http://creativecommons.org/licenses/by/3.0/",
    D.BY_NC: "http://creativecommons.org/licenses/by-nc/3.0/",
    D.BY_NC_ND: "http://creativecommons.org/licenses/by-nc-nd/3.0/",
    D.BY_NC_ND_SA: "urn:wls:license:by-nc-nd-sa",
    D.BY_NC_SA: "http://creativecommons.org/licenses/by-nc-sa/3.0/",
    D.BY_ND: "http://creativecommons.org/licenses/by-nd/3.0/",
    D.BY_ND_SA: "urn:wls:license:by-nd-sa",
    D.BY_SA: "http://creativecommons.org/licenses/by-sa/3.0/",
    D.ARR: "urn:wls:license:arr",
    D.NL: "urn:wls:license:nl",
}

_LABELS = {
    D.PD: "Public Domain Mark 1.0",
    D.CC0: "CC0 1.0",
    D.BY: "CC BY 3.0",
    D.BY_NC: "CC BY-NC 3.0",
    D.BY_NC_ND: "CC BY-NC-ND 3.0",
    D.BY_NC_ND_SA: "BY-NC-ND-SA (composite, non-standard)",
    D.BY_NC_SA: "CC BY-NC-SA 3.0",
    D.BY_ND: "CC BY-ND 3.0",
    D.BY_ND_SA: "BY-ND-SA (composite, non-standard)",
    D.BY_SA: "CC BY-SA 3.0",
    D.ARR: "All Rights Reserved",
    D.NL: "No License",
}

# Six licenses CC actually publishes. The 1.0 suite spelled some of them with
# the flags in another order (by-nd-nc), so the path segment is read as a set.
_REAL_CC = {D.BY, D.BY_NC, D.BY_NC_ND, D.BY_NC_SA, D.BY_ND, D.BY_SA}

_CC_LICENSE_RE = re.compile(
    r"^https?://(?:www\.)?creativecommons\.org/licenses/"
    r"(?P<code>by(?:-(?:nc|nd|sa))*)/(?P<version>\d+(?:\.\d+)*)"
    r"(?:/[a-z]{2}(?:-[a-z]{2})?)?/?$",
    re.IGNORECASE,
)
_CC_PUBLICDOMAIN_RE = re.compile(
    r"^https?://(?:www\.)?creativecommons\.org/publicdomain/(?P<kind>mark|zero)/"
    r"(?P<version>\d+(?:\.\d+)*)/?$",
    re.IGNORECASE,
)
_URN_RE = re.compile(r"^urn:wls:license:(?P<code>[a-z0-9-]+)$", re.IGNORECASE)


def canonical_uri(d: LicenseDesignation) -> str:
    return _URIS[d]


def label(d: LicenseDesignation) -> str:
    return _LABELS[d]


def designation_from_uri(uri: str) -> LicenseDesignation:
    """Map a license URI to a designation.

    Any ``http``/``https`` scheme and any CC version segment are accepted;
    the non-CC designations use ``urn:wls:license:<code>``.
    """
    u = uri.strip()
    m = _CC_LICENSE_RE.match(u)
    if m:
        parts = m["code"].lower().split("-")[1:]
        if len(set(parts)) == len(parts):
            code = "-".join(["BY", *(p.upper() for p in sorted(parts))])
            d = LicenseDesignation(code)
            if d in _REAL_CC:
                return d
        raise UnknownLicenseUri(uri)
    m = _CC_PUBLICDOMAIN_RE.match(u)
    if m:
        return D.PD if m["kind"].lower() == "mark" else D.CC0
    m = _URN_RE.match(u)
    if m:
        try:
            return LicenseDesignation(m["code"].upper())
        except ValueError:
            pass
    raise UnknownLicenseUri(uri)


@dataclass(frozen=True)
class LicenseDocument:
    """A license statement about one work.

    ``license_uri`` defaults to the canonical URI of ``designation``; a
    non-canonical URI (another CC version, https) is kept as given but must
    map back to the same designation.
    """

    designation: LicenseDesignation
    license_uri: str = ""
    work_uri: str | None = None
    title: str | None = None
    attribution_name: str | None = None
    attribution_url: str | None = None
    raw_fragment: str | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self.license_uri:
            object.__setattr__(self, "license_uri", canonical_uri(self.designation))
        elif designation_from_uri(self.license_uri) is not self.designation:
            raise CcrelError(
                f"license URI {self.license_uri} does not denote {self.designation.code}"
            )

    @property
    def carries_attribution(self) -> bool:
        return self.designation.is_cc_license and (
            self.attribution_name is not None or self.attribution_url is not None
        )

    def to_json(self) -> dict:
        return {
            "designation": self.designation.code,
            "licenseUri": self.license_uri,
            "label": label(self.designation),
            "workUri": self.work_uri,
            "title": self.title,
            "attributionName": self.attribution_name,
            "attributionUrl": self.attribution_url,
        }


# --------------------------------------------------------------------------
# emission


def xml_escape(text: str) -> str:
    return (
        text.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _open_div(work_uri: str | None) -> str:
    about = f' about="{xml_escape(work_uri)}"' if work_uri is not None else ""
    return f'<div xmlns:cc="{CC_NS}" xmlns:dc="{DC_NS}"{about}>'


def _attribution(doc: LicenseDocument) -> str:
    if not doc.carries_attribution:
        return ""
    attrs = []
    if doc.attribution_url is not None:
        attrs.append('rel="cc:attributionURL"')
    if doc.attribution_name is not None:
        attrs.append('property="cc:attributionName"')
    if doc.attribution_url is not None:
        attrs.append(f'href="{xml_escape(doc.attribution_url)}"')
    text = doc.attribution_name if doc.attribution_name is not None else doc.attribution_url
    return f" by <a {' '.join(attrs)}>{xml_escape(text)}</a>"


def emit_ccrel(doc: LicenseDocument) -> str:
    if doc.title is not None:
        subject = f'<span property="dc:title">{xml_escape(doc.title)}</span>'
    else:
        subject = "This work"
    line2 = (
        f"{subject}{_attribution(doc)} is licensed under "
        f'<a rel="license" href="{xml_escape(doc.license_uri)}">'
        f"{xml_escape(label(doc.designation))}</a>."
    )
    return f"{_open_div(doc.work_uri)}\n{line2}\n</div>\n"


def emit_incompatible(work_uri: str | None = None) -> str:
    return f"{_open_div(work_uri)}\nThis combination is incompatible (X).\n</div>\n"


# --------------------------------------------------------------------------
# parsing

# Elements whose nesting is checked; everything else is skipped over.
_CONTAINERS = frozenset({"div", "span", "a", "p"})

_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9:._-]*")
_ATTR_RE = re.compile(r"""\s*([^\s=/>"']+)(?:\s*=\s*(?:"([^"]*)"|'([^']*)'|([^\s"'=<>`]+)))?""")
_TITLE_PROPS = frozenset({"dc:title", "dct:title"})


class _Capture:
    __slots__ = ("field", "depth", "parts")

    def __init__(self, field_name: str, depth: int):
        self.field = field_name
        self.depth = depth
        self.parts: list[str] = []


class _Scanner:
    def __init__(self, text: str, base: int = 0):
        self.text = text
        self.base = base
        self.stack: list[tuple[str, int]] = []
        self.captures: list[_Capture] = []
        self.found: dict[str, str] = {}
        self.root_about: str | None = None
        self.seen_element = False

    def error(self, message: str, pos: int) -> ParseError:
        return ParseError(message, self.base + len(self.text[:pos].encode("utf-8", "surrogatepass")))

    def run(self) -> None:
        text, n, pos = self.text, len(self.text), 0
        while pos < n:
            lt = text.find("<", pos)
            if lt < 0:
                self.on_text(text[pos:])
                break
            if lt > pos:
                self.on_text(text[pos:lt])
            pos = self.markup(lt)
        if self.stack:
            name, at = self.stack[-1]
            raise self.error(f"<{name}> is never closed", at)

    def markup(self, lt: int) -> int:
        text = self.text
        for opener, closer in (("<!--", "-->"), ("<![CDATA[", "]]>"), ("<?", "?>"), ("<!", ">")):
            if text.startswith(opener, lt):
                end = text.find(closer, lt + len(opener))
                if end < 0:
                    raise self.error(f"unterminated {opener!r}", lt)
                if opener == "<![CDATA[":
                    self.on_text(text[lt + 9 : end], escaped=False)
                return end + len(closer)
        if text.startswith("</", lt):
            m = _NAME_RE.match(text, lt + 2)
            if not m:
                raise self.error("malformed end tag", lt)
            end = text.find(">", m.end())
            if end < 0 or text[m.end() : end].strip():
                raise self.error("unterminated end tag", lt)
            self.end_tag(m.group().lower(), lt)
            return end + 1
        m = _NAME_RE.match(text, lt + 1)
        if not m:
            # a bare "<" in text content
            self.on_text("<")
            return lt + 1
        return self.start_tag(m.group().lower(), m.end(), lt)

    def start_tag(self, name: str, pos: int, lt: int) -> int:
        text, attrs = self.text, {}
        while True:
            m = _ATTR_RE.match(text, pos)
            if m and m.end() > pos and m.group(1):
                attr_start = m.start(1)
                after = m.end()
                # a quote that opened but never closed shows up as a bare name
                # followed by ="... with no closing quote
                if m.group(2) is None and m.group(3) is None and m.group(4) is None:
                    rest = text[after:].lstrip()
                    if rest.startswith("="):
                        raise self.error(f"unterminated value for attribute {m.group(1)!r}", attr_start)
                key = m.group(1).lower()
                value = next((g for g in m.group(2, 3, 4) if g is not None), "")
                attrs.setdefault(key, html.unescape(value))
                pos = after
                continue
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if text.startswith("/>", pos):
                self.element(name, attrs, lt, self_closing=True)
                return pos + 2
            if text.startswith(">", pos):
                self.element(name, attrs, lt, self_closing=False)
                return pos + 1
            if pos >= len(text):
                raise self.error(f"unterminated <{name}> tag", lt)
            raise self.error(f"unexpected character {text[pos]!r} in <{name}> tag", pos)

    def element(self, name: str, attrs: dict[str, str], lt: int, self_closing: bool) -> None:
        if not self.seen_element:
            self.seen_element = True
            if "about" in attrs:
                self.root_about = attrs["about"]
        rels = attrs.get("rel", "").split()
        prop = attrs.get("property", "").split()
        if "license" in rels and "license" not in self.found:
            self.found["license"] = attrs.get("href", "")
        if "cc:attributionURL" in rels and "attribution_url" not in self.found:
            self.found["attribution_url"] = attrs.get("href", "")

        capture_fields = []
        if _TITLE_PROPS.intersection(prop):
            capture_fields.append("title")
        if "cc:attributionName" in prop:
            capture_fields.append("attribution_name")
        for f in capture_fields:
            if f in self.found or any(c.field == f for c in self.captures):
                continue
            if "content" in attrs:
                self.found[f] = attrs["content"]
            elif self_closing or name not in _CONTAINERS:
                self.found[f] = ""
            else:
                self.captures.append(_Capture(f, len(self.stack) + 1))

        if name in _CONTAINERS and not self_closing:
            self.stack.append((name, lt))

    def end_tag(self, name: str, lt: int) -> None:
        if name not in _CONTAINERS:
            return
        if not self.stack:
            raise self.error(f"</{name}> has no matching start tag", lt)
        top, _ = self.stack[-1]
        if top != name:
            raise self.error(f"</{name}> closes <{top}>", lt)
        depth = len(self.stack)
        self.stack.pop()
        for cap in [c for c in self.captures if c.depth == depth]:
            self.found.setdefault(cap.field, "".join(cap.parts))
            self.captures.remove(cap)

    def on_text(self, chunk: str, escaped: bool = True) -> None:
        if self.captures:
            value = html.unescape(chunk) if escaped else chunk
            for cap in self.captures:
                cap.parts.append(value)


def _decode(fragment: str | bytes) -> str:
    if isinstance(fragment, (bytes, bytearray)):
        try:
            fragment = bytes(fragment).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("input is not valid UTF-8", exc.start) from None
    return fragment


def parse_ccrel(fragment: str | bytes) -> LicenseDocument:
    """Read a ccREL fragment.

    The first element with ``rel="license"`` supplies the license; later ones
    (dual licensing) are ignored. ``about`` is only read from the outermost
    element. Raises ``MissingLicense``, ``UnknownLicenseUri`` or
    ``ParseError`` (carrying a byte offset).
    """
    text = _decode(fragment)
    raw = text
    bom = 0
    if text.startswith("\ufeff"):
        text, bom = text[1:], 3
    scanner = _Scanner(text, bom)
    scanner.run()
    found = scanner.found
    if "license" not in found:
        raise MissingLicense()
    uri = found["license"]
    designation = designation_from_uri(uri)
    return LicenseDocument(
        designation=designation,
        license_uri=uri.strip(),
        work_uri=scanner.root_about,
        title=found.get("title"),
        attribution_name=found.get("attribution_name"),
        attribution_url=found.get("attribution_url"),
        raw_fragment=raw,
    )
