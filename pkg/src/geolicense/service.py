"""The Web License Service: an OGC-style HTTP endpoint that answers with licenses.

``GET /wls?SERVICE=WLS&REQUEST=GetLicense&LAYERS=a,b`` reads the ``.lic``
sidecar of each layer, combines the designations in request order and
renders the result as a ccREL fragment, JSON or plain text.
``REQUEST=GetCapabilities`` lists the configured layers and their current
licenses. Sidecars are re-read on every request.
"""

from __future__ import annotations

import enum
import json
import logging
import signal
import threading
from dataclasses import dataclass
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qsl, urlsplit

from geolicense.algebra import (
    Engine,
    LicenseDesignation,
    Mode,
    Outcome,
    X,
    combine_all,
)
from geolicense.ccrel import LicenseDocument, canonical_uri, emit_ccrel, emit_incompatible
from geolicense.config import CatalogSource, LayerEntry, WlsConfig
from geolicense.sidecar import (
    BadSidecar,
    CatalogError,
    SidecarIOError,
    lookup_catalog,
    read_license,
    read_license_at,
)

log = logging.getLogger(__name__)

__all__ = [
    "PROTOCOL_VERSION",
    "RequestKind",
    "Format",
    "WlsRequest",
    "Response",
    "ServiceException",
    "InvalidService",
    "InvalidRequest",
    "MissingParameter",
    "InvalidParameterValue",
    "parse_query",
    "handle_get_capabilities",
    "handle_get_license",
    "handle_query",
    "make_server",
    "serve",
    "StartupError",
]

PROTOCOL_VERSION = "1.0.0"
SERVICE_NAME = "WLS"
ENDPOINT = "/wls"


class RequestKind(str, enum.Enum):
    GET_CAPABILITIES = "GetCapabilities"
    GET_LICENSE = "GetLicense"


class Format(str, enum.Enum):
    XHTML = "application/xhtml+xml"
    JSON = "application/json"
    TEXT = "text/plain"

    @property
    def content_type(self) -> str:
        return "text/plain; charset=utf-8" if self is Format.TEXT else self.value


@dataclass(frozen=True)
class WlsRequest:
    request_kind: RequestKind
    layers: tuple[str, ...] = ()
    format: Format = Format.XHTML
    engine: Engine = Engine.MATRIX
    mode: Mode = Mode.SYMMETRIZED


@dataclass(frozen=True)
class Response:
    status: int
    content_type: str
    body: bytes

    @classmethod
    def json(cls, payload: dict, status: int = 200) -> "Response":
        return cls(status, Format.JSON.value, _dump(payload))

    @property
    def payload(self):
        return json.loads(self.body)


def _dump(payload: dict) -> bytes:
    return (json.dumps(payload, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


# --------------------------------------------------------------------------
# request parsing


class ServiceException(Exception):
    """An error reported to the client with the given HTTP status."""

    status = HTTPStatus.BAD_REQUEST
    code = "ServiceException"

    def payload(self) -> dict:
        return {"error": self.code, "detail": str(self)}

    def response(self) -> Response:
        return Response.json(self.payload(), int(self.status))


class InvalidService(ServiceException):
    code = "InvalidService"


class InvalidRequest(ServiceException):
    code = "InvalidRequest"


class MissingParameter(ServiceException):
    code = "MissingParameter"

    def __init__(self, name: str):
        super().__init__(f"missing required parameter {name}")
        self.name = name

    def payload(self) -> dict:
        return {**super().payload(), "parameter": self.name}


class InvalidParameterValue(ServiceException):
    code = "InvalidParameterValue"

    def __init__(self, name: str, value: str):
        super().__init__(f"invalid value {value!r} for parameter {name}")
        self.name = name
        self.value = value

    def payload(self) -> dict:
        return {**super().payload(), "parameter": self.name, "value": self.value}


class UnknownLayer(ServiceException):
    status = HTTPStatus.NOT_FOUND
    code = "UnknownLayer"

    def __init__(self, layer: str):
        super().__init__(f"no layer named {layer!r}")
        self.layer = layer

    def payload(self) -> dict:
        return {"error": self.code, "layer": self.layer}


class LayerFailure(ServiceException):
    status = HTTPStatus.INTERNAL_SERVER_ERROR

    def __init__(self, code: str, layer: str, detail: str):
        super().__init__(detail)
        self.code = code
        self.layer = layer

    def payload(self) -> dict:
        return {"error": self.code, "layer": self.layer, "detail": str(self)}


def _enum_param(params: dict[str, str], name: str, enum_cls, default):
    if name not in params:
        return default
    value = params[name]
    try:
        return enum_cls(value)
    except ValueError:
        raise InvalidParameterValue(name, value) from None


def parse_query(query: str) -> WlsRequest:
    """Parse a KVP query string. Names are case-insensitive, values are not."""
    params: dict[str, str] = {}
    for key, value in parse_qsl(query, keep_blank_values=True):
        params.setdefault(key.upper(), value)

    service = params.get("SERVICE")
    if service is None:
        raise InvalidService("missing parameter SERVICE")
    if service != SERVICE_NAME:
        raise InvalidService(f"unsupported service {service!r}; this endpoint serves {SERVICE_NAME}")
    if "REQUEST" not in params:
        raise InvalidRequest("missing parameter REQUEST")
    try:
        kind = RequestKind(params["REQUEST"])
    except ValueError:
        raise InvalidRequest(f"unsupported request {params['REQUEST']!r}") from None

    if "FORMAT" in params:
        # an unescaped "+" in application/xhtml+xml arrives as a space
        params["FORMAT"] = params["FORMAT"].replace(" ", "+")
    fmt = _enum_param(params, "FORMAT", Format, Format.XHTML)
    engine = _enum_param(params, "ENGINE", Engine, Engine.MATRIX)
    mode = _enum_param(params, "MODE", Mode, Mode.SYMMETRIZED)

    layers: tuple[str, ...] = ()
    if kind is RequestKind.GET_LICENSE:
        raw = params.get("LAYERS", "")
        if not raw:
            raise MissingParameter("LAYERS")
        layers = tuple(name.strip() for name in raw.split(","))
        if any(not name for name in layers):
            raise InvalidParameterValue("LAYERS", raw)
    return WlsRequest(kind, layers, fmt, engine, mode)


# --------------------------------------------------------------------------
# pipeline: extract -> combine -> render


def _extract(layer: LayerEntry) -> LicenseDocument:
    source = layer.source
    try:
        if isinstance(source, CatalogSource):
            entry = lookup_catalog(source.catalog_path, source.dataset_id)
            return read_license_at(entry.lic_path)
        return read_license(source)
    except BadSidecar as exc:
        raise LayerFailure("BadLicenseDocument", layer.name, str(exc.cause)) from exc
    except (CatalogError, SidecarIOError, OSError) as exc:
        raise LayerFailure("LayerUnavailable", layer.name, str(exc)) from exc


def handle_get_capabilities(config: WlsConfig) -> Response:
    layers = []
    for layer in config.layers:
        try:
            doc = _extract(layer)
        except LayerFailure as exc:
            layers.append({"name": layer.name, "error": exc.code, "detail": str(exc)})
        else:
            layers.append(
                {
                    "name": layer.name,
                    "designation": doc.designation.code,
                    "licenseUri": doc.license_uri,
                }
            )
    return Response.json(
        {
            "service": SERVICE_NAME,
            "version": PROTOCOL_VERSION,
            "title": config.service.title,
            "requests": [k.value for k in RequestKind],
            "formats": [f.value for f in Format],
            "engines": [e.value for e in Engine],
            "modes": [m.value for m in Mode],
            "layers": layers,
        }
    )


def _render(req: WlsRequest, result: Outcome, docs: list[tuple[str, LicenseDocument]]) -> Response:
    compatible = result is not X
    if req.format is Format.TEXT:
        return Response(200, Format.TEXT.content_type, result.code.encode("utf-8"))
    if req.format is Format.JSON:
        return Response.json(
            {
                "compatible": compatible,
                "designation": result.code,
                "licenseUri": canonical_uri(result) if compatible else None,
                "layers": [{"name": n, "designation": d.designation.code} for n, d in docs],
                "engine": req.engine.value,
                "mode": req.mode.value,
            }
        )
    if compatible:
        body = emit_ccrel(LicenseDocument(result, title=",".join(req.layers)))
    else:
        body = emit_incompatible()
    return Response(200, Format.XHTML.content_type, body.encode("utf-8"))


def handle_get_license(config: WlsConfig, req: WlsRequest) -> Response:
    try:
        entries = []
        for name in req.layers:
            entry = config.layer(name)
            if entry is None:
                raise UnknownLayer(name)
            entries.append(entry)
        docs = [(e.name, _extract(e)) for e in entries]
    except ServiceException as exc:
        return exc.response()
    designations: list[LicenseDesignation] = [d.designation for _, d in docs]
    result = combine_all(designations, req.engine, req.mode)
    return _render(req, result, docs)


def handle_query(config: WlsConfig, query: str) -> Response:
    try:
        req = parse_query(query)
    except ServiceException as exc:
        return exc.response()
    if req.request_kind is RequestKind.GET_CAPABILITIES:
        return handle_get_capabilities(config)
    return handle_get_license(config, req)


# --------------------------------------------------------------------------
# HTTP


class StartupError(RuntimeError):
    pass


class _Handler(BaseHTTPRequestHandler):
    server: "_WlsServer"
    server_version = "geolicense-wls/" + PROTOCOL_VERSION

    def _send(self, resp: Response, extra_headers: dict[str, str] | None = None) -> None:
        self.send_response(resp.status)
        self.send_header("Content-Type", resp.content_type)
        self.send_header("Content-Length", str(len(resp.body)))
        for k, v in (extra_headers or {}).items():
            self.send_header(k, v)
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(resp.body)

    def do_GET(self) -> None:
        url = urlsplit(self.path)
        if url.path != ENDPOINT:
            self._send(Response.json({"error": "NotFound", "path": url.path}, 404))
            return
        try:
            resp = handle_query(self.server.config, url.query)
        except Exception:
            log.exception("unhandled error for %s", self.path)
            resp = Response.json({"error": "InternalError"}, 500)
        self._send(resp)

    def _not_allowed(self) -> None:
        self._send(
            Response.json({"error": "MethodNotAllowed", "method": self.command}, 405),
            {"Allow": "GET"},
        )

    do_POST = do_PUT = do_DELETE = do_PATCH = do_HEAD = do_OPTIONS = _not_allowed

    def log_message(self, format: str, *args) -> None:
        log.info("%s - %s", self.address_string(), format % args)


class _WlsServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, config: WlsConfig):
        self.config = config
        super().__init__(address, _Handler)


def make_server(config: WlsConfig, port: int | None = None, bind: str | None = None) -> _WlsServer:
    """Bind a server for ``config`` without starting it (port 0 picks a free port)."""
    host = bind if bind is not None else config.service.bind
    port = port if port is not None else config.service.port
    try:
        return _WlsServer((host, port), config)
    except OSError as exc:
        raise StartupError(f"cannot bind {host}:{port}: {exc.strerror or exc}") from exc


def serve(config: WlsConfig, port: int | None = None, bind: str | None = None) -> None:
    """Run the service until SIGTERM or SIGINT."""
    server = make_server(config, port, bind)
    host, bound_port = server.server_address[:2]
    log.info("serving %s on http://%s:%s%s", config.service.title, host, bound_port, ENDPOINT)

    def stop(signum, frame) -> None:
        log.info("received signal %s, shutting down", signum)
        threading.Thread(target=server.shutdown, daemon=True).start()

    previous = {}
    if threading.current_thread() is threading.main_thread():
        for sig in (signal.SIGTERM, signal.SIGINT):
            previous[sig] = signal.signal(sig, stop)
    try:
        server.serve_forever()
    finally:
        for sig, handler in previous.items():
            signal.signal(sig, handler)
        server.server_close()
