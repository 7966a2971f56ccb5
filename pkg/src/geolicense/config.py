"""Configuration file for the license server.

The format is line based::

    # comments and blank lines are ignored
    [server]
    port = 8080
    bind = 127.0.0.1
    title = County mash-up licenses

    [layer roads]
    shapefile = data/roads

    [layer parks]
    lic = data/parks.lic

    [layer schools]
    catalog = data/catalog.tsv:schools

Relative paths are resolved against the directory holding the config file.
"""

from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from geolicense.sidecar import DatasetKind, DatasetRef

log = logging.getLogger(__name__)

__all__ = ["ConfigError", "CatalogSource", "LayerEntry", "ServiceSettings", "WlsConfig", "load_config", "parse_config"]

LAYER_NAME_RE = re.compile(r"[A-Za-z0-9_-]+")
_SECTION_RE = re.compile(r"^\[\s*(?P<kind>server|layer)(?:\s+(?P<name>[^\]]*?))?\s*\]$")
_SOURCE_KEYS = ("shapefile", "lic", "catalog")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = f"{path or '<config>'}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class CatalogSource:
    catalog_path: Path
    dataset_id: str


LayerSource = Union[DatasetRef, CatalogSource]


@dataclass(frozen=True)
class LayerEntry:
    name: str
    source: LayerSource


@dataclass(frozen=True)
class ServiceSettings:
    port: int = 8080
    bind: str = "127.0.0.1"
    title: str = "Web License Service"


@dataclass(frozen=True)
class WlsConfig:
    layers: tuple[LayerEntry, ...]
    service: ServiceSettings = field(default_factory=ServiceSettings)
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if not self.layers:
            raise ConfigError("at least one [layer ...] section is required")
        seen = set()
        for layer in self.layers:
            if not LAYER_NAME_RE.fullmatch(layer.name):
                raise ConfigError(f"invalid layer name {layer.name!r}")
            if layer.name in seen:
                raise ConfigError(f"duplicate layer name {layer.name!r}")
            seen.add(layer.name)

    def layer(self, name: str) -> LayerEntry | None:
        for entry in self.layers:
            if entry.name == name:
                return entry
        return None


def load_config(path: str | os.PathLike) -> WlsConfig:
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror or exc}", path=str(path)) from exc
    return parse_config(text, base_dir=path.parent, source=str(path))


def parse_config(text: str, base_dir: str | os.PathLike = ".", source: str | None = None) -> WlsConfig:
    base = Path(base_dir)

    def fail(msg: str, line: int) -> ConfigError:
        return ConfigError(msg, line, source)

    def resolve(value: str) -> Path:
        p = Path(value).expanduser()
        return p if p.is_absolute() else base / p

    settings: dict[str, object] = {}
    layers: list[LayerEntry] = []
    layer_lines: dict[str, int] = {}
    warnings: list[str] = []
    section: str | None = None
    current: dict | None = None
    server_seen = False

    def finish_layer() -> None:
        if current is None:
            return
        if current["source"] is None:
            raise fail(
                f"layer {current['name']!r} needs one of {', '.join(_SOURCE_KEYS)}",
                current["line"],
            )
        layers.append(LayerEntry(current["name"], current["source"]))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _SECTION_RE.match(line)
        if m:
            finish_layer()
            current = None
            if m["kind"] == "server":
                if m["name"]:
                    raise fail(f"unexpected section name in {line}", lineno)
                if server_seen:
                    raise fail("duplicate [server] section", lineno)
                server_seen, section = True, "server"
            else:
                name = (m["name"] or "").strip()
                if not LAYER_NAME_RE.fullmatch(name):
                    raise fail(f"invalid layer name {name!r} (allowed: A-Z a-z 0-9 _ -)", lineno)
                if name in layer_lines:
                    raise fail(
                        f"duplicate layer name {name!r} (first defined on line {layer_lines[name]})",
                        lineno,
                    )
                layer_lines[name] = lineno
                section = "layer"
                current = {"name": name, "source": None, "line": lineno}
            continue
        if line.startswith("["):
            raise fail(f"unrecognised section header {line}", lineno)
        key, sep, value = line.partition("=")
        if not sep:
            raise fail(f"expected 'key = value', got {line!r}", lineno)
        key, value = key.strip().lower(), value.strip()
        if section is None:
            raise fail(f"{key!r} appears before any section", lineno)

        if section == "server":
            if key == "port":
                try:
                    port = int(value)
                except ValueError:
                    raise fail(f"port must be an integer, got {value!r}", lineno) from None
                if not 0 <= port <= 65535:
                    raise fail(f"port out of range: {port}", lineno)
                settings["port"] = port
            elif key == "bind":
                settings["bind"] = value
            elif key == "title":
                settings["title"] = value
            else:
                warnings.append(f"line {lineno}: unknown server key {key!r} ignored")
            continue

        assert current is not None
        if key in _SOURCE_KEYS:
            if current["source"] is not None:
                raise fail(f"layer {current['name']!r} has more than one source", lineno)
            if not value:
                raise fail(f"empty value for {key!r}", lineno)
            if key == "shapefile":
                p = resolve(value)
                if p.suffix.lower() == ".shp":
                    p = p.with_suffix("")
                current["source"] = DatasetRef(p, DatasetKind.SHAPEFILE)
            elif key == "lic":
                p = resolve(value)
                if p.suffix != ".lic":
                    raise fail(f"lic source must name a .lic file: {value!r}", lineno)
                current["source"] = DatasetRef(p, DatasetKind.LIC_DIRECT)
            else:
                cat, colon, dataset_id = value.rpartition(":")
                if not colon or not cat or not dataset_id:
                    raise fail(f"catalog source must be <path>:<dataset_id>, got {value!r}", lineno)
                current["source"] = CatalogSource(resolve(cat), dataset_id)
        else:
            warnings.append(f"line {lineno}: unknown layer key {key!r} ignored")

    finish_layer()
    if not layers:
        raise ConfigError("at least one [layer ...] section is required", path=source)
    for w in warnings:
        log.warning("%s: %s", source or "<config>", w)
    return WlsConfig(tuple(layers), ServiceSettings(**settings), tuple(warnings))
