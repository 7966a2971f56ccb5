"""``.lic`` sidecar files and the flat-file dataset catalog."""

from __future__ import annotations

import enum
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

from geolicense.algebra import LicenseDesignation
from geolicense.ccrel import CcrelError, LicenseDocument, emit_ccrel, parse_ccrel

__all__ = [
    "SHAPEFILE_FILE_CODE",
    "DatasetKind",
    "DatasetRef",
    "CatalogEntry",
    "ShapefileReport",
    "SidecarError",
    "SidecarIOError",
    "BadSidecar",
    "AlreadyExists",
    "CatalogError",
    "DuplicateId",
    "CatalogParseError",
    "read_license",
    "read_license_at",
    "write_license",
    "validate_shapefile_presence",
    "load_catalog",
    "lookup_catalog",
]

# First big-endian int of every .shp/.shx main file header.
SHAPEFILE_FILE_CODE = 9994


class SidecarError(Exception):
    pass


class SidecarIOError(SidecarError, OSError):
    pass


class BadSidecar(SidecarError):
    """A sidecar exists but does not hold a readable ccREL fragment."""

    def __init__(self, path: Path, cause: CcrelError):
        super().__init__(f"{path}: {cause}")
        self.path = path
        self.cause = cause


class AlreadyExists(SidecarError, FileExistsError):
    pass


class CatalogError(SidecarError):
    pass


class DuplicateId(CatalogError):
    def __init__(self, dataset_id: str, line: int, first_line: int):
        super().__init__(
            f"line {line}: dataset id {dataset_id!r} already defined on line {first_line}"
        )
        self.dataset_id = dataset_id
        self.line = line


class CatalogParseError(CatalogError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DatasetKind(str, enum.Enum):
    SHAPEFILE = "shapefile"
    GENERIC = "generic"
    LIC_DIRECT = "lic-direct"


@dataclass(frozen=True)
class DatasetRef:
    base_path: Path
    kind: DatasetKind = DatasetKind.GENERIC

    def __post_init__(self) -> None:
        object.__setattr__(self, "base_path", Path(self.base_path))
        object.__setattr__(self, "kind", DatasetKind(self.kind))
        if self.kind is DatasetKind.LIC_DIRECT and self.base_path.suffix != ".lic":
            raise ValueError(f"lic-direct reference must end in .lic: {self.base_path}")

    @classmethod
    def from_path(cls, path: str | os.PathLike) -> "DatasetRef":
        """Guess the kind of dataset a user-supplied path refers to.

        ``x.lic`` is read directly, ``x.shp`` (or ``x`` next to an ``x.shp``)
        is a shapefile, and anything else is a generic dataset whose sidecar
        is ``x.lic``.
        """
        p = Path(path)
        if p.suffix == ".lic":
            return cls(p, DatasetKind.LIC_DIRECT)
        if p.suffix.lower() == ".shp":
            return cls(p.with_suffix(""), DatasetKind.SHAPEFILE)
        if _sibling(p, ".shp").exists():
            return cls(p, DatasetKind.SHAPEFILE)
        return cls(p, DatasetKind.GENERIC)

    @property
    def sidecar_path(self) -> Path:
        if self.kind is DatasetKind.LIC_DIRECT:
            return self.base_path
        return _sibling(self.base_path, ".lic")

    def companion(self, ext: str) -> Path:
        return _sibling(self.base_path, ext)


def _sibling(base: Path, ext: str) -> Path:
    # not with_suffix: "roads.v2" must become "roads.v2.lic"
    return base.with_name(base.name + ext)


@dataclass(frozen=True)
class CatalogEntry:
    dataset_id: str
    lic_path: Path


def read_license(ref: DatasetRef) -> LicenseDocument:
    """Read the license of a dataset.

    A dataset without a sidecar is reported as ``NL`` rather than as an
    error.
    """
    return read_license_at(ref.sidecar_path)


def read_license_at(path: str | os.PathLike) -> LicenseDocument:
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        return LicenseDocument(LicenseDesignation.NL)
    except OSError as exc:
        raise SidecarIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return parse_ccrel(data)
    except CcrelError as exc:
        raise BadSidecar(path, exc) from exc


def write_license(ref: DatasetRef, doc: LicenseDocument, overwrite: bool = False) -> Path:
    """Atomically write ``doc`` to the dataset's sidecar and return its path.

    The fragment is written to a temporary file in the same directory and
    moved into place, so readers see either the old or the new file. Without
    ``overwrite`` the final step is a hard link, which fails rather than
    replace a sidecar that appeared in the meantime.
    """
    path = ref.sidecar_path
    if not overwrite and path.exists():
        raise AlreadyExists(f"{path} already exists")
    data = emit_ccrel(doc).encode("utf-8")
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    except OSError as exc:
        raise SidecarIOError(f"cannot write {path}: {exc.strerror or exc}") from exc
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        if overwrite:
            os.replace(tmp, path)
        else:
            try:
                os.link(tmp, path)
            except FileExistsError:
                raise AlreadyExists(f"{path} already exists") from None
            except OSError:
                # no hard links on this filesystem
                if path.exists():
                    raise AlreadyExists(f"{path} already exists") from None
                os.replace(tmp, path)
    except SidecarError:
        raise
    except OSError as exc:
        raise SidecarIOError(f"cannot write {path}: {exc.strerror or exc}") from exc
    finally:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
    return path


@dataclass(frozen=True)
class ShapefileReport:
    shp_present: bool
    dbf_present: bool
    shx_present: bool
    header_ok: bool

    @property
    def complete(self) -> bool:
        return self.shp_present and self.dbf_present and self.shx_present and self.header_ok


def validate_shapefile_presence(ref: DatasetRef) -> ShapefileReport:
    shp = ref.companion(".shp")
    header_ok = False
    try:
        with open(shp, "rb") as fh:
            head = fh.read(4)
        header_ok = len(head) == 4 and struct.unpack(">i", head)[0] == SHAPEFILE_FILE_CODE
    except OSError:
        pass
    return ShapefileReport(
        shp_present=shp.is_file(),
        dbf_present=ref.companion(".dbf").is_file(),
        shx_present=ref.companion(".shx").is_file(),
        header_ok=header_ok,
    )


def load_catalog(path: str | os.PathLike) -> list[CatalogEntry]:
    """Parse a tab-separated ``dataset_id<TAB>lic_path`` catalog.

    Relative ``lic_path`` values are taken relative to the catalog's directory.
    """
    path = Path(path)
    text = path.read_text("utf-8")
    entries: list[CatalogEntry] = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.removesuffix("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise CatalogParseError(lineno, "expected dataset_id<TAB>lic_path")
        dataset_id, lic = fields
        if not dataset_id or not lic.strip():
            raise CatalogParseError(lineno, "empty dataset id or path")
        if dataset_id in seen:
            raise DuplicateId(dataset_id, lineno, seen[dataset_id])
        seen[dataset_id] = lineno
        lic_path = Path(lic.strip())
        if not lic_path.is_absolute():
            lic_path = path.parent / lic_path
        entries.append(CatalogEntry(dataset_id, lic_path))
    return entries


def lookup_catalog(path: str | os.PathLike, dataset_id: str) -> CatalogEntry:
    for entry in load_catalog(path):
        if entry.dataset_id == dataset_id:
            return entry
    raise CatalogError(f"{path}: no dataset {dataset_id!r}")
