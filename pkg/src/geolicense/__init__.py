"""Licenses for geospatial datasets: combine them, embed them as ccREL sidecars, serve them."""

from geolicense.algebra import (
    Engine,
    Incompatible,
    LicenseDesignation,
    Mode,
    X,
    combine_all,
    combine_matrix,
    combine_or,
    validate_algebra,
)
from geolicense.ccrel import LicenseDocument, emit_ccrel, parse_ccrel
from geolicense.sidecar import DatasetRef, read_license, write_license

__version__ = "0.1.0"

__all__ = [
    "Engine",
    "Incompatible",
    "LicenseDesignation",
    "Mode",
    "X",
    "combine_all",
    "combine_matrix",
    "combine_or",
    "validate_algebra",
    "LicenseDocument",
    "emit_ccrel",
    "parse_ccrel",
    "DatasetRef",
    "read_license",
    "write_license",
]
