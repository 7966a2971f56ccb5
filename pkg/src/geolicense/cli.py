"""Command line interface: ``geolicense <command> ...``.

Exit codes: 0 success, 1 domain failure (incompatible licenses, unreadable
sidecar, existing file), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from pathlib import Path
from typing import Sequence

from geolicense.algebra import (
    CODES,
    AlgebraError,
    Engine,
    LicenseDesignation,
    Mode,
    X,
    combine_all,
    engines_diff,
    validate_algebra,
)
from geolicense.ccrel import LicenseDocument
from geolicense.config import ConfigError, load_config
from geolicense.service import StartupError, serve
from geolicense.sidecar import AlreadyExists, DatasetRef, SidecarError, read_license, write_license

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

CODES_HELP = "license codes: " + " ".join(CODES)

_CODE_LIKE = re.compile(r"^[A-Z0-9]+(?:-[A-Z0-9]+)*$")


class UsageError(Exception):
    pass


def _code(value: str) -> LicenseDesignation:
    try:
        return LicenseDesignation.from_code(value)
    except AlgebraError:
        raise argparse.ArgumentTypeError(
            f"unknown license code {value!r} (valid: {', '.join(CODES)})"
        ) from None


def _err(msg: str) -> None:
    print(f"geolicense: {msg}", file=sys.stderr)


def _resolve_input(token: str) -> LicenseDesignation:
    """A ``combine`` input is a license code, or else a dataset / .lic path."""
    try:
        return LicenseDesignation.from_code(token)
    except AlgebraError:
        pass
    p = Path(token)
    looks_like_path = (
        os.sep in token
        or "." in p.name
        or p.exists()
        or p.with_name(p.name + ".lic").exists()
        or p.with_name(p.name + ".shp").exists()
    )
    if not looks_like_path and _CODE_LIKE.match(token):
        raise UsageError(f"unknown license code {token!r} (valid: {', '.join(CODES)})")
    return read_license(DatasetRef.from_path(p)).designation


def cmd_embed(args: argparse.Namespace) -> int:
    doc = LicenseDocument(
        args.license,
        work_uri=args.work_uri,
        title=args.title,
        attribution_name=args.attribution_name,
        attribution_url=args.attribution_url,
    )
    try:
        path = write_license(DatasetRef.from_path(args.dataset), doc, overwrite=args.force)
    except AlreadyExists as exc:
        _err(f"{exc} (use --force to replace it)")
        return EXIT_FAIL
    except SidecarError as exc:
        _err(str(exc))
        return EXIT_FAIL
    print(path)
    return EXIT_OK


def cmd_extract(args: argparse.Namespace) -> int:
    try:
        doc = read_license(DatasetRef.from_path(args.path))
    except SidecarError as exc:
        _err(str(exc))
        return EXIT_FAIL
    if args.json:
        print(json.dumps(doc.to_json(), indent=2, ensure_ascii=False))
    else:
        print(doc.designation.code)
    return EXIT_OK


def cmd_combine(args: argparse.Namespace) -> int:
    if len(args.inputs) < 2:
        raise UsageError("combine needs at least two inputs")
    try:
        licenses = [_resolve_input(t) for t in args.inputs]
    except SidecarError as exc:
        _err(str(exc))
        return EXIT_FAIL
    result = combine_all(licenses, args.engine, args.mode)
    print(result.code)
    if result is X:
        return EXIT_FAIL
    if args.emit:
        try:
            path = write_license(
                DatasetRef.from_path(args.emit), LicenseDocument(result), overwrite=args.force
            )
        except SidecarError as exc:
            _err(str(exc))
            return EXIT_FAIL
        _err(f"wrote {path}")
    return EXIT_OK


def cmd_validate_algebra(args: argparse.Namespace) -> int:
    report = validate_algebra(args.engine, args.mode)
    sys.stdout.write(report.render())
    return EXIT_OK if report.clean else EXIT_FAIL


def cmd_diff_engines(args: argparse.Namespace) -> int:
    for a, b, m, o in engines_diff():
        print(f"{a} {b} {m} {o}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_USAGE
    try:
        serve(config, port=args.port, bind=args.bind)
    except StartupError as exc:
        _err(str(exc))
        return EXIT_FAIL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geolicense",
        description="Embed, extract, combine and serve dataset licenses.",
        epilog=CODES_HELP,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name: str, func, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help, description=help, epilog=CODES_HELP)
        p.set_defaults(func=func, parser=p)
        return p

    def engine_flags(p: argparse.ArgumentParser, default_mode: Mode) -> None:
        p.add_argument("--engine", type=Engine, choices=list(Engine), default=Engine.MATRIX,
                       metavar="{matrix,or}")
        p.add_argument("--mode", type=Mode, choices=list(Mode), default=default_mode,
                       metavar="{raw,symmetrized}")

    p = add("embed", cmd_embed, "write a .lic sidecar next to a dataset")
    p.add_argument("dataset", help="dataset base path (roads for roads.shp), or a .lic path")
    p.add_argument("--license", required=True, type=_code, metavar="CODE")
    p.add_argument("--title")
    p.add_argument("--attribution-name")
    p.add_argument("--attribution-url")
    p.add_argument("--work-uri")
    p.add_argument("--force", action="store_true", help="replace an existing sidecar")

    p = add("extract", cmd_extract, "print the license of a dataset (NL when it has none)")
    p.add_argument("path", help="dataset base path or .lic file")
    p.add_argument("--json", action="store_true", help="print the whole document as JSON")

    p = add("combine", cmd_combine, "compute the license of a mash-up; prints X if incompatible")
    p.add_argument("inputs", nargs="+", metavar="INPUT", help="license code or dataset path")
    engine_flags(p, Mode.SYMMETRIZED)
    p.add_argument("--emit", metavar="OUT", help="write the combined license to this sidecar")
    p.add_argument("--force", action="store_true", help="replace an existing --emit target")

    p = add("validate-algebra", cmd_validate_algebra,
            "check symmetry and associativity of an engine over every pair and triple")
    engine_flags(p, Mode.RAW)

    add("diff-engines", cmd_diff_engines, "list pairs where the matrix and OR engines disagree")

    p = add("serve", cmd_serve, "run the Web License Service")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--port", type=int, help="override the configured port")
    p.add_argument("--bind", help="override the configured bind address")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        args.parser.print_usage(sys.stderr)
        _err(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
