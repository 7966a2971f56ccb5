"""
License designations and the algebra for combining them.

Two engines are provided. The matrix engine is a table lookup over the
published 12x12 combination matrix (shipped as ``data/license_matrix.csv``).
The OR engine treats every Creative Commons license as a set of restriction
flags and combines licenses with a bitwise OR, i.e. a join in a small lattice
that also holds the public domain mark, the CC0 waiver, "All Rights Reserved"
and "No License".

Combining lists of licenses is a right fold (``combine(head, combine(rest))``),
which matters for the raw matrix because a few of its cells are not symmetric.
"""

from __future__ import annotations

import csv
import enum
import io
import itertools
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Sequence, Union

__all__ = [
    "LicenseDesignation",
    "Incompatible",
    "X",
    "Outcome",
    "LicenseClass",
    "Flag",
    "AttributeVector",
    "Engine",
    "Mode",
    "AlgebraError",
    "LicenseMatrix",
    "AlgebraReport",
    "parse_outcome",
    "load_matrix",
    "combine_matrix",
    "combine_or",
    "combine",
    "combine_all",
    "encode_attributes",
    "decode_attributes",
    "validate_algebra",
    "engines_diff",
]


class AlgebraError(ValueError):
    pass


class LicenseDesignation(enum.Enum):
    """The twelve license designations, in canonical (matrix row) order."""

    PD = "PD"
    CC0 = "CC0"
    BY = "BY"
    BY_NC = "BY-NC"
    BY_NC_ND = "BY-NC-ND"
    BY_NC_ND_SA = "BY-NC-ND-SA"
    BY_NC_SA = "BY-NC-SA"
    BY_ND = "BY-ND"
    BY_ND_SA = "BY-ND-SA"
    BY_SA = "BY-SA"
    ARR = "ARR"
    NL = "NL"

    @property
    def code(self) -> str:
        return self.value

    @property
    def index(self) -> int:
        return _INDEX[self]

    @property
    def is_cc_license(self) -> bool:
        return self.value.startswith("BY")

    @classmethod
    def from_code(cls, code: str) -> "LicenseDesignation":
        """Look up a designation by its code.

        Case is ignored, and spaces or underscores may stand in for hyphens
        (``"by nc"`` and ``"BY_NC"`` both give ``BY-NC``).
        """
        norm = "-".join(code.strip().upper().replace("_", " ").replace("-", " ").split())
        try:
            return cls(norm)
        except ValueError:
            raise AlgebraError(
                f"unknown license code {code!r}; expected one of {', '.join(CODES)}"
            ) from None

    def __str__(self) -> str:
        return self.value

    def __lt__(self, other: "LicenseDesignation") -> bool:
        if not isinstance(other, LicenseDesignation):
            return NotImplemented
        return self.index < other.index


_INDEX = {d: i for i, d in enumerate(LicenseDesignation)}
DESIGNATIONS: tuple[LicenseDesignation, ...] = tuple(LicenseDesignation)
CODES: tuple[str, ...] = tuple(d.code for d in DESIGNATIONS)


class Incompatible(enum.Enum):
    """Marker for "the two licenses can't be combined"."""

    X = "X"

    @property
    def code(self) -> str:
        return "X"

    @property
    def index(self) -> int:
        # sorts after every designation
        return len(DESIGNATIONS)

    def __str__(self) -> str:
        return "X"


X = Incompatible.X
Outcome = Union[LicenseDesignation, Incompatible]
OUTCOMES: tuple[Outcome, ...] = DESIGNATIONS + (X,)


def parse_outcome(code: str) -> Outcome:
    if code.strip().upper() == "X":
        return X
    return LicenseDesignation.from_code(code)


class Engine(str, enum.Enum):
    MATRIX = "matrix"
    OR = "or"


class Mode(str, enum.Enum):
    RAW = "raw"
    SYMMETRIZED = "symmetrized"


# --------------------------------------------------------------------------
# attribute vectors


class LicenseClass(enum.Enum):
    PUBLIC_DOMAIN = "PublicDomain"
    WAIVER = "Waiver"
    CC_LICENSE = "CcLicense"
    ALL_RIGHTS_RESERVED = "AllRightsReserved"
    NO_LICENSE = "NoLicense"


class Flag(enum.IntFlag):
    NC = 0b001
    ND = 0b010
    SA = 0b100


@dataclass(frozen=True)
class AttributeVector:
    license_class: LicenseClass
    flags: Flag = Flag(0)

    @property
    def bits(self) -> int:
        return int(self.flags)

    def validate(self) -> None:
        if self.license_class is not LicenseClass.CC_LICENSE and self.flags:
            raise AlgebraError(
                f"{self.license_class.value} cannot carry flags (got {self.flags!r})"
            )
        if not 0 <= int(self.flags) <= 0b111:
            raise AlgebraError(f"flag bits out of range: {int(self.flags):#b}")


_NON_CC_CLASS = {
    LicenseDesignation.PD: LicenseClass.PUBLIC_DOMAIN,
    LicenseDesignation.CC0: LicenseClass.WAIVER,
    LicenseDesignation.ARR: LicenseClass.ALL_RIGHTS_RESERVED,
    LicenseDesignation.NL: LicenseClass.NO_LICENSE,
}
_CLASS_TO_NON_CC = {v: k for k, v in _NON_CC_CLASS.items()}


def _cc_flags(d: LicenseDesignation) -> Flag:
    flags = Flag(0)
    for part in d.code.split("-")[1:]:
        flags |= Flag[part]
    return flags


_FLAGS_TO_CC = {_cc_flags(d): d for d in DESIGNATIONS if d.is_cc_license}


def encode_attributes(d: LicenseDesignation) -> AttributeVector:
    if d.is_cc_license:
        return AttributeVector(LicenseClass.CC_LICENSE, _cc_flags(d))
    return AttributeVector(_NON_CC_CLASS[d])


def decode_attributes(v: AttributeVector) -> LicenseDesignation:
    v.validate()
    if v.license_class is LicenseClass.CC_LICENSE:
        return _FLAGS_TO_CC[Flag(v.bits)]
    return _CLASS_TO_NON_CC[v.license_class]


# --------------------------------------------------------------------------
# the matrix


@dataclass(frozen=True)
class LicenseMatrix:
    """A complete 12x12 table of outcomes; row is the first operand."""

    cells: tuple[tuple[Outcome, ...], ...]

    def __post_init__(self) -> None:
        n = len(DESIGNATIONS)
        if len(self.cells) != n or any(len(row) != n for row in self.cells):
            raise AlgebraError(f"license matrix must be {n}x{n}")

    def cell(self, a: LicenseDesignation, b: LicenseDesignation) -> Outcome:
        return self.cells[a.index][b.index]

    @classmethod
    def from_csv(cls, text: str) -> "LicenseMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["code", *CODES]:
            raise AlgebraError("license matrix header does not list the canonical codes")
        body = [r for r in rows[1:] if r]
        if [r[0] for r in body] != list(CODES):
            raise AlgebraError("license matrix rows are not in canonical order")
        cells = []
        for r in body:
            if len(r) != len(CODES) + 1:
                raise AlgebraError(f"row {r[0]} has {len(r) - 1} cells")
            cells.append(tuple(parse_outcome(c) for c in r[1:]))
        return cls(tuple(cells))

    def to_csv(self) -> str:
        lines = [",".join(["code", *CODES])]
        for d, row in zip(DESIGNATIONS, self.cells):
            lines.append(",".join([d.code, *(o.code for o in row)]))
        return "\n".join(lines) + "\n"


@lru_cache(maxsize=None)
def load_matrix() -> LicenseMatrix:
    text = resources.files("geolicense").joinpath("data/license_matrix.csv").read_text("utf-8")
    return LicenseMatrix.from_csv(text)


# --------------------------------------------------------------------------
# the OR lattice
#
# Order: PD < CC0 < every CC license (ordered by flag subset) ; CC0 < ARR ; CC0 < NL.
# ARR and NL are incomparable with each other and with the CC licenses, and X is top.


def _leq(a: Outcome, b: Outcome) -> bool:
    """Lattice order of the OR engine."""
    if b is X or a is b:
        return True
    if a is X:
        return False
    if a is LicenseDesignation.PD:
        return True
    if a is LicenseDesignation.CC0:
        return b is not LicenseDesignation.PD
    if a.is_cc_license and b.is_cc_license:
        fa, fb = _cc_flags(a), _cc_flags(b)
        return fa & fb == fa
    return False


def combine_or(a: Outcome, b: Outcome) -> Outcome:
    if a is X or b is X:
        return X
    if _leq(a, b):
        return b
    if _leq(b, a):
        return a
    if a.is_cc_license and b.is_cc_license:
        return _FLAGS_TO_CC[_cc_flags(a) | _cc_flags(b)]
    return X


def _more_restrictive(p: Outcome, q: Outcome) -> Outcome:
    if p is X or q is X:
        return X
    if _leq(q, p):
        return p
    if _leq(p, q):
        return q
    return X


@lru_cache(maxsize=None)
def _symmetrized(matrix: LicenseMatrix) -> LicenseMatrix:
    cells = tuple(
        tuple(
            _more_restrictive(matrix.cell(a, b), matrix.cell(b, a)) for b in DESIGNATIONS
        )
        for a in DESIGNATIONS
    )
    return LicenseMatrix(cells)


def combine_matrix(
    a: Outcome,
    b: Outcome,
    mode: Mode | str = Mode.SYMMETRIZED,
    matrix: LicenseMatrix | None = None,
) -> Outcome:
    """Look up ``a + b`` in the license matrix.

    In ``raw`` mode the cell is returned exactly as published. In
    ``symmetrized`` mode, where ``a + b`` and ``b + a`` disagree the more
    restrictive of the two wins; X beats any license, and of two licenses the
    one that is above the other in the OR lattice (larger flag set) wins. If
    neither is above the other the result is X.

    X is absorbing: combining anything with X gives X.
    """
    if a is X or b is X:
        return X
    m = matrix or load_matrix()
    if Mode(mode) is Mode.SYMMETRIZED:
        m = _symmetrized(m)
    return m.cell(a, b)


def combine(
    a: Outcome,
    b: Outcome,
    engine: Engine | str = Engine.MATRIX,
    mode: Mode | str = Mode.SYMMETRIZED,
) -> Outcome:
    if Engine(engine) is Engine.OR:
        return combine_or(a, b)
    return combine_matrix(a, b, mode)


def combine_all(
    licenses: Sequence[LicenseDesignation],
    engine: Engine | str = Engine.MATRIX,
    mode: Mode | str = Mode.SYMMETRIZED,
) -> Outcome:
    """Combine a list of licenses as ``combine(l0, combine(l1, ... combine(ln-1, ln)))``.

    The evaluation order is fixed: the raw matrix is not symmetric, so a left
    fold over the same list can give a different answer.
    """
    if not licenses:
        raise AlgebraError("combine_all needs at least one license")
    engine, mode = Engine(engine), Mode(mode)
    result: Outcome = licenses[-1]
    for lic in reversed(licenses[:-1]):
        if result is X:
            break
        result = combine(lic, result, engine, mode)
    return result


# --------------------------------------------------------------------------
# auditing


@dataclass(frozen=True)
class AlgebraReport:
    engine_id: str
    mode: str
    symmetry_violations: tuple[tuple[LicenseDesignation, LicenseDesignation, Outcome, Outcome], ...] = ()
    associativity_violations: tuple[
        tuple[LicenseDesignation, LicenseDesignation, LicenseDesignation, Outcome, Outcome], ...
    ] = ()

    @property
    def clean(self) -> bool:
        return not self.symmetry_violations and not self.associativity_violations

    def render(self) -> str:
        lines = [
            f"SYM {a} {b} {fwd} {rev}" for a, b, fwd, rev in self.symmetry_violations
        ]
        lines += [
            f"ASSOC {a} {b} {c} {left} {right}"
            for a, b, c, left, right in self.associativity_violations
        ]
        return "".join(line + "\n" for line in lines)


def validate_algebra(
    engine: Engine | str = Engine.MATRIX,
    mode: Mode | str = Mode.RAW,
    elements: Iterable[Outcome] = DESIGNATIONS,
) -> AlgebraReport:
    """Exhaustively check symmetry and associativity of one engine.

    ``elements`` defaults to the twelve designations (144 pairs, 1728
    triples); pass ``OUTCOMES`` to include X.
    """
    engine, mode = Engine(engine), Mode(mode)
    elements = sorted(elements, key=lambda o: o.index)

    def op(p: Outcome, q: Outcome) -> Outcome:
        return combine(p, q, engine, mode)

    sym = []
    for a, b in itertools.product(elements, repeat=2):
        fwd, rev = op(a, b), op(b, a)
        if fwd is not rev:
            sym.append((a, b, fwd, rev))
    assoc = []
    for a, b, c in itertools.product(elements, repeat=3):
        left, right = op(op(a, b), c), op(a, op(b, c))
        if left is not right:
            assoc.append((a, b, c, left, right))
    return AlgebraReport(engine.value, mode.value, tuple(sym), tuple(assoc))


def engines_diff() -> list[tuple[LicenseDesignation, LicenseDesignation, Outcome, Outcome]]:
    """Ordered pairs where the raw matrix and the OR heuristic disagree."""
    out = []
    for a, b in itertools.product(DESIGNATIONS, repeat=2):
        m, o = combine_matrix(a, b, Mode.RAW), combine_or(a, b)
        if m is not o:
            out.append((a, b, m, o))
    return out
