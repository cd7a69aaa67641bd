"""Grid case model plus MATPOWER-subset and JSON readers/writers."""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

__all__ = [
    "BusType",
    "Bus",
    "Gen",
    "Branch",
    "Case",
    "CaseFormatError",
    "CaseValidationError",
    "parse_matpower_case",
    "parse_json_case",
    "serialize_case_json",
    "validate_case",
    "load_case",
    "scheduled_power",
]


class CaseFormatError(ValueError):
    """Malformed case text.  ``where`` is a line number or JSON path."""

    def __init__(self, message: str, where=None):
        self.where = where
        if isinstance(where, int):
            message = f"line {where}: {message}"
        elif where:
            message = f"{where}: {message}"
        super().__init__(message)


class CaseValidationError(ValueError):
    """Case is well-formed but violates a model invariant."""


class BusType(str, Enum):
    PQ = "PQ"
    PV = "PV"
    SLACK = "SLACK"


_MATPOWER_BUS_TYPES = {1: BusType.PQ, 2: BusType.PV, 3: BusType.SLACK}


@dataclass(frozen=True)
class Bus:
    id: int
    btype: BusType
    pd: float = 0.0
    qd: float = 0.0
    gs: float = 0.0
    bs: float = 0.0
    vm: float = 1.0
    va: float = 0.0  # degrees


@dataclass(frozen=True)
class Gen:
    bus: int
    pg: float = 0.0
    qg: float = 0.0
    vg: float = 1.0
    in_service: bool = True


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    r: float
    x: float
    b: float = 0.0
    tap: float = 1.0
    shift: float = 0.0  # degrees
    in_service: bool = True


@dataclass(frozen=True)
class Case:
    base_mva: float
    buses: tuple[Bus, ...]
    gens: tuple[Gen, ...]
    branches: tuple[Branch, ...]
    # external bus id -> internal index, filled by validate_case
    bus_index: dict = field(default=None, compare=False, repr=False)

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    @property
    def slack(self) -> int:
        """Internal index of the slack bus."""
        return next(i for i, b in enumerate(self.buses) if b.btype is BusType.SLACK)


def validate_case(case: Case) -> Case:
    """Check model invariants and attach the id -> internal index map.

    Internal indices follow the order of ``case.buses``.
    """
    if not case.base_mva > 0:
        raise CaseValidationError(f"base_mva must be positive, got {case.base_mva}")
    index: dict[int, int] = {}
    for i, b in enumerate(case.buses):
        if b.id in index:
            raise CaseValidationError(f"duplicate bus id {b.id}")
        index[b.id] = i
    slacks = [b.id for b in case.buses if b.btype is BusType.SLACK]
    if len(slacks) != 1:
        raise CaseValidationError(
            f"expected exactly one slack bus, found {len(slacks)}"
            + (f" (ids {slacks})" if slacks else "")
        )
    dangling = sorted({e for br in case.branches for e in (br.from_bus, br.to_bus)
                       if e not in index})
    if dangling:
        raise CaseValidationError(f"branches reference unknown buses {dangling}")
    dangling = sorted({g.bus for g in case.gens if g.bus not in index})
    if dangling:
        raise CaseValidationError(f"generators reference unknown buses {dangling}")
    for k, br in enumerate(case.branches):
        if br.r == 0 and br.x == 0:
            raise CaseValidationError(
                f"branch {k} ({br.from_bus}-{br.to_bus}) has zero series impedance")
        if not br.tap > 0:
            raise CaseValidationError(f"branch {k} has non-positive tap {br.tap}")
    for g in case.gens:
        if not g.vg > 0:
            raise CaseValidationError(f"generator at bus {g.bus} has vg={g.vg}")
    return replace(case, bus_index=index)


def scheduled_power(case: Case) -> np.ndarray:
    """Net scheduled complex injection per internal bus in p.u.

    Generation counts positive, load negative; out-of-service generators
    are ignored.
    """
    idx = case.bus_index or validate_case(case).bus_index
    s = np.array([-(b.pd + 1j * b.qd) for b in case.buses], dtype=np.complex128)
    for g in case.gens:
        if g.in_service:
            s[idx[g.bus]] += g.pg + 1j * g.qg
    return s / case.base_mva


# ---------------------------------------------------------------- MATPOWER

_ASSIGN = re.compile(r"^\s*mpc\.(\w+)\s*=\s*(.*)$")


def _strip_comment(line: str) -> str:
    # MATPOWER data lines never carry quoted '%' characters
    cut = line.find("%")
    return line if cut < 0 else line[:cut]


def _read_matrix(lines, start, name):
    """Collect the numeric rows of ``mpc.<name> = [ ... ];``."""
    rows, row_lines = [], []
    first = _ASSIGN.match(_strip_comment(lines[start][1])).group(2)
    body = first.split("[", 1)[1]
    pending: list[str] = []
    i = start
    while True:
        closed = "]" in body
        chunk = body.split("]", 1)[0] if closed else body
        # rows end at ';' or at end of line
        pieces = chunk.split(";")
        for piece in pieces:
            tokens = piece.replace(",", " ").split()
            pending.extend(tokens)
            if pending:
                rows.append(pending)
                row_lines.append(lines[i][0])
                pending = []
        if closed:
            break
        i += 1
        if i >= len(lines):
            raise CaseFormatError(f"unterminated matrix mpc.{name}", lines[start][0])
        body = _strip_comment(lines[i][1])
    out = []
    width = None
    for toks, lineno in zip(rows, row_lines):
        try:
            vals = [float(t) for t in toks]
        except ValueError:
            bad = next(t for t in toks if not _isfloat(t))
            raise CaseFormatError(f"non-numeric token {bad!r} in mpc.{name}", lineno) from None
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise CaseFormatError(
                f"ragged row in mpc.{name}: {len(vals)} columns, expected {width}", lineno)
        out.append((lineno, vals))
    return out, i


def _isfloat(t: str) -> bool:
    try:
        float(t)
    except ValueError:
        return False
    return True


def _need(row, ncol, name, lineno):
    if len(row) < ncol:
        raise CaseFormatError(f"mpc.{name} needs at least {ncol} columns, got {len(row)}", lineno)


def parse_matpower_case(text: str) -> Case:
    """Parse the power-flow sections of a MATPOWER version-2 case file.

    Only the columns used for power flow are consumed; extra columns and
    other ``mpc.*`` fields (gencost, bus_name, ...) are ignored.
    """
    lines = list(enumerate(text.splitlines(), start=1))
    base_mva = None
    mats: dict[str, list] = {}
    i = 0
    while i < len(lines):
        lineno, raw = lines[i]
        m = _ASSIGN.match(_strip_comment(raw))
        if m:
            name, rhs = m.group(1), m.group(2).strip()
            if name == "baseMVA":
                try:
                    base_mva = float(rhs.rstrip(";").strip())
                except ValueError:
                    raise CaseFormatError(f"bad baseMVA value {rhs!r}", lineno) from None
            elif name in ("bus", "gen", "branch"):
                if not rhs.startswith("["):
                    raise CaseFormatError(f"mpc.{name} is not a bracketed matrix", lineno)
                mats[name], i = _read_matrix(lines, i, name)
        i += 1
    missing = [k for k in ("baseMVA", "bus", "gen", "branch")
               if (k == "baseMVA" and base_mva is None) or (k != "baseMVA" and k not in mats)]
    if missing:
        raise CaseFormatError("missing section(s): " + ", ".join(f"mpc.{k}" for k in missing))

    buses = []
    for lineno, r in mats["bus"]:
        _need(r, 9, "bus", lineno)
        code = int(r[1])
        if code not in _MATPOWER_BUS_TYPES:
            if code == 4:  # isolated buses are outside this solver's model
                raise CaseFormatError("isolated bus type 4 is not supported", lineno)
            raise CaseFormatError(f"unknown bus type code {r[1]:g}", lineno)
        buses.append(Bus(id=int(r[0]), btype=_MATPOWER_BUS_TYPES[code], pd=r[2], qd=r[3],
                         gs=r[4], bs=r[5], vm=r[7], va=r[8]))
    gens = []
    for lineno, r in mats["gen"]:
        _need(r, 8, "gen", lineno)
        gens.append(Gen(bus=int(r[0]), pg=r[1], qg=r[2], vg=r[5], in_service=r[7] > 0))
    branches = []
    for lineno, r in mats["branch"]:
        _need(r, 11, "branch", lineno)
        branches.append(Branch(from_bus=int(r[0]), to_bus=int(r[1]), r=r[2], x=r[3], b=r[4],
                               tap=r[8] if r[8] != 0 else 1.0, shift=r[9],
                               in_service=r[10] > 0))
    return validate_case(Case(base_mva, tuple(buses), tuple(gens), tuple(branches)))


# -------------------------------------------------------------------- JSON

_FIELDS = {
    "buses": (Bus, {"id": int, "btype": str, "pd": float, "qd": float, "gs": float,
                    "bs": float, "vm": float, "va": float}),
    "gens": (Gen, {"bus": int, "pg": float, "qg": float, "vg": float, "in_service": bool}),
    "branches": (Branch, {"from_bus": int, "to_bus": int, "r": float, "x": float, "b": float,
                          "tap": float, "shift": float, "in_service": bool}),
}


def _coerce(value, kind, path):
    if kind is bool:
        if not isinstance(value, bool):
            raise CaseFormatError(f"expected boolean, got {value!r}", path)
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        if kind is str and isinstance(value, str):
            return value
        raise CaseFormatError(f"expected {kind.__name__}, got {value!r}", path)
    if kind is int:
        if float(value) != int(value):
            raise CaseFormatError(f"expected integer, got {value!r}", path)
        return int(value)
    if kind is str:
        raise CaseFormatError(f"expected string, got {value!r}", path)
    return float(value)


def parse_json_case(text: str) -> Case:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise CaseFormatError(f"invalid JSON: {e.msg}", e.lineno) from None
    if not isinstance(doc, dict):
        raise CaseFormatError("top level must be an object", "$")
    for key in ("base_mva", "buses", "gens", "branches"):
        if key not in doc:
            raise CaseFormatError(f"missing key {key!r}", "$")
    base_mva = _coerce(doc["base_mva"], float, "$.base_mva")
    parts = {}
    for key, (cls, spec) in _FIELDS.items():
        items = doc[key]
        if not isinstance(items, list):
            raise CaseFormatError("expected array", f"$.{key}")
        objs = []
        for n, item in enumerate(items):
            path = f"$.{key}[{n}]"
            if not isinstance(item, dict):
                raise CaseFormatError("expected object", path)
            unknown = set(item) - set(spec)
            if unknown:
                raise CaseFormatError(f"unknown field(s) {sorted(unknown)}", path)
            kwargs = {}
            for name, kind in spec.items():
                if name not in item:
                    raise CaseFormatError(f"missing field {name!r}", path)
                kwargs[name] = _coerce(item[name], kind, f"{path}.{name}")
            if cls is Bus:
                try:
                    kwargs["btype"] = BusType(kwargs["btype"])
                except ValueError:
                    raise CaseFormatError(
                        f"unknown bus type {kwargs['btype']!r}", f"{path}.btype") from None
            objs.append(cls(**kwargs))
        parts[key] = tuple(objs)
    return validate_case(Case(base_mva, parts["buses"], parts["gens"], parts["branches"]))


def serialize_case_json(case: Case, indent: int | None = 1) -> str:
    doc = {"base_mva": case.base_mva, "buses": [], "gens": [], "branches": []}
    for key in ("buses", "gens", "branches"):
        for obj in getattr(case, key):
            d = asdict(obj)
            if "btype" in d:
                d["btype"] = d["btype"].value
            doc[key].append(d)
    return json.dumps(doc, indent=indent) + "\n"


def load_case(path: str | Path) -> Case:
    """Read a ``.m`` (MATPOWER) or ``.json`` case file."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        return parse_json_case(text)
    return parse_matpower_case(text)
