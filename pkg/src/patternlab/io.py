"""Readers and writers for the plain-text and binary input formats.

Set files list member elements, one per line, coordinates comma-separated.
Function files add an optional trailing real value (default 1).  System files
start with ``d=<int>`` and then hold one form per line.  Adjacency tables are
CSV or PLAD binary: magic ``PLAD``, a flags byte (bit 0 = bit-packed rows),
then little-endian u32 rows and cols, then row-major u8 cells or packed bits.
Lines starting with ``#`` and blank lines are ignored everywhere.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import InputFormatError, PatternLabError
from .groups import GroupDescriptor
from .linear_systems import LinearSystem

PLAD_MAGIC = b"PLAD"
_HEADER = struct.Struct("<4sBII")


def _lines(path):
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputFormatError(path, None, "file not found") from None
    except UnicodeDecodeError as exc:
        raise InputFormatError(path, None, f"not UTF-8 ({exc.reason})") from None
    for no, raw in enumerate(text.split("\n"), 1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield no, line


def parse_group(text: str) -> GroupDescriptor:
    try:
        return GroupDescriptor.parse(text)
    except PatternLabError as exc:
        raise InputFormatError("--group", None, str(exc)) from None


def _element(group: GroupDescriptor, fields: list[str], path, no) -> int:
    try:
        coords = [int(f) for f in fields]
    except ValueError:
        raise InputFormatError(path, no, f"non-integer coordinate in {fields}") from None
    return int(group.index_of(coords))


def read_function(path, group: GroupDescriptor) -> np.ndarray:
    values = np.zeros(group.order)
    r = group.rank
    for no, line in _lines(path):
        fields = [f.strip() for f in line.split(",")]
        if len(fields) not in (r, r + 1):
            raise InputFormatError(path, no, f"expected {r} coordinates and an optional value, got {len(fields)} fields")
        value = 1.0
        if len(fields) == r + 1:
            try:
                value = float(fields[-1])
            except ValueError:
                raise InputFormatError(path, no, f"bad value {fields[-1]!r}") from None
        values[_element(group, fields[:r], path, no)] = value
    return values


def read_set(path, group: GroupDescriptor) -> np.ndarray:
    mask = np.zeros(group.order, dtype=bool)
    r = group.rank
    for no, line in _lines(path):
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != r:
            raise InputFormatError(path, no, f"expected {r} coordinates, got {len(fields)}")
        mask[_element(group, fields, path, no)] = True
    return mask


def write_set(path, group: GroupDescriptor, mask: np.ndarray) -> None:
    rows = [",".join(str(c) for c in group.coords_of(i)) for i in np.flatnonzero(mask)]
    Path(path).write_text("".join(r + "\n" for r in rows), encoding="utf-8")


def read_system(path) -> LinearSystem:
    d = None
    rows = []
    for no, line in _lines(path):
        if d is None:
            if not line.startswith("d="):
                raise InputFormatError(path, no, "first line must be the header d=<int>")
            try:
                d = int(line[2:])
            except ValueError:
                raise InputFormatError(path, no, f"bad header {line!r}") from None
            continue
        try:
            row = [int(x) for x in line.split()]
        except ValueError:
            raise InputFormatError(path, no, "coefficients must be integers") from None
        if len(row) != d:
            raise InputFormatError(path, no, f"expected {d} coefficients, got {len(row)}")
        rows.append(row)
    if d is None or not rows:
        raise InputFormatError(path, None, "no forms found")
    try:
        return LinearSystem.from_rows(rows)
    except PatternLabError as exc:
        raise InputFormatError(path, None, str(exc)) from None


def write_system(path, system: LinearSystem) -> None:
    Path(path).write_text(system.to_text(), encoding="utf-8")


def read_adjacency(path) -> np.ndarray:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except FileNotFoundError:
        raise InputFormatError(path, None, "file not found") from None
    if raw.startswith(PLAD_MAGIC):
        return _read_plad(raw, path)
    rows = []
    for no, line in _lines(path):
        try:
            rows.append([float(x) for x in line.split(",")])
        except ValueError:
            raise InputFormatError(path, no, "non-numeric cell") from None
        if len(rows[-1]) != len(rows[0]):
            raise InputFormatError(path, no, f"expected {len(rows[0])} cells, got {len(rows[-1])}")
    if not rows:
        raise InputFormatError(path, None, "empty table")
    return np.array(rows)


def _read_plad(raw: bytes, path) -> np.ndarray:
    if len(raw) < _HEADER.size:
        raise InputFormatError(path, None, "truncated PLAD header")
    _, flags, n, m = _HEADER.unpack_from(raw)
    body = np.frombuffer(raw, dtype=np.uint8, offset=_HEADER.size)
    if flags & 1:
        per_row = (m + 7) // 8
        if body.size != n * per_row:
            raise InputFormatError(path, None, f"expected {n * per_row} packed bytes, got {body.size}")
        return np.unpackbits(body.reshape(n, per_row), axis=1, count=m).astype(float)
    if body.size != n * m:
        raise InputFormatError(path, None, f"expected {n * m} cells, got {body.size}")
    return body.reshape(n, m).astype(float)


def write_plad(path, table: np.ndarray, packed: bool = True) -> None:
    t = np.asarray(table)
    if not np.all((t == 0) | (t == 1)):
        raise InputFormatError(path, None, "PLAD stores 0/1 tables only")
    n, m = t.shape
    head = _HEADER.pack(PLAD_MAGIC, 1 if packed else 0, n, m)
    body = np.packbits(t.astype(np.uint8), axis=1) if packed else t.astype(np.uint8)
    Path(path).write_bytes(head + body.tobytes())


def write_csv(path, table: np.ndarray) -> None:
    lines = [",".join(repr(float(v)) if v % 1 else str(int(v)) for v in row) for row in np.asarray(table)]
    Path(path).write_text("".join(l + "\n" for l in lines), encoding="utf-8")
