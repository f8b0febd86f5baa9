"""JSON reports: self-describing, deterministic, replayable.

Exact rationals are written as ``{"num", "den", "float"}``.  Anything
wall-clock related lives under a ``timing`` key so that two runs can be
compared byte for byte after :func:`strip_timing`.
"""
from __future__ import annotations

import dataclasses
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__

SCHEMA_VERSION = 1


def rational(q: Fraction | int) -> dict:
    q = Fraction(q)
    return {"num": q.numerator, "den": q.denominator, "float": float(q)}


def parse_rational(obj) -> Fraction:
    if isinstance(obj, dict) and "num" in obj:
        return Fraction(int(obj["num"]), int(obj["den"]))
    return Fraction(obj)


def to_jsonable(obj):
    if isinstance(obj, Fraction):
        return rational(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # JSON has no infinities; keep them readable and round-trippable
        return v if math.isfinite(v) else str(v)
    return obj


def build_report(command: str, config: dict, results: dict, witnesses: list[dict], verdict: str, timing: dict | None = None) -> dict:
    rep = {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "command": command,
        "config": config,
        "results": results,
        "witnesses": witnesses,
        "verdict": verdict,
    }
    if timing is not None:
        rep["timing"] = timing
    return to_jsonable(rep)


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_report(path, report: dict) -> None:
    Path(path).write_text(dumps(report), encoding="utf-8", newline="\n")


def load_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def strip_timing(obj):
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k != "timing"}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj
