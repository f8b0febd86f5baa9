"""Budgets and global caps."""
from __future__ import annotations

import os
from dataclasses import dataclass

from .errors import ResourceError

DEFAULT_ENUMERATION_CAP = 10**8
FOURIER_CAP = 2**20
GUARD = 1e-12


def enumeration_cap() -> int:
    raw = os.environ.get("PATTERNLAB_BUDGET")
    if raw:
        try:
            return int(float(raw))
        except ValueError:
            pass
    return DEFAULT_ENUMERATION_CAP


@dataclass(frozen=True)
class Budget:
    elements: int = 0  # 0 means "use the environment/default cap"
    wall_clock: float | None = None

    @property
    def cap(self) -> int:
        return self.elements if self.elements > 0 else enumeration_cap()

    def check(self, cost: int, what: str) -> None:
        if cost > self.cap:
            raise ResourceError(f"{what}: cost {cost} exceeds budget {self.cap}")


def check_budget(cost: int, what: str, cap: int | None = None) -> None:
    limit = enumeration_cap() if cap is None else cap
    if cost > limit:
        raise ResourceError(f"{what}: cost {cost} exceeds budget {limit}")
