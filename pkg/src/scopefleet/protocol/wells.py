"""Well addressing for the 4x6 plate: rows A-D, columns 1-6, 24 wells."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering

LAYOUT_ROWS = "ABCD"
LAYOUT_COLS = range(1, 7)

_WELL_RE = re.compile(r"^([A-D])([1-6])$")


@total_ordering
@dataclass(frozen=True)
class WellId:
    row: str
    col: int

    def __post_init__(self):
        if self.row not in LAYOUT_ROWS or self.col not in LAYOUT_COLS:
            raise ValueError(f"no such well: {self.row}{self.col}")

    @classmethod
    def parse(cls, s: str) -> "WellId":
        m = _WELL_RE.match(s)
        if not m:
            raise ValueError(f"no such well: {s!r}")
        return cls(m.group(1), int(m.group(2)))

    def __str__(self) -> str:
        return f"{self.row}{self.col}"

    # row-major total order: A1 A2 ... A6 B1 ... D6
    def _key(self) -> tuple[str, int]:
        return (self.row, self.col)

    def __lt__(self, other: "WellId") -> bool:
        return self._key() < other._key()


ALL_WELLS: tuple[WellId, ...] = tuple(
    WellId(r, c) for r in LAYOUT_ROWS for c in LAYOUT_COLS
)
