"""Timed fault injection for camera nodes.

Script document (JSON):

    {"die_at": 120.0,                  stop responding entirely at t
     "silent_from": 300.0,             keep working but never publish again
     "storage_full_from": 50.0,        captures fail with an Error ack from t
     "drop_transfer": {"at": 0, "after_files": 4}}
                                       first transfer at/after `at` stalls
                                       after `after_files` delivered files
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional


@dataclass
class FaultScript:
    die_at: Optional[float] = None
    silent_from: Optional[float] = None
    storage_full_from: Optional[float] = None
    drop_transfer_at: Optional[float] = None
    drop_transfer_after_files: int = 0

    @classmethod
    def from_doc(cls, doc: Optional[dict]) -> "FaultScript":
        if not doc:
            return cls()
        drop = doc.get("drop_transfer") or {}
        return cls(
            die_at=doc.get("die_at"),
            silent_from=doc.get("silent_from"),
            storage_full_from=doc.get("storage_full_from"),
            drop_transfer_at=drop.get("at"),
            drop_transfer_after_files=int(drop.get("after_files", 0)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "FaultScript":
        return cls.from_doc(json.loads(Path(path).read_text()))

    def dead(self, t: float) -> bool:
        return self.die_at is not None and t >= self.die_at

    def silent(self, t: float) -> bool:
        return self.silent_from is not None and t >= self.silent_from

    def storage_full(self, t: float) -> bool:
        return self.storage_full_from is not None and t >= self.storage_full_from

    def drops_transfer(self, t: float) -> bool:
        return self.drop_transfer_at is not None and t >= self.drop_transfer_at
