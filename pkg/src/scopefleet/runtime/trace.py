"""Append-only structured event log.

Every actor writes one record per state transition. Records carry
(t, source, per-source seq) so traces from separate processes merge into a
single causal order; in single-process mode insertion order already is that
order. Audits in `scopefleet.fleetctl.audit` consume these records.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Optional


@dataclass
class TraceRecord:
    t: float
    source: str
    seq: int
    kind: str
    data: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {"t": round(self.t, 6), "source": self.source, "seq": self.seq,
             "kind": self.kind, **self.data},
            sort_keys=True, separators=(",", ":"))


def record_from_json(line: str) -> TraceRecord:
    obj = json.loads(line)
    t = obj.pop("t")
    source = obj.pop("source")
    seq = obj.pop("seq")
    kind = obj.pop("kind")
    return TraceRecord(t=t, source=source, seq=seq, kind=kind, data=obj)


class Trace:
    def __init__(self, clock_seconds: Callable[[], float],
                 emit: Optional[Callable[[str], None]] = None):
        self._clock_seconds = clock_seconds
        self._emit = emit
        self._seqs: dict[str, int] = {}
        self.records: list[TraceRecord] = []

    def log(self, source: str, kind: str, **data: Any) -> TraceRecord:
        seq = self._seqs.get(source, 0)
        self._seqs[source] = seq + 1
        rec = TraceRecord(t=self._clock_seconds(), source=source, seq=seq,
                          kind=kind, data=data)
        self.records.append(rec)
        if self._emit is not None:
            self._emit(rec.to_json())
        return rec

    def find(self, kind: str, **match: Any) -> list[TraceRecord]:
        out = []
        for rec in self.records:
            if rec.kind != kind:
                continue
            if all(rec.data.get(k) == v for k, v in match.items()):
                out.append(rec)
        return out

    def iter_kinds(self, *kinds: str) -> Iterator[TraceRecord]:
        wanted = set(kinds)
        for rec in self.records:
            if rec.kind in wanted:
                yield rec

    def to_jsonl(self) -> str:
        return "\n".join(rec.to_json() for rec in self.records) + "\n"


def merge_traces(lines: list[str]) -> list[TraceRecord]:
    """Merge per-process JSONL streams into one causal order."""
    records = [record_from_json(line) for line in lines if line.strip()]
    records.sort(key=lambda r: (r.t, r.source, r.seq))
    return records
