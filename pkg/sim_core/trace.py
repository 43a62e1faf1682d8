"""
Line-oriented run trace.

One record per line, tab separated:

    <time with 6 decimals> TAB <KIND> TAB key=value TAB key=value ...

Values are rendered by `format_value`; field order is the order the emitter
passed them in, so identical runs give identical bytes.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Union

from sim_core.errors import InvariantViolation

logger = logging.getLogger(__name__)

EMPTY = "-"
BACKBONE = "backbone"


class TraceKind(str, Enum):
    MSG = "MSG"
    ELECT = "ELECT"
    HANDOVER = "HANDOVER"
    INJECT = "INJECT"
    INFECT = "INFECT"
    INJURY = "INJURY"
    REGISTER = "REGISTER"
    TICK = "TICK"
    DECLARE = "DECLARE"
    PRODUCE = "PRODUCE"


def format_value(value: Any) -> str:
    if value is None:
        return EMPTY
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.6f}"
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else list(value)
        return ",".join(format_value(v) for v in items) if items else EMPTY
    return str(value)


def format_time(time: float) -> str:
    return f"{time:.6f}"


@dataclass
class TraceRecord:
    time: float
    kind: TraceKind
    fields: Dict[str, str] = field(default_factory=dict)

    def get(self, key: str, default: Optional[str] = None) -> Optional[str]:
        value = self.fields.get(key, default)
        return default if value == EMPTY else value

    def to_line(self) -> str:
        parts = [format_time(self.time), self.kind.value]
        parts.extend(f"{key}={value}" for key, value in self.fields.items())
        return "\t".join(parts)

    @classmethod
    def from_line(cls, line: str) -> "TraceRecord":
        parts = line.rstrip("\n").split("\t")
        if len(parts) < 2:
            raise ValueError(f"Malformed trace line: {line!r}")
        fields = {}
        for part in parts[2:]:
            key, _, value = part.partition("=")
            fields[key] = value
        return cls(time=float(parts[0]), kind=TraceKind(parts[1]), fields=fields)


class Trace:
    """Append-only record list with the ordering and privacy guards of the run."""

    def __init__(self, records: Optional[List[TraceRecord]] = None):
        self.records: List[TraceRecord] = list(records or [])

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def emit(self, time: float, record_kind: TraceKind, /, **fields: Any) -> TraceRecord:
        """`time` and `record_kind` are positional so a record may carry its own `kind` field."""
        if self.records and time < self.records[-1].time:
            raise InvariantViolation(
                "trace-order", f"{record_kind.value} at {time} after {self.records[-1].time}"
            )
        rendered = {key.rstrip("_"): format_value(value) for key, value in fields.items()}
        if (
            record_kind is TraceKind.MSG
            and rendered.get("hop") == BACKBONE
            and rendered.get("scope") == "clique_local"
            and rendered.get("ver", EMPTY) != EMPTY
        ):
            raise InvariantViolation("privacy", f"clique_local item {rendered.get('item')} on a backbone hop")
        record = TraceRecord(time=time, kind=record_kind, fields=rendered)
        self.records.append(record)
        return record

    def of_kind(self, kind: TraceKind) -> List[TraceRecord]:
        return [r for r in self.records if r.kind is kind]

    def dumps(self) -> str:
        return "".join(r.to_line() + "\n" for r in self.records)

    def write(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")
        logger.info(f"Wrote {len(self.records)} trace records to {path}")

    @classmethod
    def loads(cls, text: str) -> "Trace":
        return cls([TraceRecord.from_line(line) for line in text.splitlines() if line.strip()])

    @classmethod
    def read(cls, path: Union[str, Path]) -> "Trace":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


__all__ = [
    "BACKBONE",
    "EMPTY",
    "TraceKind",
    "TraceRecord",
    "Trace",
    "format_value",
    "format_time",
]
