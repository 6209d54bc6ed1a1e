"""Per-iteration trace records, the evolving run state, and JSONL persistence."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Any, Iterable, Iterator, Optional, TextIO

import numpy as np
from numpy.typing import NDArray


class Event(str, Enum):
    ACCEPT = "ACCEPT"
    STALL = "STALL"
    RESAMPLE = "RESAMPLE"
    CONVERGED = "CONVERGED"


@dataclass(frozen=True)
class TraceRecord:
    """One outer iteration, describing the move from x_k to x_{k+1}.

    ``f1hat`` and ``g1hat_batch`` are measured at x_k. The terminal CONVERGED
    record carries the final residual and leaves step fields as None.
    """

    k: int
    f1hat: float
    g1hat_batch: Optional[float] = None
    step_norm: Optional[float] = None
    prox_grad_norm: Optional[float] = None
    L_k: Optional[float] = None
    tau_k: Optional[float] = None
    eta_k: Optional[float] = None
    n_L_probes: int = 0
    batch_indices: Optional[tuple[int, ...]] = None
    event: Event = Event.ACCEPT
    wall_ns: int = 0

    def __post_init__(self) -> None:
        if not math.isfinite(self.f1hat):
            raise ValueError("trace records need a finite f1hat")
        if self.batch_indices is not None:
            object.__setattr__(self, "batch_indices", tuple(int(i) for i in self.batch_indices))
        object.__setattr__(self, "event", Event(self.event))

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["event"] = self.event.value
        if self.batch_indices is not None:
            data["batch_indices"] = list(self.batch_indices)
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), allow_nan=False)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TraceRecord":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown trace fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, line: str) -> "TraceRecord":
        return cls.from_dict(json.loads(line))


def write_jsonl(records: Iterable[TraceRecord], stream: TextIO) -> None:
    for record in records:
        stream.write(record.to_json())
        stream.write("\n")


def read_jsonl(stream: TextIO) -> Iterator[TraceRecord]:
    for line in stream:
        line = line.strip()
        if line:
            yield TraceRecord.from_json(line)


CONVERGED = "converged"
MAX_OUTER = "max_outer"
STALLED = "stalled"


@dataclass
class RunState:
    """Evolving iterate of a solver run plus everything needed to audit it.

    ``details`` holds one dict per non-terminal trace record with the extra
    scalars the certificate checks consume.
    """

    k: int
    x: NDArray
    L_k: float
    last_f1: float
    trace: list[TraceRecord] = field(default_factory=list)
    details: list[dict[str, Any]] = field(default_factory=list)
    iterates: list[NDArray] = field(default_factory=list)
    f1_initial: float = 0.0
    status: str = MAX_OUTER
    reason: str = ""
    consecutive_stalls: int = 0
    total_probes: int = 0
    flags: dict[str, Any] = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def accepted(self) -> list[int]:
        """Positions in ``trace`` of accepted iterations."""
        return [i for i, r in enumerate(self.trace) if r.event is Event.ACCEPT]

    def f1_history(self) -> NDArray:
        return np.array([r.f1hat for r in self.trace])

    def jsonl(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.trace)
