"""Operation counters and stage timers for the spectrum searches.

Estimators report each spectrum-search stage (name, grid evaluations,
multiply-accumulate tally, wall seconds) to whatever meters are active.
The MAC tally counts the noise-subspace projection only -- per steering
vector of length n against an n x (n-k) basis that is n*(n-k) complex
multiply-adds plus (n-k) for the squared norm, each counted as two
operations -- matching the convention of the published complexity
formulas.  Steering-vector construction is excluded from the tally.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field


@dataclass
class StageStats:
    evals: int = 0
    macs: int = 0
    seconds: float = 0.0


@dataclass
class Meter:
    "Accumulates per-stage statistics while active under measure()."

    stages: dict[str, StageStats] = field(default_factory=dict)

    def add(self, stage: str, evals: int, macs: int, seconds: float) -> None:
        st = self.stages.setdefault(stage, StageStats())
        st.evals += evals
        st.macs += macs
        st.seconds += seconds

    def total(self, prefix: str = "") -> StageStats:
        "Aggregate over all stages whose name starts with ``prefix``."
        out = StageStats()
        for name, st in self.stages.items():
            if name.startswith(prefix):
                out.evals += st.evals
                out.macs += st.macs
                out.seconds += st.seconds
        return out


_ACTIVE: list[Meter] = []


@contextmanager
def measure():
    "Activate a Meter for the duration of the block and yield it."
    meter = Meter()
    _ACTIVE.append(meter)
    try:
        yield meter
    finally:
        _ACTIVE.remove(meter)


def record(stage: str, evals: int, macs: int, seconds: float) -> None:
    "Report one completed spectrum stage to all active meters."
    for meter in _ACTIVE:
        meter.add(stage, evals, macs, seconds)


def projection_macs(vector_len: int, noise_dims: int) -> int:
    "Counted operations for projecting one steering vector, see module doc."
    return 2 * (vector_len + 1) * noise_dims
