"""Clock abstraction so deterministic runs can be replayed byte-for-byte."""

from __future__ import annotations

import time
from typing import Protocol


class Clock(Protocol):
    def now_ms(self) -> int:
        """Current time in epoch milliseconds."""
        ...


class SystemClock:
    """Wall clock for live runs."""

    def now_ms(self) -> int:
        return int(time.time() * 1000)


class TickClock:
    """Logical clock: every reading advances by a fixed step.

    Used for scripted runs where trajectories must be byte-identical
    across repetitions. Durations derived from successive readings are
    always positive, so timing invariants still hold.
    """

    def __init__(self, start_ms: int = 0, step_ms: int = 1) -> None:
        self._next = start_ms
        self._step = step_ms

    def now_ms(self) -> int:
        current = self._next
        self._next += self._step
        return current
