"""Monotonic-clock rate control with sub-millisecond precision.

OS sleeps overshoot by up to a scheduler quantum, so sleep_until sleeps in
bulk until just before the deadline and spins the remainder. A RateTicker
schedules tick k at start + k·period using integer nanoseconds, so there is
no cumulative drift at any rate.
"""

from __future__ import annotations

import time
from typing import Optional

# how early to stop bulk-sleeping and start spinning
_SPIN_MARGIN_NS = 500_000


def now_ns() -> int:
    """Monotonic nanoseconds; the time base for every deadline in this package."""
    return time.monotonic_ns()


def sleep_until(deadline_ns: int) -> int:
    """Block until the monotonic clock passes deadline_ns; returns the overshoot.

    Hybrid strategy: coarse sleep down to a 0.5 ms margin, then a busy spin
    with zero-length sleeps to yield the core between polls.
    """
    while True:
        remaining = deadline_ns - time.monotonic_ns()
        if remaining <= 0:
            break
        if remaining > _SPIN_MARGIN_NS:
            time.sleep((remaining - _SPIN_MARGIN_NS) / 1e9)
        else:
            time.sleep(0)
    return time.monotonic_ns() - deadline_ns


class RateTicker:
    """Fixed-rate tick scheduler: wait() blocks until the next tick deadline.

    Ticks land on an absolute grid anchored at construction (or start_ns), so
    a late tick does not push later ones. Falling more than `resync_periods`
    behind re-anchors the grid at the current time instead of bursting to
    catch up.
    """

    def __init__(self, rate_hz: float, start_ns: Optional[int] = None, resync_periods: int = 3):
        if rate_hz <= 0:
            raise ValueError(f"rate must be positive, got {rate_hz}")
        self.rate_hz = float(rate_hz)
        self.period_ns = 1e9 / self.rate_hz
        self.start_ns = now_ns() if start_ns is None else int(start_ns)
        self.resync_periods = int(resync_periods)
        self.tick = 0

    def next_deadline_ns(self) -> int:
        return self.start_ns + round((self.tick + 1) * self.period_ns)

    def wait(self) -> int:
        """Sleep to the next tick; returns its deadline in monotonic ns."""
        deadline = self.next_deadline_ns()
        behind = now_ns() - deadline
        if behind > self.resync_periods * self.period_ns:
            # fell far behind (suspended process, debugger): re-anchor the grid
            self.start_ns = now_ns()
            self.tick = 0
            deadline = self.start_ns
        else:
            sleep_until(deadline)
        self.tick += 1
        return deadline
