"""Proof-of-work abstraction: a global Poisson clock whose winner is drawn
uniformly from the miner set."""

from __future__ import annotations

from collections.abc import Iterator, Sequence

import numpy as np

_BATCH = 64


class MiningSchedule:
    """Lazily extended, deterministic sequence of ``(time_ms, miner)`` events."""

    def __init__(self, t_g_ms: float, miners: Sequence[int], rng: np.random.Generator,
                 start_ms: float = 0.0):
        if t_g_ms <= 0:
            raise ValueError("t_g_ms must be positive")
        if not miners:
            raise ValueError("need at least one miner")
        self.t_g = t_g_ms
        self.miners = list(miners)
        self._rng = rng
        self._last = start_ms
        self.times: list[float] = []
        self.winners: list[int] = []

    def _extend(self) -> None:
        gaps = self._rng.exponential(self.t_g, _BATCH)
        picks = self._rng.integers(0, len(self.miners), _BATCH)
        for gap, pick in zip(gaps, picks):
            self._last += float(gap)
            self.times.append(self._last)
            self.winners.append(self.miners[int(pick)])

    def event(self, k: int) -> tuple[float, int]:
        while k >= len(self.times):
            self._extend()
        return self.times[k], self.winners[k]

    def next_after(self, t: float) -> tuple[float, int]:
        """First event strictly after ``t``."""
        while not self.times or self.times[-1] <= t:
            self._extend()
        k = int(np.searchsorted(self.times, t, side="right"))
        return self.times[k], self.winners[k]

    def __iter__(self) -> Iterator[tuple[float, int]]:
        k = 0
        while True:
            yield self.event(k)
            k += 1


def mining_process(t_g_ms: float, miners: Sequence[int], seed: int) -> MiningSchedule:
    return MiningSchedule(t_g_ms, miners, np.random.default_rng(seed))
