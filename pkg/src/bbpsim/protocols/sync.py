"""Pre-packed body synchronization.

After every head change a node builds its body for the next height from the
transactions it holds, announces the body hash to all neighbours, answers a
differing hash with its full body, and merges bodies it is sent. Merged
transactions are admitted only if the node itself received them no later
than ``T + delta`` where ``T`` is the head's timestamp.
"""

from __future__ import annotations

import numpy as np

from ..chain_types import Hash256
from .messages import CheckSync, PpbPayload


class PpbSync:
    """Mixin for :class:`BbpNode`. Expects ``world``, ``id``, ``neighbors``,
    ``head``, ``send`` and ``timer`` from the node."""

    def init_sync(self) -> None:
        s = self.world.scenario
        self.delta = s.delta_ms
        self.max_rounds = s.max_sync_rounds
        self.ppb = None                   # PpbBuild on the current head
        self.ppb_ready = 0.0              # time pre-validation of self.ppb completes
        self.rounds = 0                   # merge-triggered re-announcements at this head
        self.last_seen: dict[int, tuple[Hash256, Hash256]] = {}
        self.ppb_cache: dict[Hash256, object] = {}
        self.announced: Hash256 | None = None      # last body hash sent in CheckSync
        self._refresh_due: float | None = None

    def threshold(self, parent: Hash256) -> float:
        return float(self.world.record(parent).block.header.timestamp)

    def cutoff(self, parent: Hash256, now: float) -> float:
        return min(now, self.threshold(parent) + self.delta)

    def install(self, now: float, build, announce: bool) -> None:
        changed = self.ppb is None or self.ppb.parent != build.parent or \
            self.ppb.body_hash != build.body_hash
        self.ppb = build
        if changed:
            self.ppb_ready = now + self.cost.pre_validation(len(build.ppb), build.n_u)
        self.ppb_cache[build.parent] = (build, self.ppb_ready)
        if announce:
            self.announce_body()

    def announce_body(self) -> None:
        if self.ppb.body_hash == self.announced:
            return
        self.announced = self.ppb.body_hash
        for nbr in self.neighbors:
            self.send(nbr, CheckSync(self.ppb.parent, self.ppb.body_hash))

    def rebuild(self, now: float) -> None:
        """Fresh body for a new head, plus a refresh for arrivals still to come."""
        self.rounds = 0
        self.announced = None
        build = self.world.build_ppb(self.head, self.id, self.cutoff(self.head, now))
        self.install(now, build, announce=True)
        self.schedule_refresh(now)

    def schedule_refresh(self, now: float) -> None:
        until = self.threshold(self.head) + self.delta
        nxt = self.world.pending_arrivals(self.head, self.id, now, until)
        if nxt is not None:
            self._refresh_due = nxt
            self.timer(nxt - now, "refresh", self.head)

    def t_refresh(self, now: float, parent: Hash256) -> None:
        if parent != self.head or self.ppb is None:
            return
        self._refresh_due = None
        build = self.world.build_ppb(parent, self.id, self.cutoff(parent, now),
                                     extra=self.ppb.candidates)
        self.install(now, build, announce=True)

    # -- messages ---------------------------------------------------------------------

    def on_CheckSync(self, now: float, src: int, msg: CheckSync) -> None:
        self.last_seen[src] = (msg.parent, msg.body_hash)
        self.mark(src, msg.parent)
        ppb = self.ppb
        if ppb is not None and msg.parent == self.head == ppb.parent \
                and msg.body_hash != ppb.body_hash:
            self.send(src, PpbPayload(ppb.parent, ppb.info.pruned_ppb))

    def on_PpbPayload(self, now: float, src: int, msg: PpbPayload) -> None:
        ppb = self.ppb
        if ppb is None or msg.parent != self.head or ppb.parent != self.head:
            return
        limit = self.threshold(msg.parent) + self.delta
        admitted = self.world.admit(self.id, msg.txs, limit, now)
        admitted = np.intersect1d(admitted, self.world.candidates(msg.parent))
        new = np.setdiff1d(admitted, ppb.candidates)
        if not len(new):
            return
        build = self.world.build_ppb(msg.parent, self.id, self.cutoff(msg.parent, now),
                                     extra=np.union1d(ppb.candidates, new))
        if build.body_hash == ppb.body_hash:
            self.install(now, build, announce=False)
            return
        self.rounds += 1
        self.install(now, build, announce=self.rounds <= self.max_rounds)

    def tx_arrived(self, now: float, i: int) -> None:
        # event gossip: a newly eligible transaction triggers a debounced rebuild
        if self.ppb is None or now > self.threshold(self.head) + self.delta:
            return
        if self.world.txs.created[i] > self.threshold(self.head):
            return
        if self._refresh_due is None or self._refresh_due > now:
            self._refresh_due = now
            self.timer(0.0, "refresh", self.head)
