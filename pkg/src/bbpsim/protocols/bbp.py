"""Bodyless propagation: neighbours that announced the same pre-packed body
get only the header and validate it against their pre-validated body;
everyone else gets the full block."""

from __future__ import annotations

from ..chain_types import Block, BlockHeader, Hash256
from .actions import FAST, SyncStatus
from .base import BaseNode
from .messages import BlockHeaderMsg, FullBlock, GetData
from .sync import PpbSync


class BbpNode(PpbSync, BaseNode):
    protocol = "bbp"

    def __init__(self, *args, dishonest: bool = False, **kwargs):
        super().__init__(*args, **kwargs)
        self.dishonest = dishonest
        self.init_sync()
        self.in_progress: set[Hash256] = set()
        self.status_seen: set[Hash256] = set()
        self.waiting_headers: dict[Hash256, list[tuple[BlockHeader, int, int]]] = {}

    def start(self, now: float) -> list:
        self.rebuild(now)
        return self._flush()

    # -- mining -----------------------------------------------------------------------

    def seal(self, now: float):
        if self.dishonest:
            return self.world.seal_legacy(self.id, self.head, now)
        ppb = self.ppb
        if ppb is None or ppb.parent != self.head:
            return None
        if now < self.threshold(self.head) + self.delta or now < self.ppb_ready:
            return None         # body not final yet: this mining event is void
        return self.world.seal_from_ppb(self.id, ppb, now)

    def new_head(self, now: float) -> None:
        self.rebuild(now)

    # -- forwarding -------------------------------------------------------------------

    def announce(self, now: float, block: Block, hop: int) -> None:
        parent = block.header.parent_hash
        for nbr in self.neighbors:
            if self.knows(nbr, block.hash):
                continue
            self.mark(nbr, block.hash)
            seen = self.last_seen.get(nbr)
            if seen is not None and seen[0] == parent and seen[1] != block.header.txs_hash:
                self.send(nbr, FullBlock(block, hop + 1))
            else:
                self.send(nbr, BlockHeaderMsg(block.header, hop + 1))

    def _status(self, now: float, header: BlockHeader) -> None:
        h = header.hash
        if h in self.status_seen:
            return
        self.status_seen.add(h)
        synced = False
        if header.parent_hash in self.validated:
            build, _ = self.body_for(now, header.parent_hash)
            synced = build.body_hash == header.txs_hash
        self.out.append(SyncStatus(h, synced))

    # -- receive paths ----------------------------------------------------------------

    def on_FullBlock(self, now: float, src: int, msg: FullBlock) -> None:
        self.mark(src, msg.block.header.parent_hash)
        self._status(now, msg.block.header)
        super().on_FullBlock(now, src, msg)

    def on_BlockHeaderMsg(self, now: float, src: int, msg: BlockHeaderMsg) -> None:
        header = msg.header
        h = header.hash
        self.mark(src, h)
        self.mark(src, header.parent_hash)
        self._status(now, header)
        if h in self.received or h in self.in_progress:
            return
        self.in_progress.add(h)
        self.hops.setdefault(h, msg.hop)
        parent = header.parent_hash
        if parent not in self.validated:
            self.waiting_headers.setdefault(parent, []).append((header, src, msg.hop))
            if parent not in self.received and parent not in self.fetching:
                self.fetching[parent] = src
                self.send(src, GetData(parent))
            return
        self.fast_path(now, header, src, msg.hop)

    def parent_accepted(self, now: float, h: Hash256) -> None:
        for header, src, hop in self.waiting_headers.pop(h, []):
            self.fast_path(now, header, src, hop)

    def body_for(self, now: float, parent: Hash256):
        """Pre-validated body for ``parent`` and the time it is ready."""
        if self.ppb is not None and self.ppb.parent == parent:
            return self.ppb, self.ppb_ready
        cached = self.ppb_cache.get(parent)
        if cached is not None:
            return cached
        build = self.world.build_ppb(parent, self.id, self.cutoff(parent, now))
        ready = now + self.cost.pre_validation(len(build.ppb), build.n_u)
        self.ppb_cache[parent] = (build, ready)
        return build, ready

    def fast_path(self, now: float, header: BlockHeader, src: int, hop: int) -> None:
        if header.hash in self.received:
            return
        build, ready = self.body_for(now, header.parent_hash)
        if build.body_hash != header.txs_hash:
            self.fallback(header.hash, src)
            return
        cost = self.cost.finalize(len(build.info.pruned_ppb), build.n_u)
        self.timer(max(0.0, ready - now) + cost, "fast_done", (header.hash, src, hop, cost, build))

    def t_fast_done(self, now: float, data) -> None:
        h, src, hop, cost, build = data
        if h in self.received:
            return
        if self.world.validate_fast(h, build):
            self.received.add(h)
            self.accept(now, h, FAST, hop, src, cost)
        else:
            self.fallback(h, src)

    def fallback(self, h: Hash256, src: int) -> None:
        if h in self.received or h in self.fetching:
            return
        self.fetching[h] = src
        self.send(src, GetData(h))
