"""Compact-block propagation: announce, send header plus short tx ids, and
rebuild the body from the local pool, fetching what is missing."""

from __future__ import annotations

from ..chain_types import Hash256
from .actions import Reconstruction
from .lbp import LbpNode
from .messages import CompactBlock, GetData, GetMissedTxs, MissedTxs


class CbpNode(LbpNode):
    protocol = "cbp"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.awaiting: dict[Hash256, tuple[int, int]] = {}   # block -> (sender, hop)

    def request(self, h) -> GetData:
        return GetData(h, compact=True)

    def on_GetData(self, now: float, src: int, msg: GetData) -> None:
        if msg.block_hash not in self.received:
            return
        if not msg.compact:
            self.reply_block(src, msg)
            return
        block = self.world.record(msg.block_hash).block
        self.mark(src, block.hash)
        self.send(src, CompactBlock(block.header, tuple(tx.hash for tx in block.body),
                                    self.hop_of(block.hash) + 1))

    def on_CompactBlock(self, now: float, src: int, msg: CompactBlock) -> None:
        h = msg.header.hash
        self.mark(src, h)
        if h in self.received:
            return
        self.received.add(h)
        self.hops.setdefault(h, msg.hop)
        rec = self.world.record(h)
        missing = self.world.missing(h, self.id, now)
        self.out.append(Reconstruction(h, len(missing), len(msg.tx_hashes)))
        if missing:
            self.awaiting[h] = (src, msg.hop)
            self.send(src, GetMissedTxs(h, tuple(tx.hash for tx in missing)))
        else:
            self.start_full(src, rec.block, msg.hop)

    def on_GetMissedTxs(self, now: float, src: int, msg: GetMissedTxs) -> None:
        # the sender holds the block, hence every transaction in it
        wanted = set(msg.tx_hashes)
        body = self.world.record(msg.block_hash).block.body
        self.send(src, MissedTxs(msg.block_hash, tuple(tx for tx in body if tx.hash in wanted)))

    def on_MissedTxs(self, now: float, src: int, msg: MissedTxs) -> None:
        pending = self.awaiting.pop(msg.block_hash, None)
        if pending is None:
            return
        sender, hop = pending
        self.start_full(sender, self.world.record(msg.block_hash).block, hop)
