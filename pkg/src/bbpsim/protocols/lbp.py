"""Legacy propagation: announce by hash, pull the full block on demand."""

from __future__ import annotations

from ..chain_types import Block
from .base import BaseNode
from .messages import GetData, Inv


class LbpNode(BaseNode):
    protocol = "lbp"

    def announce(self, now: float, block: Block, hop: int) -> None:
        for nbr in self.neighbors:
            if not self.knows(nbr, block.hash):
                self.mark(nbr, block.hash)
                self.send(nbr, Inv(block.hash))

    def on_Inv(self, now: float, src: int, msg: Inv) -> None:
        h = msg.block_hash
        self.mark(src, h)
        if h in self.received or h in self.fetching:
            return
        self.fetching[h] = src
        self.send(src, self.request(h))

    def request(self, h) -> GetData:
        return GetData(h)
