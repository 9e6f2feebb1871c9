"""Hybrid propagation: push the full block to a square-root share of the
neighbours right after the header check, announce the hash to the rest once
fully validated. Hash receivers wait, then pull header and body."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..chain_types import Block, Hash256
from .actions import HASH, FULL
from .base import BaseNode
from .messages import (
    BlockHashAnnounce,
    BodyResponse,
    FullBlock,
    GetBody,
    GetHeader,
    HeaderResponse,
)


@dataclass
class _HashFetch:
    announcers: list[int] = field(default_factory=list)
    header_from: int = -1


class BhpNode(BaseNode):
    protocol = "bhp"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.t1 = self.world.scenario.bhp.t1_ms
        self.t2 = self.world.scenario.bhp.t2_ms
        self.hash_fetch: dict[Hash256, _HashFetch] = {}
        self.via_hash: set[Hash256] = set()
        self.pushed: set[Hash256] = set()

    def start_full(self, src: int, block: Block, hop: int) -> None:
        if not self.parent_ready(src, block, hop):
            return
        self.timer(self.cost.t_h, "header_ok", (block.hash, src, hop))

    def t_header_ok(self, now: float, data) -> None:
        h, src, hop = data
        self.push(h, hop)
        rest = self.cost.full_validation(len(self.world.record(h).block.body)) - self.cost.t_h
        self.timer(rest, "full_done", (h, src, hop, rest + self.cost.t_h))

    def push(self, h: Hash256, hop: int) -> None:
        if h in self.pushed:
            return
        self.pushed.add(h)
        block = self.world.record(h).block
        fresh = [n for n in self.neighbors if not self.knows(n, h)]
        k = min(self.fanout(), len(fresh))
        if not k:
            return
        picks = sorted(int(i) for i in self.rng.choice(len(fresh), size=k, replace=False))
        for i in picks:
            self.mark(fresh[i], h)
            self.send(fresh[i], FullBlock(block, hop + 1))

    def announce(self, now: float, block: Block, hop: int) -> None:
        self.push(block.hash, hop)      # a mined block skips the header check
        for nbr in self.neighbors:
            if not self.knows(nbr, block.hash):
                self.mark(nbr, block.hash)
                self.send(nbr, BlockHashAnnounce(block.hash))

    def full_path_kind(self, h: Hash256) -> str:
        return HASH if h in self.via_hash else FULL

    # -- block arrival -------------------------------------------------------------

    def on_FullBlock(self, now: float, src: int, msg: FullBlock) -> None:
        self.hash_fetch.pop(msg.block.hash, None)       # abort any hash-path fetch
        super().on_FullBlock(now, src, msg)

    def on_BlockHashAnnounce(self, now: float, src: int, msg: BlockHashAnnounce) -> None:
        h = msg.block_hash
        self.mark(src, h)
        if h in self.received:
            return
        fetch = self.hash_fetch.get(h)
        if fetch is None:
            self.hash_fetch[h] = _HashFetch([src])
            self.timer(self.t1, "t1", h)
        else:
            fetch.announcers.append(src)

    def t_t1(self, now: float, h: Hash256) -> None:
        fetch = self.hash_fetch.get(h)
        if fetch is None or h in self.received:
            return
        fetch.header_from = fetch.announcers[0]
        self.send(fetch.header_from, GetHeader(h))

    def on_GetHeader(self, now: float, src: int, msg: GetHeader) -> None:
        if msg.block_hash in self.received:
            self.send(src, HeaderResponse(self.world.record(msg.block_hash).block.header))

    def on_HeaderResponse(self, now: float, src: int, msg: HeaderResponse) -> None:
        h = msg.header.hash
        if h in self.hash_fetch and h not in self.received:
            self.timer(self.t2, "t2", h)

    def t_t2(self, now: float, h: Hash256) -> None:
        fetch = self.hash_fetch.get(h)
        if fetch is None or h in self.received:
            return
        peer = fetch.announcers[int(self.rng.integers(len(fetch.announcers)))]
        self.send(peer, GetBody(h))

    def on_GetBody(self, now: float, src: int, msg: GetBody) -> None:
        h = msg.block_hash
        if h in self.received:
            body = self.world.record(h).block.body
            self.send(src, BodyResponse(h, body, self.hop_of(h) + 1))

    def on_BodyResponse(self, now: float, src: int, msg: BodyResponse) -> None:
        h = msg.block_hash
        if self.hash_fetch.pop(h, None) is None or h in self.received:
            return
        self.via_hash.add(h)
        self.receive_full(now, src, self.world.record(h).block, msg.hop)
