"""Chain bookkeeping shared by every protocol node: which blocks a node holds,
its head, orphan handling and the per-neighbour knowledge used to avoid
sending a block twice."""

from __future__ import annotations

import math

import numpy as np

from ..chain_types import Block, Hash256
from .actions import FULL, MINED, Commit, Invalid, Send, SetTimer
from .gossip import TxGossip
from .messages import FullBlock, GetData, GetTx, NewTx, TxHashAnnounce


class BaseNode:
    """Common state machine. Subclasses implement block announcement and the
    protocol specific receive paths; every handler returns a list of actions."""

    protocol = "base"

    def __init__(self, node_id: int, world, neighbors: list[int], rng: np.random.Generator):
        self.id = node_id
        self.world = world
        self.neighbors = list(neighbors)
        self.rng = rng
        self.cost = world.scenario.cost
        self.head: Hash256 = world.genesis.hash
        self.head_height = 0
        self.validated: set[Hash256] = {world.genesis.hash}
        self.received: set[Hash256] = {world.genesis.hash}    # contents held or being validated
        self.peer_has: dict[int, set[Hash256]] = {n: set() for n in self.neighbors}
        self.orphans: dict[Hash256, list[tuple[Block, int, int]]] = {}
        self.fetching: dict[Hash256, int] = {}                # block hash -> neighbour asked
        self.hops: dict[Hash256, int] = {}
        self.out: list = []
        self.gossip = (TxGossip(node_id, world, neighbors, rng)
                       if world.scenario.tx_gossip == "event" else None)

    # -- plumbing ----------------------------------------------------------------

    def _flush(self) -> list:
        out, self.out = self.out, []
        return out

    def send(self, dst: int, msg) -> None:
        self.out.append(Send(dst, msg))

    def timer(self, delay: float, key: str, data=None) -> None:
        self.out.append(SetTimer(max(0.0, delay), key, data))

    def knows(self, nbr: int, h: Hash256) -> bool:
        return h in self.peer_has[nbr]

    def mark(self, nbr: int, h: Hash256) -> None:
        if nbr in self.peer_has:
            self.peer_has[nbr].add(h)

    def fanout(self) -> int:
        return math.ceil(math.sqrt(len(self.neighbors)))

    # -- entry points used by the engine -------------------------------------------

    def start(self, now: float) -> list:
        return self._flush()

    def on_message(self, now: float, src: int, msg) -> list:
        handler = getattr(self, "on_" + type(msg).__name__, None)
        if handler is None:
            raise TypeError(f"{self.protocol} node cannot handle {type(msg).__name__}")
        handler(now, src, msg)
        return self._flush()

    def on_timer(self, now: float, key: str, data) -> list:
        getattr(self, "t_" + key)(now, data)
        return self._flush()

    def on_mine(self, now: float):
        """Try to seal a block on the local head; returns (record or None, actions)."""
        rec = self.seal(now)
        if rec is not None:
            self.received.add(rec.hash)
            self.accept(now, rec.hash, MINED, 0, -1, 0.0)
        return rec, self._flush()

    # -- transaction relay (event gossip mode) ---------------------------------------

    def originate(self, now: float, i: int) -> list:
        """Transaction ``i`` is released by this node, its origin."""
        self._got_tx(now, i, None)
        return self._flush()

    def _got_tx(self, now: float, i: int, src: int | None) -> None:
        was = self.gossip.has(i)
        for dst, msg in self.gossip.receive(now, i, src):
            self.send(dst, msg)
        if not was:
            self.tx_arrived(now, i)

    def tx_arrived(self, now: float, i: int) -> None:
        pass

    def on_NewTx(self, now: float, src: int, msg: NewTx) -> None:
        i = self.world.txs.index.get(msg.tx.hash)
        if i is not None:
            self._got_tx(now, i, src)

    def on_TxHashAnnounce(self, now: float, src: int, msg: TxHashAnnounce) -> None:
        for dst, m in self.gossip.on_announce(src, msg):
            self.send(dst, m)

    def on_GetTx(self, now: float, src: int, msg: GetTx) -> None:
        for dst, m in self.gossip.on_get(src, msg, self.head):
            self.send(dst, m)

    # -- chain logic ----------------------------------------------------------------

    def seal(self, now: float):
        return self.world.seal_legacy(self.id, self.head, now)

    def accept(self, now: float, h: Hash256, path: str, hop: int, via: int,
               processing_ms: float) -> None:
        """Record a successful validation and move the head if the chain grew."""
        if h in self.validated:
            return
        self.validated.add(h)
        self.hops[h] = hop
        self.fetching.pop(h, None)
        self.out.append(Commit(h, path, hop, via, processing_ms))
        rec = self.world.record(h)
        if rec.height > self.head_height:
            self.head, self.head_height = h, rec.height
            self.new_head(now)
            self.announce(now, rec.block, hop)
        for block, src, bhop in self.orphans.pop(h, []):
            self.start_full(src, block, bhop)
        self.parent_accepted(now, h)

    def reject(self, h: Hash256, reason: str) -> None:
        self.out.append(Invalid(h, reason))

    def new_head(self, now: float) -> None:
        pass

    def parent_accepted(self, now: float, h: Hash256) -> None:
        pass

    def announce(self, now: float, block: Block, hop: int) -> None:
        raise NotImplementedError

    def parent_ready(self, src: int, block: Block, hop: int) -> bool:
        """True if the parent is validated; otherwise park the block and fetch the parent."""
        parent = block.header.parent_hash
        if parent in self.validated:
            return True
        self.orphans.setdefault(parent, []).append((block, src, hop))
        if parent not in self.received and parent not in self.fetching:
            self.fetching[parent] = src
            self.send(src, GetData(parent))
        return False

    def receive_full(self, now: float, src: int, block: Block, hop: int) -> None:
        """Full-body receive path: validate by sequential execution, then accept."""
        h = block.hash
        if h in self.received:
            return
        self.received.add(h)
        self.hops.setdefault(h, hop)
        self.start_full(src, block, hop)

    def start_full(self, src: int, block: Block, hop: int) -> None:
        if not self.parent_ready(src, block, hop):
            return
        h = block.hash
        cost = self.cost.full_validation(len(block.body))
        self.timer(cost, "full_done", (h, src, hop, cost))

    def t_full_done(self, now: float, data) -> None:
        h, src, hop, cost = data
        if self.world.validate_full(h):
            self.accept(now, h, self.full_path_kind(h), hop, src, cost)
        else:
            self.reject(h, "full validation failed")

    def full_path_kind(self, h: Hash256) -> str:
        return FULL

    # -- requests every protocol answers ------------------------------------------

    def on_GetData(self, now: float, src: int, msg: GetData) -> None:
        if msg.block_hash in self.received:
            self.reply_block(src, msg)

    def reply_block(self, src: int, msg: GetData) -> None:
        block = self.world.record(msg.block_hash).block
        self.mark(src, block.hash)
        self.send(src, FullBlock(block, self.hop_of(block.hash) + 1))

    def on_FullBlock(self, now: float, src: int, msg: FullBlock) -> None:
        self.mark(src, msg.block.hash)
        self.receive_full(now, src, msg.block, msg.hop)

    def hop_of(self, h: Hash256) -> int:
        return self.hops.get(h, 0)
