"""Event-driven transaction relay: full transactions to a square-root share
of neighbours, hash announcements to the rest, pull on demand."""

from __future__ import annotations

import math

import numpy as np

from .messages import GetTx, NewTx, TxHashAnnounce


class TxGossip:
    """Per-node relay state. Arrival times are written into the shared
    ``world.event_arrivals`` table so pools and PPBs see them."""

    def __init__(self, node_id: int, world, neighbors: list[int], rng: np.random.Generator):
        self.id = node_id
        self.world = world
        self.neighbors = list(neighbors)
        self.rng = rng
        self.peer_txs: dict[int, set[int]] = {n: set() for n in self.neighbors}
        self.requested: set[int] = set()

    def has(self, i: int) -> bool:
        return bool(np.isfinite(self.world.event_arrivals[i, self.id]))

    def in_pool(self, i: int, head) -> bool:
        if not self.has(i):
            return False
        mask = self.world.record(head).committed
        return not (i < len(mask) and mask[i])

    def receive(self, now: float, i: int, src: int | None) -> list:
        """First receipt (or origination when ``src`` is None); returns sends."""
        if src is not None:
            self.peer_txs[src].add(i)
        if self.has(i):
            return []
        self.world.event_arrivals[i, self.id] = now
        tx = self.world.tx(i)
        fresh = [n for n in self.neighbors if i not in self.peer_txs[n]]
        k = min(math.ceil(math.sqrt(len(self.neighbors))), len(fresh))
        full = set(int(x) for x in self.rng.choice(len(fresh), size=k, replace=False)) if k else set()
        out = []
        for j, nbr in enumerate(fresh):
            self.peer_txs[nbr].add(i)
            out.append((nbr, NewTx(tx) if j in full else TxHashAnnounce(tx.hash)))
        return out

    def on_announce(self, src: int, msg: TxHashAnnounce) -> list:
        i = self.world.txs.index.get(msg.tx_hash)
        if i is None:
            return []
        self.peer_txs[src].add(i)
        if self.has(i) or i in self.requested:
            return []
        self.requested.add(i)
        return [(src, GetTx(msg.tx_hash))]

    def on_get(self, src: int, msg: GetTx, head) -> list:
        i = self.world.txs.index.get(msg.tx_hash)
        # transactions already committed at our head are no longer served
        if i is None or not self.in_pool(i, head):
            return []
        return [(src, NewTx(self.world.tx(i)))]
