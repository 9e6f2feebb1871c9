"""Scripted network for protocol tests: hand-picked adjacency, fixed link
delay, no loss. Every send and every action is recorded for inspection."""

from __future__ import annotations

import heapq

import numpy as np

from bbpsim.netsim.config import scenario_from_dict
from bbpsim.netsim.world import World
from bbpsim.protocols import NODE_CLASSES
from bbpsim.protocols.actions import Commit, Invalid, Reconstruction, Send, SetTimer, SyncStatus
from bbpsim.protocols.messages import type_name


class Lab:
    def __init__(self, protocol: str, adjacency: dict[int, list[int]], link_ms: float = 10.0,
                 **scenario):
        scenario.setdefault("n_nodes", max(4, len(adjacency)))
        scenario.setdefault("n_t", 20)
        scenario.setdefault("topology", {"attach_m": 2})
        self.world = World(scenario_from_dict({"protocol": protocol, **scenario}))
        if self.world.scenario.tx_gossip == "event":
            self.world.event_arrivals = np.full((len(self.world.txs),
                                                 self.world.scenario.n_nodes), np.inf)
        cls = NODE_CLASSES[protocol]
        self.nodes = {i: cls(i, self.world, nbrs, np.random.default_rng(100 + i))
                      for i, nbrs in adjacency.items()}
        self.link_ms = link_ms
        self.now = 0.0
        self._heap: list = []
        self._seq = 0
        self.sent: list[tuple[float, int, int, object]] = []
        self.commits: dict[tuple[int, bytes], tuple[float, Commit]] = {}
        self.status: list[tuple[int, SyncStatus]] = []
        self.recon: list[tuple[int, Reconstruction]] = []
        self.invalid: list[tuple[int, Invalid]] = []

    def _push(self, t, kind, payload) -> None:
        heapq.heappush(self._heap, (t, self._seq, kind, payload))
        self._seq += 1

    def apply(self, node: int, actions) -> None:
        for a in actions:
            if isinstance(a, Send):
                self.sent.append((self.now, node, a.dst, a.msg))
                self._push(self.now + self.link_ms, "msg", (a.dst, node, a.msg))
            elif isinstance(a, SetTimer):
                self._push(self.now + a.delay, "timer", (node, a.key, a.data))
            elif isinstance(a, Commit):
                self.commits[(node, a.block_hash)] = (self.now, a)
            elif isinstance(a, SyncStatus):
                self.status.append((node, a))
            elif isinstance(a, Reconstruction):
                self.recon.append((node, a))
            elif isinstance(a, Invalid):
                self.invalid.append((node, a))

    def start(self, at: float = 0.0) -> None:
        self.now = at
        for i, node in self.nodes.items():
            self.apply(i, node.start(at))

    def run(self, until: float) -> None:
        while self._heap and self._heap[0][0] <= until:
            t, _, kind, payload = heapq.heappop(self._heap)
            self.now = t
            self.world.ensure_txs(t)
            if kind == "msg":
                dst, src, msg = payload
                if dst in self.nodes:
                    self.apply(dst, self.nodes[dst].on_message(t, src, msg))
            elif kind == "timer":
                node, key, data = payload
                self.apply(node, self.nodes[node].on_timer(t, key, data))
            else:
                node, origin_idx = payload
                self.apply(node, self.nodes[node].originate(t, origin_idx))
        self.now = max(self.now, until)

    def mine(self, node: int, at: float):
        self.run(at)
        self.now = at
        self.world.ensure_txs(at)
        rec, actions = self.nodes[node].on_mine(at)
        self.apply(node, actions)
        return rec

    def inject(self, at: float, src: int, dst: int, msg) -> None:
        self._push(at, "msg", (dst, src, msg))

    def originate(self, at: float, node: int, idx: int) -> None:
        self._push(at, "tx", (node, idx))

    # -- queries ---------------------------------------------------------------------

    def sends(self, kind: str | None = None, since: float = -np.inf):
        return [(t, s, d, m) for t, s, d, m in self.sent
                if t >= since and (kind is None or type_name(m) == kind)]

    def committed(self, h: bytes) -> dict[int, Commit]:
        return {n: c for (n, hh), (_, c) in self.commits.items() if hh == h}

    def commit_time(self, node: int, h: bytes) -> float:
        return self.commits[(node, h)][0]
