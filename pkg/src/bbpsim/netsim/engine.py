"""Event loop: one virtual clock, events ordered by (time, sequence)."""

from __future__ import annotations

import heapq
import math

import numpy as np

from ..protocols import NODE_CLASSES
from ..protocols.actions import Commit, Invalid, Reconstruction, Send, SetTimer, SyncStatus
from ..protocols.messages import type_name
from .config import Scenario, validate
from .topology import deliver
from .trace import BlockRow, CommitRow, RawTrace
from .workload import LOCAL
from .world import World

_MSG, _TIMER, _MINE, _TX = 0, 1, 2, 3


class SimulationError(RuntimeError):
    pass


class Engine:
    def __init__(self, scenario: Scenario, max_void_factor: int = 50):
        self.scenario = s = validate(scenario)
        self.world = w = World(s)
        if s.tx_gossip == "event":
            w.event_arrivals = np.full((len(w.txs), s.n_nodes), np.inf)
        cls = NODE_CLASSES[s.protocol]
        self.nodes = []
        for i in range(s.n_nodes):
            kwargs = {"dishonest": i in w.dishonest} if s.protocol == "bbp" else {}
            self.nodes.append(cls(i, w, w.topology.neighbors[i], w.node_rngs[i], **kwargs))
        self.trace = RawTrace(s.n_nodes, s.protocol, s.seed, s.n_t, scenario=s.to_dict())
        self.now = 0.0
        self._heap: list = []
        self._seq = 0
        self._tx_scheduled = 0
        self._link_free: dict[tuple[int, int], float] = {}   # FIFO per directed link
        self._max_void = max_void_factor * s.run_blocks

    def _push(self, t: float, kind: int, payload) -> None:
        heapq.heappush(self._heap, (t, self._seq, kind, payload))
        self._seq += 1

    def _apply(self, node: int, actions: list) -> None:
        topo = self.world.topology
        s = self.scenario
        for a in actions:
            if isinstance(a, Send):
                size = a.msg.size(s.sizes)
                lat, loss = topo.link(node, a.dst)
                delay = deliver(lat, topo.bandwidth_bps, size, loss,
                                s.link.retransmit_multiplier, self.world.link_rng)
                self.trace.messages.append((self.now, node, a.dst, type_name(a.msg), size))
                # a stream connection never reorders: a retransmission delays what follows
                at = max(self.now + delay, self._link_free.get((node, a.dst), 0.0))
                self._link_free[(node, a.dst)] = at
                self._push(at, _MSG, (a.dst, node, a.msg))
            elif isinstance(a, SetTimer):
                self._push(self.now + a.delay, _TIMER, (node, a.key, a.data))
            elif isinstance(a, Commit):
                link_ms = topo.link(node, a.via)[0] if a.via >= 0 else 0.0
                self.trace.commits.append(CommitRow(a.block_hash.hex(), node, self.now, a.path,
                                                    a.hop, a.via, link_ms, a.processing_ms))
            elif isinstance(a, SyncStatus):
                self.trace.sync.append((a.block_hash.hex(), node, a.synced))
            elif isinstance(a, Reconstruction):
                self.trace.reconstructions.append((a.block_hash.hex(), node, a.n_missing,
                                                   a.n_txs))
            elif isinstance(a, Invalid):
                self.trace.invalid += 1
            else:
                raise TypeError(f"unknown action {a!r}")

    def _advance_txs(self) -> None:
        self.world.ensure_txs(self.now)
        if self.world.event_arrivals is None:
            return
        txs = self.world.txs
        for i in range(self._tx_scheduled, len(txs)):
            if math.isfinite(txs.release[i]):
                self._push(max(float(txs.release[i]), self.now), _TX, i)
        self._tx_scheduled = len(txs)

    def run(self) -> RawTrace:
        s = self.scenario
        world = self.world
        self._advance_txs()
        for i, node in enumerate(self.nodes):
            self._apply(i, node.start(0.0))
        self._push(world.schedule.event(0)[0], _MINE, 0)
        mined = 0
        voided = 0
        end = math.inf
        while self._heap:
            t, _, kind, payload = heapq.heappop(self._heap)
            if t > end:
                break
            self.now = t
            self._advance_txs()
            if kind == _MSG:
                dst, src, msg = payload
                self._apply(dst, self.nodes[dst].on_message(t, src, msg))
            elif kind == _TIMER:
                node, key, data = payload
                self._apply(node, self.nodes[node].on_timer(t, key, data))
            elif kind == _TX:
                origin = int(world.txs.origin[payload])
                self._apply(origin, self.nodes[origin].originate(t, payload))
            else:
                _, winner = world.schedule.event(payload)
                rec, actions = self.nodes[winner].on_mine(t)
                if rec is None:
                    voided += 1
                    if voided > self._max_void:
                        raise SimulationError(
                            f"{voided} mining events voided after {mined} blocks; "
                            "nodes never finish their bodies")
                else:
                    mined += 1
                    self.trace.blocks.append(BlockRow(
                        rec.hash.hex(), rec.height, rec.parent.hex(), winner, t, rec.n_txs,
                        rec.n_u))
                    if world.event_arrivals is not None:
                        for i in rec.tx_idx[world.txs.kind[rec.tx_idx] == LOCAL]:
                            self._push(t, _TX, int(i))
                self._apply(winner, actions)
                if mined < s.run_blocks:
                    self._push(world.schedule.event(payload + 1)[0], _MINE, payload + 1)
                else:
                    end = t + s.effective_drain_ms
        if mined < s.run_blocks:
            raise SimulationError(f"event queue exhausted after {mined} of {s.run_blocks} blocks")
        self.trace.end_ms = self.now
        self.trace.voided_mining = voided
        self._finish()
        return self.trace

    def _finish(self) -> None:
        world = self.world
        tr = self.trace
        order = {b.block_hash: k for k, b in enumerate(tr.blocks)}
        # canonical tip: greatest height, earliest mined among equals
        tip = min(tr.blocks, key=lambda b: (-b.height, order[b.block_hash]))
        by_hash = {b.block_hash: b for b in tr.blocks}
        h = tip.block_hash
        while h in by_hash:
            by_hash[h].canonical = True
            h = by_hash[h].parent_hash
        # a transaction is stale at a node if it reaches the node after the
        # node committed the canonical block that includes it
        commits: dict[str, list[tuple[int, float]]] = {}
        for c in tr.commits:
            commits.setdefault(c.block_hash, []).append((c.node, c.commit_ms))
        for b in tr.canonical_blocks():
            rec = world.record(bytes.fromhex(b.block_hash))
            if not len(rec.tx_idx):
                continue
            count = 0
            for node, t in commits.get(b.block_hash, []):
                arr = world.arrival(rec.tx_idx, node)
                count += int(np.sum(np.isfinite(arr) & (arr > t)))
            if count:
                tr.stale_txs[b.height] = count


def run(scenario: Scenario) -> RawTrace:
    return Engine(scenario).run()
