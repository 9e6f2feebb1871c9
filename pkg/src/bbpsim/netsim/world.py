"""Shared, deterministic simulation state that every node reads: the block
registry, transaction table and memoized ledger computations.

Nodes never mutate anything here except through :meth:`World.seal_block`
and :meth:`World.release_tx`. Heavy work (body selection, execution) is
memoized on its inputs so identical computations at many nodes run once;
the simulated CPU time is still charged per node by the protocols.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..chain_types import EMPTY_HASH, ZERO_HASH, Block, BlockHeader, Hash256, Transaction, WorldState, body_hash
from ..execution import (
    ValidationInfo,
    finalize_state,
    finalize_validate,
    full_validate,
    pre_validate,
    seal_block,
)
from ..mempool import PoolEntry, PrePackedBody, TxPool, insert_entry, legacy_select, tso_select
from .config import Scenario
from .mining import MiningSchedule
from .topology import Topology, generate_topology
from .workload import LOCAL, Workload

COINBASE_BASE = 10**12


def coinbase_of(node: int) -> int:
    return COINBASE_BASE + node


@dataclass
class BlockRecord:
    block: Block
    miner: int
    mined_at: float
    post_state: WorldState
    tx_idx: np.ndarray
    n_u: int
    committed: np.ndarray = field(repr=False)      # bool mask over tx indices on this chain

    @property
    def hash(self) -> Hash256:
        return self.block.hash

    @property
    def parent(self) -> Hash256:
        return self.block.header.parent_hash

    @property
    def height(self) -> int:
        return self.block.number

    @property
    def n_txs(self) -> int:
        return len(self.block.body)


@dataclass(frozen=True)
class PpbBuild:
    """A node's pre-packed body for one parent, plus what it was built from."""

    parent: Hash256
    candidates: np.ndarray      # tx indices offered to the selection
    ppb: PrePackedBody
    info: ValidationInfo

    @property
    def body_hash(self) -> Hash256:
        return self.ppb.body_hash

    @property
    def n_u(self) -> int:
        return self.info.n_unexecutable


def _digest(arr: np.ndarray) -> bytes:
    return hashlib.blake2b(np.ascontiguousarray(arr, dtype=np.int64).tobytes(),
                           digest_size=16).digest()


class World:
    def __init__(self, scenario: Scenario):
        self.scenario = s = scenario
        root = np.random.SeedSequence(s.seed)
        topo_seed, mine_seq, work_seq, node_seq, link_seq, role_seq = root.spawn(6)
        self.topology: Topology = generate_topology(
            s.topology, s.link, s.n_nodes, int(topo_seed.generate_state(1)[0]))
        role_rng = np.random.default_rng(role_seq)
        n_miners = max(1, round(s.miner_fraction * s.n_nodes))
        self.miners = sorted(int(x) for x in role_rng.choice(s.n_nodes, n_miners, replace=False))
        n_bad = round(s.dishonest_fraction * n_miners)
        self.dishonest = set(sorted(int(x) for x in role_rng.choice(self.miners, n_bad,
                                                                     replace=False)))
        self.schedule = MiningSchedule(s.t_g_ms, self.miners, np.random.default_rng(mine_seq))
        self.workload = Workload(s.workload, s.tx_rate_per_ms, s.n_nodes, self.miners,
                                 self.schedule, -s.effective_prefill_ms, s.t_g_ms, work_seq)
        self.txs = self.workload.table
        self.node_rngs = [np.random.default_rng(x) for x in node_seq.spawn(s.n_nodes)]
        self.link_rng = np.random.default_rng(link_seq)
        self.tx_delay = self.topology.delay_matrix(s.sizes.s_t)
        self.event_arrivals: np.ndarray | None = None   # filled only in event-gossip mode

        genesis_state = self.workload.genesis_state()
        header = BlockHeader(ZERO_HASH, 0, 0, 0, EMPTY_HASH, genesis_state.root)
        self.genesis = Block(header, ())
        self.blocks: dict[Hash256, BlockRecord] = {}
        self.blocks[self.genesis.hash] = BlockRecord(
            self.genesis, -1, 0.0, genesis_state, np.zeros(0, dtype=np.int64), 0,
            np.zeros(0, dtype=bool))
        self._candidates: dict[Hash256, np.ndarray] = {}
        self._tso: dict[tuple[Hash256, bytes], PrePackedBody] = {}
        self._pre: dict[tuple[Hash256, Hash256], ValidationInfo] = {}
        self._full_ok: dict[Hash256, bool] = {}
        self._fast_ok: dict[Hash256, bool] = {}
        self._idx_memo: dict[int, tuple[tuple, np.ndarray]] = {}
        self.ensure_txs(0.0)

    # -- transactions --------------------------------------------------------------

    def ensure_txs(self, now: float) -> None:
        self.workload.ensure(now)
        if self.event_arrivals is not None and self.event_arrivals.shape[0] < len(self.txs):
            grow = len(self.txs) - self.event_arrivals.shape[0]
            pad = np.full((grow, self.scenario.n_nodes), np.inf)
            self.event_arrivals = np.vstack([self.event_arrivals, pad])

    def arrival(self, idx: np.ndarray, node: int) -> np.ndarray:
        if self.event_arrivals is not None:
            out = self.event_arrivals[idx, node].copy()
            own = self.txs.origin[idx] == node
            out[own] = self.txs.created[idx][own]
            return out
        return self.txs.arrival(idx, node, self.tx_delay)

    def release_tx(self, i: int, at: float) -> None:
        if not np.isfinite(self.txs.release[i]):
            self.txs.release[i] = at

    def tx_indices(self, txs) -> np.ndarray:
        """Table indices of ``txs`` (unknown transactions map to -1).

        Bodies are passed around as shared tuples, so the lookup is memoized
        per tuple; the tuple itself is kept alive so its id is never reused.
        """
        got = self._idx_memo.get(id(txs))
        if got is not None and got[0] is txs:
            return got[1]
        index = self.txs.index
        arr = np.fromiter((index.get(t.hash, -1) for t in txs), dtype=np.int64, count=len(txs))
        if isinstance(txs, tuple):
            self._idx_memo[id(txs)] = (txs, arr)
        return arr

    def tx(self, i: int) -> Transaction:
        return self.txs.txs[i]

    # -- chain -------------------------------------------------------------------------

    def record(self, h: Hash256) -> BlockRecord:
        return self.blocks[h]

    def committed_mask(self, h: Hash256, n: int) -> np.ndarray:
        mask = self.blocks[h].committed
        if len(mask) < n:
            mask = np.concatenate([mask, np.zeros(n - len(mask), dtype=bool)])
            self.blocks[h].committed = mask
        return mask

    def candidates(self, head: Hash256) -> np.ndarray:
        """Indices created at or before the head's timestamp and not yet on its chain."""
        got = self._candidates.get(head)
        if got is None:
            k = self.txs.prefix(self.blocks[head].block.header.timestamp)
            got = np.flatnonzero(~self.committed_mask(head, k)[:k])
            self._candidates[head] = got
        return got

    def pool_indices(self, head: Hash256, node: int, now: float) -> np.ndarray:
        """Everything this node holds at ``now`` that is not yet on ``head``'s chain."""
        k = self.txs.prefix(now)
        idx = np.flatnonzero(~self.committed_mask(head, k)[:k])
        return idx[self.arrival(idx, node) <= now]

    # -- body selection ------------------------------------------------------------

    def tso_body(self, parent: Hash256, idx: np.ndarray) -> PrePackedBody:
        idx = np.sort(idx)
        key = (parent, _digest(idx))
        got = self._tso.get(key)
        if got is None:
            rec = self.blocks[parent]
            pool = TxPool.for_state(rec.post_state)
            for i in idx:
                insert_entry(pool, PoolEntry(self.txs.txs[i], 0.0))
            got = tso_select(pool, rec.block.header.timestamp, self.scenario.gas_limit)
            self._tso[key] = got
        return got

    def prevalidate(self, parent: Hash256, ppb: PrePackedBody) -> ValidationInfo:
        key = (parent, ppb.body_hash)
        got = self._pre.get(key)
        if got is None:
            got = pre_validate(self.blocks[parent].post_state, ppb.txs)
            self._pre[key] = got
        return got

    def build_ppb(self, parent: Hash256, node: int, cutoff: float,
                  extra: np.ndarray | None = None) -> PpbBuild:
        cand = self.candidates(parent)
        idx = cand[self.arrival(cand, node) <= cutoff]
        if extra is not None and len(extra):
            idx = np.union1d(idx, extra)
        ppb = self.tso_body(parent, idx)
        return PpbBuild(parent, idx, ppb, self.prevalidate(parent, ppb))

    def pending_arrivals(self, parent: Hash256, node: int, after: float,
                         until: float) -> float | None:
        """Latest arrival at ``node`` in ``(after, until]`` of a candidate tx."""
        cand = self.candidates(parent)
        arr = self.arrival(cand, node)
        sel = arr[(arr > after) & (arr <= until)]
        return float(sel.max()) if len(sel) else None

    def admit(self, node: int, txs, limit: float, now: float) -> np.ndarray:
        """Indices of ``txs`` this node already holds with receive time <= ``limit``."""
        idx = self.tx_indices(txs)
        idx = idx[idx >= 0]
        if not len(idx):
            return idx
        arr = self.arrival(idx, node)
        return idx[(arr <= limit) & (arr <= now)]

    def legacy_body(self, head: Hash256, node: int, now: float) -> list[Transaction]:
        idx = self.pool_indices(head, node, now)
        rec = self.blocks[head]
        pool = TxPool.for_state(rec.post_state)
        arr = self.arrival(idx, node)
        local = (self.txs.kind[idx] == LOCAL) & (self.txs.origin[idx] == node)
        for i, ts, loc in zip(idx, arr, local):
            insert_entry(pool, PoolEntry(self.txs.txs[i], float(ts), bool(loc)))
        return legacy_select(pool, coinbase_of(node), self.scenario.gas_limit)

    # -- sealing and validation --------------------------------------------------------

    def _timestamp(self, parent: BlockHeader, now: float) -> int:
        return max(int(now), parent.timestamp + 1)

    def _register(self, block: Block, miner: int, now: float, post: WorldState,
                  n_u: int) -> BlockRecord:
        parent = self.blocks[block.header.parent_hash]
        tx_idx = self.tx_indices(block.body)
        n = max(len(self.txs), len(parent.committed))
        committed = self.committed_mask(parent.hash, n).copy()
        committed[tx_idx] = True
        rec = BlockRecord(block, miner, now, post, tx_idx, n_u, committed)
        self.blocks[block.hash] = rec
        for i in tx_idx:
            if self.txs.kind[i] == LOCAL:
                self.release_tx(int(i), now)
        return rec

    def seal_from_ppb(self, node: int, build: PpbBuild, now: float) -> BlockRecord:
        parent = self.blocks[build.parent]
        coinbase = coinbase_of(node)
        post = finalize_state(build.info, coinbase, parent.post_state)
        header = BlockHeader(parent.hash, parent.height + 1,
                             self._timestamp(parent.block.header, now), coinbase,
                             build.info.body_hash, post.root)
        block = Block(header, build.info.pruned_ppb)
        return self._register(block, node, now, post, build.n_u)

    def seal_legacy(self, node: int, head: Hash256, now: float) -> BlockRecord:
        parent = self.blocks[head]
        txs = self.legacy_body(head, node, now)
        block, post = seal_block(parent.block.header, parent.post_state, txs,
                                 coinbase_of(node), self._timestamp(parent.block.header, now))
        return self._register(block, node, now, post, 0)

    def validate_full(self, h: Hash256) -> bool:
        got = self._full_ok.get(h)
        if got is None:
            rec = self.blocks[h]
            parent = self.blocks[rec.parent]
            try:
                got = full_validate(parent.post_state, rec.block,
                                    parent.block.header) == rec.post_state
            except Exception:
                got = False
            self._full_ok[h] = got
        return got

    def validate_fast(self, h: Hash256, build: PpbBuild) -> bool:
        """Header-path validation against a node's pre-validated body."""
        got = self._fast_ok.get(h)
        if got is None:
            rec = self.blocks[h]
            try:
                got = finalize_validate(build.info, rec.block.header,
                                        self.blocks[rec.parent].post_state) == rec.post_state
            except Exception:
                got = False
            self._fast_ok[h] = got
        return got

    def missing(self, h: Hash256, node: int, now: float) -> list[Transaction]:
        rec = self.blocks[h]
        if not len(rec.tx_idx):
            return []
        arr = self.arrival(rec.tx_idx, node)
        return [self.txs.txs[i] for i in rec.tx_idx[arr > now]]

    def body_digest(self, txs) -> Hash256:
        return body_hash(txs)
