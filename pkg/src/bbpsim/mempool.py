"""Per-node transaction pool, the two block-body selection rules and the
pre-packed body merge used by PPB synchronization."""

from __future__ import annotations

import csv
import enum
import heapq
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from typing import IO

from .chain_types import AccountId, Block, Hash256, Transaction, WorldState, body_hash

DEFAULT_DELTA_MS = 1000


class InsertStatus(enum.Enum):
    INSERTED = "inserted"
    STALE = "stale"
    DUPLICATE = "duplicate"
    NONCE_TAKEN = "nonce_taken"

    def __bool__(self) -> bool:
        return self is InsertStatus.INSERTED


@dataclass(frozen=True)
class PoolEntry:
    tx: Transaction
    local_ts: float
    is_local: bool = False


@dataclass(frozen=True)
class PrePackedBody:
    txs: tuple[Transaction, ...]
    body_hash: Hash256
    threshold_T: float

    @classmethod
    def of(cls, txs: Iterable[Transaction], threshold_T: float) -> PrePackedBody:
        txs = tuple(txs)
        return cls(txs, body_hash(txs), threshold_T)

    def __len__(self) -> int:
        return len(self.txs)

    @property
    def gas(self) -> int:
        return sum(tx.gas_used for tx in self.txs)


class TxPool:
    """Ascending-nonce queue per account plus a hash index.

    ``committed`` holds the last executed nonce of each account as seen by the
    owning node's chain head; anything at or below it is stale.
    """

    def __init__(self, committed: Mapping[AccountId, int] | None = None):
        self.committed: dict[AccountId, int] = dict(committed or {})
        self.queues: dict[AccountId, list[PoolEntry]] = {}
        self.by_hash: dict[Hash256, PoolEntry] = {}

    @classmethod
    def from_entries(cls, entries: Iterable[PoolEntry],
                     committed: Mapping[AccountId, int] | None = None) -> TxPool:
        pool = cls(committed)
        for entry in entries:
            insert_entry(pool, entry)
        return pool

    @classmethod
    def for_state(cls, state: WorldState, entries: Iterable[PoolEntry] = ()) -> TxPool:
        pool = cls()
        pool.committed = _StateNonces(state)
        for entry in entries:
            insert_entry(pool, entry)
        return pool

    def __len__(self) -> int:
        return len(self.by_hash)

    def __contains__(self, h: Hash256) -> bool:
        return h in self.by_hash

    def __iter__(self) -> Iterator[PoolEntry]:
        for queue in self.queues.values():
            yield from queue

    def get(self, h: Hash256) -> PoolEntry | None:
        return self.by_hash.get(h)

    def committed_nonce(self, acct: AccountId) -> int:
        return self.committed.get(acct, 0)

    def remove(self, h: Hash256) -> PoolEntry | None:
        entry = self.by_hash.pop(h, None)
        if entry is None:
            return None
        queue = self.queues[entry.tx.sender]
        queue.remove(entry)
        if not queue:
            del self.queues[entry.tx.sender]
        return entry

    def check_invariants(self) -> None:
        seen = set()
        for acct, queue in self.queues.items():
            nonces = [e.tx.nonce for e in queue]
            assert queue, f"empty queue kept for {acct}"
            assert nonces == sorted(set(nonces)), f"queue of {acct} not strictly ascending"
            assert nonces[0] > self.committed_nonce(acct), f"stale entry kept for {acct}"
            for e in queue:
                assert e.tx.sender == acct
                assert e.tx.hash not in seen
                seen.add(e.tx.hash)
        assert seen == set(self.by_hash)

    def dump_csv(self, fh: IO[str]) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["tx_hash", "account", "nonce", "gas_price", "created_ts", "local_ts"])
        for acct in sorted(self.queues):
            for e in self.queues[acct]:
                writer.writerow([e.tx.hash.hex(), acct, e.tx.nonce, e.tx.gas_price,
                                 e.tx.created_ts, repr(float(e.local_ts))])


class _StateNonces(dict):
    """Committed-nonce table backed by a world state, overlaid by explicit updates."""

    def __init__(self, state: WorldState):
        super().__init__()
        self._state = state

    def get(self, acct, default=0):
        if acct in self:
            return self[acct]
        return self._state.nonce(acct)


def insert_entry(pool: TxPool, entry: PoolEntry) -> InsertStatus:
    tx = entry.tx
    if tx.hash in pool.by_hash:
        return InsertStatus.DUPLICATE
    if tx.nonce <= pool.committed_nonce(tx.sender):
        return InsertStatus.STALE
    queue = pool.queues.setdefault(tx.sender, [])
    # queues are short; a linear scan from the tail beats bisect on tuples
    pos = len(queue)
    while pos and queue[pos - 1].tx.nonce >= tx.nonce:
        pos -= 1
    if pos < len(queue) and queue[pos].tx.nonce == tx.nonce:
        return InsertStatus.NONCE_TAKEN
    queue.insert(pos, entry)
    pool.by_hash[tx.hash] = entry
    return InsertStatus.INSERTED


def insert_tx(pool: TxPool, tx: Transaction, local_ts: float,
              is_local: bool = False) -> InsertStatus:
    """Queue ``tx`` at its nonce position. Future nonces are kept but are never
    selectable until the gap closes."""
    return insert_entry(pool, PoolEntry(tx, local_ts, is_local))


def _hash_key(tx: Transaction) -> int:
    return -int.from_bytes(tx.hash, "big")


def _tso_order(pool: TxPool, gas_limit: int, threshold: float | None) -> list[Transaction]:
    heap = []
    for acct, queue in pool.queues.items():
        tx = queue[0].tx
        if tx.nonce != pool.committed_nonce(acct) + 1:
            continue
        if threshold is not None and tx.created_ts > threshold:
            continue
        heap.append((-tx.gas_price, _hash_key(tx), acct, 0))
    heapq.heapify(heap)
    selected = []
    gas = 0
    while heap:
        _, _, acct, idx = heap[0]
        queue = pool.queues[acct]
        tx = queue[idx].tx
        if gas + tx.gas_used > gas_limit:
            break
        heapq.heappop(heap)
        selected.append(tx)
        gas += tx.gas_used
        if idx + 1 < len(queue):
            nxt = queue[idx + 1].tx
            if nxt.nonce == tx.nonce + 1 and (threshold is None or nxt.created_ts <= threshold):
                heapq.heappush(heap, (-nxt.gas_price, _hash_key(nxt), acct, idx + 1))
    return selected


def tso_select(pool: TxPool, T: float, gas_limit: int) -> PrePackedBody:
    """Time-specific selection and ordering.

    Only transactions created at or before ``T`` are eligible. Among the
    current head of every account queue the highest gas price wins, ties go to
    the larger transaction hash, and selection stops at the first candidate
    that no longer fits in ``gas_limit``.
    """
    if gas_limit <= 0:
        raise ValueError("gas_limit must be positive")
    return PrePackedBody.of(_tso_order(pool, gas_limit, T), T)


def legacy_select(pool: TxPool, miner: AccountId, gas_limit: int,
                  min_tx_gas: int = 21000) -> list[Transaction]:
    """Miner-centric ordering: own transactions first, then gas price, then
    earliest local receive time. An account whose head does not fit is
    skipped; selection ends once less than ``min_tx_gas`` remains."""

    def key(entry: PoolEntry) -> tuple:
        local = entry.is_local or entry.tx.sender == miner
        return (0 if local else 1, -entry.tx.gas_price, entry.local_ts, _hash_key(entry.tx))

    heap = []
    for acct, queue in pool.queues.items():
        if queue[0].tx.nonce == pool.committed_nonce(acct) + 1:
            heap.append((key(queue[0]), acct, 0))
    heapq.heapify(heap)
    selected = []
    gas = 0
    while heap and gas_limit - gas >= min_tx_gas:
        _, acct, idx = heapq.heappop(heap)
        queue = pool.queues[acct]
        tx = queue[idx].tx
        if gas + tx.gas_used > gas_limit:
            continue
        selected.append(tx)
        gas += tx.gas_used
        if idx + 1 < len(queue) and queue[idx + 1].tx.nonce == tx.nonce + 1:
            heapq.heappush(heap, (key(queue[idx + 1]), acct, idx + 1))
    return selected


def _sweep(pool: TxPool, acct: AccountId) -> None:
    queue = pool.queues.get(acct)
    if not queue:
        return
    floor = pool.committed_nonce(acct)
    keep = [e for e in queue if e.tx.nonce > floor]
    for e in queue:
        if e.tx.nonce <= floor:
            pool.by_hash.pop(e.tx.hash, None)
    if keep:
        pool.queues[acct] = keep
    else:
        del pool.queues[acct]


def reset_pool(pool: TxPool, committed_block: Block) -> TxPool:
    """Drop the block's transactions and everything made stale by it."""
    touched = set()
    for tx in committed_block.body:
        pool.remove(tx.hash)
        if tx.nonce > pool.committed_nonce(tx.sender):
            pool.committed[tx.sender] = tx.nonce
        touched.add(tx.sender)
    for acct in sorted(touched):
        _sweep(pool, acct)
    return pool


def rebase_pool(pool: TxPool, state: WorldState) -> TxPool:
    """Re-derive committed nonces from ``state`` (after a reorg) and sweep."""
    pool.committed = {acct: state.nonce(acct) for acct in pool.queues}
    for acct in list(pool.queues):
        _sweep(pool, acct)
    return pool


def merge_ppb(local: PrePackedBody, remote_txs: Sequence[Transaction], pool: TxPool,
              T: float, delta: float = DEFAULT_DELTA_MS, gas_limit: int = 30_000_000
              ) -> PrePackedBody:
    """Union a neighbour's body into ``local``.

    A remote transaction is admitted only if this node already holds it and
    received it no later than ``T + delta``; the pool's own copy is used, never
    the remote one. The union is re-ordered with the TSO rules.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    have = {tx.hash for tx in local.txs}
    extra: dict[Hash256, PoolEntry] = {}
    for tx in remote_txs:
        if tx.hash in have or tx.hash in extra:
            continue
        entry = pool.get(tx.hash)
        if entry is not None and entry.local_ts <= T + delta:
            extra[tx.hash] = entry
    if not extra:
        return local
    entries = [pool.get(tx.hash) or PoolEntry(tx, tx.created_ts) for tx in local.txs]
    entries.extend(extra.values())
    union = TxPool()
    union.committed = pool.committed
    for entry in entries:
        insert_entry(union, entry)
    return PrePackedBody.of(_tso_order(union, gas_limit, None), T)
