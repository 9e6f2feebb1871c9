"""Transaction workload: Poisson arrivals plus late, local and withheld
transactions, materialized lazily in fixed time windows."""

from __future__ import annotations

import heapq
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..chain_types import COINBASE_PLACEHOLDER, Transaction, WorldState
from .config import WorkloadConfig
from .mining import MiningSchedule

NORMAL, LATE, LOCAL, WITHHELD = 0, 1, 2, 3
KIND_NAMES = ("normal", "late", "local", "withheld")

GAS_PER_TX = 21_000
INITIAL_BALANCE = 10**30
SPECIAL_ACCOUNTS = 2_000


@dataclass(frozen=True)
class _Pending:
    created: int
    seq: int
    kind: int
    origin: int
    release: float
    sender: int
    recipient: int
    gas_price: int
    amount: int

    def __lt__(self, other: _Pending) -> bool:
        return (self.created, self.seq) < (other.created, other.seq)


class TxTable:
    """Every transaction of a run, in creation order, with per-tx arrays the
    simulator reads vectorized."""

    def __init__(self) -> None:
        self.txs: list[Transaction] = []
        self.index: dict[bytes, int] = {}
        self.created = np.zeros(0)
        self.release = np.zeros(0)
        self.origin = np.zeros(0, dtype=np.int64)
        self.kind = np.zeros(0, dtype=np.int8)

    def __len__(self) -> int:
        return len(self.txs)

    def append(self, items: Sequence[tuple[Transaction, float, int, int]]) -> None:
        if not items:
            return
        base = len(self.txs)
        for i, (tx, _, _, _) in enumerate(items):
            self.txs.append(tx)
            self.index[tx.hash] = base + i
        self.created = np.concatenate([self.created, [float(t.created_ts) for t, *_ in items]])
        self.release = np.concatenate([self.release, [r for _, r, _, _ in items]])
        self.origin = np.concatenate([self.origin, np.array([o for *_, o, _ in items],
                                                            dtype=np.int64)])
        self.kind = np.concatenate([self.kind, np.array([k for *_, k in items], dtype=np.int8)])

    def prefix(self, t: float) -> int:
        """Number of transactions created at or before ``t``."""
        return int(np.searchsorted(self.created, t, side="right"))

    def arrival(self, idx: np.ndarray, node: int, delays: np.ndarray) -> np.ndarray:
        """Receive time of ``idx`` at ``node`` under flood relay (``inf`` if never)."""
        out = self.release[idx] + delays[self.origin[idx], node]
        own = self.origin[idx] == node
        if own.any():
            out[own] = self.created[idx][own]
        return out


class Workload:
    def __init__(self, cfg: WorkloadConfig, rate_per_ms: float, n_nodes: int,
                 miners: Sequence[int], schedule: MiningSchedule, start_ms: float,
                 window_ms: float, seed_seq: np.random.SeedSequence):
        self.cfg = cfg
        self.rate = rate_per_ms
        self.n_nodes = n_nodes
        self.miners = list(miners)
        self.schedule = schedule
        # integer-aligned windows keep floor(created) consistent with coverage
        self.window = float(max(1, math.ceil(window_ms)))
        self.table = TxTable()
        streams = seed_seq.spawn(9)
        (self._r_count, self._r_time, self._r_sender, self._r_recipient, self._r_coinbase,
         self._r_gas, self._r_amount, self._r_kind, self._r_origin) = (
            np.random.default_rng(s) for s in streams)
        self._next_window = float(math.floor(start_ms))
        self._covered = self._next_window - 1
        self._nonces: dict[int, int] = {}
        self._pending: list[_Pending] = []
        self._seq = 0
        self._special_next = 0

    # accounts ------------------------------------------------------------------

    @property
    def special_base(self) -> int:
        return self.cfg.n_accounts + 1

    def genesis_state(self) -> WorldState:
        n = self.cfg.n_accounts + SPECIAL_ACCOUNTS
        return WorldState({a: (0, INITIAL_BALANCE) for a in range(1, n + 1)})

    def _next_nonce(self, sender: int) -> int:
        n = self._nonces.get(sender, 0) + 1
        self._nonces[sender] = n
        return n

    # generation --------------------------------------------------------------------

    def _generate_window(self) -> None:
        lo = self._next_window
        hi = lo + self.window
        self._next_window = hi
        count = int(self._r_count.poisson(self.rate * self.window)) if self.rate > 0 else 0
        times = np.sort(self._r_time.uniform(lo, hi, count))
        senders = self._r_sender.integers(1, self.cfg.n_accounts + 1, count)
        recips = self._r_recipient.integers(1, self.cfg.n_accounts, count)
        to_cb = self._r_coinbase.random(count) < self.cfg.coinbase_fraction
        gas = self._r_gas.integers(1, self.cfg.gas_price_max + 1, count)
        amount = self._r_amount.integers(1, 1_000_000, count)
        kind_u = self._r_kind.random(count)
        origin_u = self._r_origin.random((count, 2))
        c = self.cfg
        for i in range(count):
            t = float(times[i])
            u = kind_u[i]
            kind = (LATE if u < c.late_fraction else
                    LOCAL if u < c.late_fraction + c.local_fraction else
                    WITHHELD if u < c.late_fraction + c.local_fraction + c.withheld_fraction else
                    NORMAL)
            if kind == NORMAL:
                sender = int(senders[i])
                origin = min(int(origin_u[i, 0] * self.n_nodes), self.n_nodes - 1)
                created = math.floor(t)
                release = float(created)
            else:
                sender = self.special_base + self._special_next % SPECIAL_ACCOUNTS
                self._special_next += 1
                if kind == LATE:
                    mine_t, origin = self.schedule.next_after(t)
                    created = math.floor(max(t, mine_t - origin_u[i, 1] * c.late_window_ms))
                    release = created + c.late_release_delay_ms
                else:
                    origin = self.miners[min(int(origin_u[i, 0] * len(self.miners)),
                                             len(self.miners) - 1)]
                    created = math.floor(t)
                    release = math.inf
            recipient = COINBASE_PLACEHOLDER if to_cb[i] else int(recips[i])
            if recipient == sender:
                recipient = self.cfg.n_accounts
            heapq.heappush(self._pending, _Pending(
                created, self._seq, kind, origin, release, sender, recipient,
                int(gas[i]), int(amount[i])))
            self._seq += 1

    def ensure(self, until_ms: float) -> None:
        """Materialize every transaction created at or before ``until_ms``."""
        if until_ms <= self._covered:
            return
        while self._next_window <= until_ms:
            self._generate_window()
        items = []
        while self._pending and self._pending[0].created <= until_ms:
            p = heapq.heappop(self._pending)
            # nonces follow creation order per sender
            tx = Transaction(p.sender, p.recipient, self._next_nonce(p.sender), p.gas_price,
                             GAS_PER_TX, p.amount, p.created, p.origin, p.kind == LOCAL)
            items.append((tx, p.release, p.origin, p.kind))
        self.table.append(items)
        self._covered = until_ms
