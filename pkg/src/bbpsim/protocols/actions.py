"""Outputs of protocol handlers. The engine interprets them; handlers never
touch the clock, the network or the trace directly."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from ..chain_types import Hash256

FAST, FULL, HASH, MINED = "fast", "full", "hash", "mined"


@dataclass(frozen=True, slots=True)
class Send:
    dst: int
    msg: Any


@dataclass(frozen=True, slots=True)
class SetTimer:
    """Call the node's ``on_timer(key, data)`` after ``delay`` ms."""

    delay: float
    key: str
    data: Any = None


@dataclass(frozen=True, slots=True)
class Commit:
    """The node validated ``block_hash`` and holds it on its chain."""

    block_hash: Hash256
    path: str              # FAST, FULL, HASH or MINED
    hop: int
    via: int               # neighbour that delivered the block, -1 for the miner
    processing_ms: float


@dataclass(frozen=True, slots=True)
class SyncStatus:
    """First sight of a block at a node: did its own body already match?"""

    block_hash: Hash256
    synced: bool


@dataclass(frozen=True, slots=True)
class Reconstruction:
    """A compact block was rebuilt from the local pool, missing ``n_missing``."""

    block_hash: Hash256
    n_missing: int
    n_txs: int


@dataclass(frozen=True, slots=True)
class Invalid:
    block_hash: Hash256
    reason: str
