"""Wire messages and their modelled byte sizes.

Block-carrying messages also carry ``hop``, the number of relays since the
miner. It is simulation bookkeeping and is not counted in the size.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..chain_types import Block, BlockHeader, Hash256, Transaction
from ..netsim.config import MessageSizes


@dataclass(frozen=True, slots=True)
class NewTx:
    tx: Transaction

    def size(self, s: MessageSizes) -> int:
        return s.s_t


@dataclass(frozen=True, slots=True)
class TxHashAnnounce:
    tx_hash: Hash256

    def size(self, s: MessageSizes) -> int:
        return s.s_hash


@dataclass(frozen=True, slots=True)
class GetTx:
    tx_hash: Hash256

    def size(self, s: MessageSizes) -> int:
        return s.s_hash


@dataclass(frozen=True, slots=True)
class CheckSync:
    parent: Hash256
    body_hash: Hash256

    def size(self, s: MessageSizes) -> int:
        return s.s_hash


@dataclass(frozen=True, slots=True)
class PpbPayload:
    parent: Hash256
    txs: tuple[Transaction, ...]

    def size(self, s: MessageSizes) -> int:
        return s.s_hash + len(self.txs) * s.s_t


@dataclass(frozen=True, slots=True)
class BlockHeaderMsg:
    header: BlockHeader
    hop: int = 1

    def size(self, s: MessageSizes) -> int:
        return s.s_h


@dataclass(frozen=True, slots=True)
class FullBlock:
    block: Block
    hop: int = 1

    def size(self, s: MessageSizes) -> int:
        return s.s_h + len(self.block.body) * s.s_t


@dataclass(frozen=True, slots=True)
class Inv:
    block_hash: Hash256

    def size(self, s: MessageSizes) -> int:
        return s.s_hash


@dataclass(frozen=True, slots=True)
class GetData:
    block_hash: Hash256
    compact: bool = False

    def size(self, s: MessageSizes) -> int:
        return s.s_hash


@dataclass(frozen=True, slots=True)
class BlockHashAnnounce:
    block_hash: Hash256

    def size(self, s: MessageSizes) -> int:
        return s.s_hash


@dataclass(frozen=True, slots=True)
class GetHeader:
    block_hash: Hash256

    def size(self, s: MessageSizes) -> int:
        return s.s_hash


@dataclass(frozen=True, slots=True)
class HeaderResponse:
    header: BlockHeader

    def size(self, s: MessageSizes) -> int:
        return s.s_h


@dataclass(frozen=True, slots=True)
class GetBody:
    block_hash: Hash256

    def size(self, s: MessageSizes) -> int:
        return s.s_hash


@dataclass(frozen=True, slots=True)
class BodyResponse:
    block_hash: Hash256
    txs: tuple[Transaction, ...]
    hop: int = 1

    def size(self, s: MessageSizes) -> int:
        return len(self.txs) * s.s_t


@dataclass(frozen=True, slots=True)
class CompactBlock:
    header: BlockHeader
    tx_hashes: tuple[Hash256, ...]
    hop: int = 1

    def size(self, s: MessageSizes) -> int:
        return s.s_h + len(self.tx_hashes) * s.s_hash


@dataclass(frozen=True, slots=True)
class GetMissedTxs:
    block_hash: Hash256
    tx_hashes: tuple[Hash256, ...]

    def size(self, s: MessageSizes) -> int:
        return max(1, len(self.tx_hashes)) * s.s_hash


@dataclass(frozen=True, slots=True)
class MissedTxs:
    block_hash: Hash256
    txs: tuple[Transaction, ...]

    def size(self, s: MessageSizes) -> int:
        return len(self.txs) * s.s_t


#: Messages whose bytes count as block-dissemination traffic.
BLOCK_TRAFFIC = frozenset({
    "BlockHeaderMsg", "FullBlock", "Inv", "GetData", "BlockHashAnnounce", "GetHeader",
    "HeaderResponse", "GetBody", "BodyResponse", "CompactBlock", "GetMissedTxs", "MissedTxs",
})
SYNC_TRAFFIC = frozenset({"CheckSync", "PpbPayload"})
TX_TRAFFIC = frozenset({"NewTx", "TxHashAnnounce", "GetTx"})


def type_name(msg: object) -> str:
    return type(msg).__name__
