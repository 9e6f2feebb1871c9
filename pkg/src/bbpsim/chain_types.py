"""Value types shared by every part of the simulator, plus their canonical
byte encodings and hash commitments.

The byte layout is documented in ``docs/serialization.md``. All integers are
big-endian and fixed width; account ids are unsigned 256-bit integers.
"""

from __future__ import annotations

import hashlib
import struct
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field

Hash256 = bytes
AccountId = int

UINT256_MAX = (1 << 256) - 1

#: Recipient value meaning "whoever mines the block". Encodes as 32 x 0xFF.
COINBASE_PLACEHOLDER: AccountId = UINT256_MAX
#: Virtual account that holds fees of pre-executed transactions until the
#: coinbase is known. Never appears in a transaction.
ESCROW: AccountId = UINT256_MAX - 1

EMPTY_HASH: Hash256 = hashlib.sha256(b"").digest()
ZERO_HASH: Hash256 = bytes(32)

TX_PREIMAGE_SIZE = 144
TX_WIRE_SIZE = 157
HEADER_SIZE = 144


def _u256(value: int) -> bytes:
    return value.to_bytes(32, "big")


@dataclass(frozen=True)
class Transaction:
    sender: AccountId
    recipient: AccountId
    nonce: int
    gas_price: int
    gas_used: int
    amount: int
    created_ts: int = 0
    origin_node: int = 0
    is_local_only: bool = False
    hash: Hash256 = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "hash", hashlib.sha256(self.preimage()).digest())

    def preimage(self) -> bytes:
        """Bytes covered by the transaction hash (no timestamp, no origin)."""
        return b"".join(
            (
                _u256(self.sender),
                _u256(self.recipient),
                struct.pack(">Q", self.nonce),
                _u256(self.gas_price),
                struct.pack(">Q", self.gas_used),
                _u256(self.amount),
            )
        )

    @property
    def pays_coinbase(self) -> bool:
        return self.recipient == COINBASE_PLACEHOLDER

    @property
    def accessed(self) -> frozenset[AccountId]:
        return frozenset((self.sender, self.recipient))

    @property
    def fee(self) -> int:
        return self.gas_price * self.gas_used

    def encode(self) -> bytes:
        return self.preimage() + struct.pack(
            ">qI?", self.created_ts, self.origin_node, self.is_local_only
        )

    @classmethod
    def decode(cls, data: bytes) -> Transaction:
        if len(data) != TX_WIRE_SIZE:
            raise ValueError(f"transaction encoding must be {TX_WIRE_SIZE} bytes, got {len(data)}")
        sender = int.from_bytes(data[0:32], "big")
        recipient = int.from_bytes(data[32:64], "big")
        (nonce,) = struct.unpack(">Q", data[64:72])
        gas_price = int.from_bytes(data[72:104], "big")
        (gas_used,) = struct.unpack(">Q", data[104:112])
        amount = int.from_bytes(data[112:144], "big")
        created_ts, origin_node, is_local = struct.unpack(">qI?", data[144:157])
        return cls(sender, recipient, nonce, gas_price, gas_used, amount,
                   created_ts, origin_node, is_local)


def tx_hash(tx: Transaction) -> Hash256:
    return tx.hash


def body_hash(txs: Iterable[Transaction]) -> Hash256:
    """Order-sensitive commitment over a list of transactions."""
    return hashlib.sha256(b"".join(tx.hash for tx in txs)).digest()


@dataclass(frozen=True)
class BlockHeader:
    parent_hash: Hash256
    number: int
    timestamp: int
    coinbase: AccountId
    txs_hash: Hash256
    state_root: Hash256
    hash: Hash256 = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "hash", hashlib.sha256(self.encode()).digest())

    def encode(self) -> bytes:
        return b"".join(
            (
                self.parent_hash,
                struct.pack(">Qq", self.number, self.timestamp),
                _u256(self.coinbase),
                self.txs_hash,
                self.state_root,
            )
        )

    @classmethod
    def decode(cls, data: bytes) -> BlockHeader:
        if len(data) != HEADER_SIZE:
            raise ValueError(f"header encoding must be {HEADER_SIZE} bytes, got {len(data)}")
        number, timestamp = struct.unpack(">Qq", data[32:48])
        return cls(
            parent_hash=data[0:32],
            number=number,
            timestamp=timestamp,
            coinbase=int.from_bytes(data[48:80], "big"),
            txs_hash=data[80:112],
            state_root=data[112:144],
        )


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    body: tuple[Transaction, ...]

    @property
    def hash(self) -> Hash256:
        return self.header.hash

    @property
    def number(self) -> int:
        return self.header.number

    def encode(self) -> bytes:
        parts = [self.header.encode(), struct.pack(">I", len(self.body))]
        parts.extend(tx.encode() for tx in self.body)
        return b"".join(parts)

    @classmethod
    def decode(cls, data: bytes) -> Block:
        header = BlockHeader.decode(data[:HEADER_SIZE])
        (count,) = struct.unpack(">I", data[HEADER_SIZE:HEADER_SIZE + 4])
        expected = HEADER_SIZE + 4 + count * TX_WIRE_SIZE
        if len(data) != expected:
            raise ValueError(f"block encoding length {len(data)} != {expected}")
        off = HEADER_SIZE + 4
        body = tuple(
            Transaction.decode(data[off + i * TX_WIRE_SIZE: off + (i + 1) * TX_WIRE_SIZE])
            for i in range(count)
        )
        return cls(header, body)


class WorldState(Mapping):
    """Immutable map ``account -> (nonce, balance)``.

    Accounts with nonce 0 and balance 0 are never stored, so "absent" and
    "empty" are the same state and hash identically.
    """

    __slots__ = ("_accounts", "_root")

    def __init__(self, accounts: Mapping[AccountId, tuple[int, int]] | None = None):
        clean = {}
        for acct, (nonce, balance) in (accounts or {}).items():
            if nonce < 0 or balance < 0:
                raise ValueError(f"negative nonce/balance for account {acct}")
            if nonce or balance:
                clean[acct] = (nonce, balance)
        self._accounts = clean
        self._root: Hash256 | None = None

    @classmethod
    def _adopt(cls, accounts: dict[AccountId, tuple[int, int]]) -> WorldState:
        # caller guarantees the dict is clean and will not be mutated again
        state = cls.__new__(cls)
        state._accounts = accounts
        state._root = None
        return state

    def __getitem__(self, acct: AccountId) -> tuple[int, int]:
        return self._accounts[acct]

    def __iter__(self) -> Iterator[AccountId]:
        return iter(self._accounts)

    def __len__(self) -> int:
        return len(self._accounts)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, WorldState):
            return self._accounts == other._accounts
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.root)

    def __repr__(self) -> str:
        return f"WorldState({len(self._accounts)} accounts, root={self.root.hex()[:12]})"

    def nonce(self, acct: AccountId) -> int:
        entry = self._accounts.get(acct)
        return entry[0] if entry else 0

    def balance(self, acct: AccountId) -> int:
        entry = self._accounts.get(acct)
        return entry[1] if entry else 0

    def mutable_copy(self) -> dict[AccountId, tuple[int, int]]:
        return dict(self._accounts)

    @property
    def root(self) -> Hash256:
        if self._root is None:
            self._root = state_root(self)
        return self._root


def state_root(state: Mapping[AccountId, tuple[int, int]]) -> Hash256:
    """SHA-256 over ``account | nonce | balance`` records sorted by account."""
    h = hashlib.sha256()
    for acct in sorted(state):
        nonce, balance = state[acct]
        h.update(_u256(acct))
        h.update(struct.pack(">Q", nonce))
        h.update(_u256(balance))
    return h.digest()
