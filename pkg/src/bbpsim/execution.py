"""Transfer-ledger execution: single transactions, the coinbase-dependent
split of a pre-packed body, pre-validation and both block validation paths.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from .chain_types import (
    COINBASE_PLACEHOLDER,
    ESCROW,
    AccountId,
    Block,
    BlockHeader,
    Hash256,
    Transaction,
    WorldState,
    body_hash,
)

BAD_NONCE = "bad nonce"
INSUFFICIENT_BALANCE = "insufficient balance"


@dataclass(frozen=True)
class ExecResult:
    state: WorldState
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


class ValidationError(Exception):
    """Base class for a block that cannot be accepted on the path tried."""

    kind = "invalid"


class BodyMismatch(ValidationError):
    """Local pre-packed body differs from the header commitment; fetch the full block."""

    kind = "body"


class StateRootMismatch(ValidationError):
    kind = "state_root"


class HeaderInvalid(ValidationError):
    kind = "header"


class ExecutionFailed(ValidationError):
    kind = "execution"


def _check_coinbase(coinbase: AccountId) -> None:
    if coinbase in (COINBASE_PLACEHOLDER, ESCROW):
        raise ValueError("coinbase must be a concrete account")


def _apply(accounts: dict, tx: Transaction, coinbase: AccountId) -> str | None:
    """Apply ``tx`` to a mutable account dict in place; return a failure reason or None."""
    sender = tx.sender
    nonce, balance = accounts.get(sender, (0, 0))
    if tx.nonce != nonce + 1:
        return BAD_NONCE
    fee = tx.gas_price * tx.gas_used
    cost = tx.amount + fee
    if balance < cost:
        return INSUFFICIENT_BALANCE
    accounts[sender] = (nonce + 1, balance - cost)
    recipient = coinbase if tx.recipient == COINBASE_PLACEHOLDER else tx.recipient
    if tx.amount:
        rn, rb = accounts.get(recipient, (0, 0))
        accounts[recipient] = (rn, rb + tx.amount)
    if fee:
        cn, cb = accounts.get(coinbase, (0, 0))
        accounts[coinbase] = (cn, cb + fee)
    return None


def _drop_empty(accounts: dict) -> dict:
    for acct in [a for a, v in accounts.items() if v == (0, 0)]:
        del accounts[acct]
    return accounts


def apply_tx(state: WorldState, tx: Transaction, coinbase: AccountId) -> ExecResult:
    _check_coinbase(coinbase)
    accounts = state.mutable_copy()
    error = _apply(accounts, tx, coinbase)
    if error:
        return ExecResult(state, error)
    return ExecResult(WorldState._adopt(_drop_empty(accounts)))


def execute_sequence(state: WorldState, txs: Sequence[Transaction],
                     coinbase: AccountId) -> WorldState:
    """Execute ``txs`` in order; raise :class:`ExecutionFailed` on the first failure."""
    _check_coinbase(coinbase)
    accounts = state.mutable_copy()
    for i, tx in enumerate(txs):
        error = _apply(accounts, tx, coinbase)
        if error:
            raise ExecutionFailed(f"tx {i} ({tx.hash.hex()[:12]}): {error}")
    return WorldState._adopt(_drop_empty(accounts))


def intersects(a: Transaction, b: Transaction) -> bool:
    return bool(a.accessed & b.accessed)


def _dependent_flags(ppb: Sequence[Transaction]) -> list[bool]:
    tainted: set[AccountId] = set()
    in_chain = [False] * len(ppb)
    # account -> indices of transactions touching it, for the closure walk
    touching: dict[AccountId, list[int]] = {}
    frontier: list[AccountId] = []
    for i, tx in enumerate(ppb):
        for acct in (tx.sender, tx.recipient):
            touching.setdefault(acct, []).append(i)
        if tx.recipient == COINBASE_PLACEHOLDER:
            in_chain[i] = True
    for i, flagged in enumerate(in_chain):
        if flagged:
            for acct in (ppb[i].sender, ppb[i].recipient):
                if acct not in tainted:
                    tainted.add(acct)
                    frontier.append(acct)
    while frontier:
        acct = frontier.pop()
        for i in touching[acct]:
            if not in_chain[i]:
                in_chain[i] = True
                for other in (ppb[i].sender, ppb[i].recipient):
                    if other not in tainted:
                        tainted.add(other)
                        frontier.append(other)
    return in_chain


def build_unexecutable_seq(
    ppb: Sequence[Transaction],
) -> tuple[list[Transaction], list[Transaction]]:
    """Split ``ppb`` into (coinbase-dependent chain, independently executable rest).

    The dependent chain is the union of the intersection-graph components that
    contain a coinbase-paying transaction. Both outputs keep ``ppb`` order.
    """
    in_chain = _dependent_flags(ppb)
    u_g = [tx for tx, flag in zip(ppb, in_chain) if flag]
    executable = [tx for tx, flag in zip(ppb, in_chain) if not flag]
    return u_g, executable


@dataclass(frozen=True)
class ValidationInfo:
    body_hash: Hash256
    unexecutable: tuple[Transaction, ...]
    intermediate_state: WorldState
    pruned_ppb: tuple[Transaction, ...]
    base_root: Hash256

    @property
    def n_unexecutable(self) -> int:
        return len(self.unexecutable)


def pre_validate(base_state: WorldState, ppb: Sequence[Transaction]) -> ValidationInfo:
    """Pre-execute everything that does not depend on the coinbase.

    Fees of pre-executed transactions accrue to :data:`ESCROW`. Transactions
    that fail are dropped from the body; the dependent chain is fixed before
    execution starts and is never re-derived.
    """
    in_chain = _dependent_flags(ppb)
    accounts = base_state.mutable_copy()
    pruned = []
    for tx, dependent in zip(ppb, in_chain):
        if dependent or _apply(accounts, tx, ESCROW) is None:
            pruned.append(tx)
    return ValidationInfo(
        body_hash=body_hash(pruned),
        unexecutable=tuple(tx for tx, dep in zip(ppb, in_chain) if dep),
        intermediate_state=WorldState._adopt(_drop_empty(accounts)),
        pruned_ppb=tuple(pruned),
        base_root=base_state.root,
    )


def _coinbase_touched(txs: Sequence[Transaction], coinbase: AccountId) -> bool:
    return any(tx.sender == coinbase or tx.recipient == coinbase for tx in txs)


def finalize_state(info: ValidationInfo, coinbase: AccountId,
                   base_state: WorldState) -> WorldState:
    """Final state of ``info.pruned_ppb`` once the coinbase is known.

    If the coinbase account is itself touched by a body transaction, its
    balance could gate a transfer differently under the split order, so the
    whole body is re-executed sequentially instead.
    """
    _check_coinbase(coinbase)
    if _coinbase_touched(info.pruned_ppb, coinbase):
        return execute_sequence(base_state, info.pruned_ppb, coinbase)
    accounts = info.intermediate_state.mutable_copy()
    escrowed = accounts.pop(ESCROW, (0, 0))[1]
    if escrowed:
        cn, cb = accounts.get(coinbase, (0, 0))
        accounts[coinbase] = (cn, cb + escrowed)
    for i, tx in enumerate(info.unexecutable):
        error = _apply(accounts, tx, coinbase)
        if error:
            raise ExecutionFailed(f"unexecutable tx {i}: {error}")
    return WorldState._adopt(_drop_empty(accounts))


def finalize_validate(info: ValidationInfo, header: BlockHeader,
                      base_state: WorldState) -> WorldState:
    """Fast validation of a header against locally pre-validated body.

    Raises :class:`BodyMismatch` before doing any execution if the body
    commitments differ; :class:`StateRootMismatch` if the resulting state
    disagrees with the header.
    """
    if info.body_hash != header.txs_hash:
        raise BodyMismatch("local body hash differs from header txs_hash")
    final = finalize_state(info, header.coinbase, base_state)
    if final.root != header.state_root:
        raise StateRootMismatch("state root differs from header")
    return final


def check_header(header: BlockHeader, parent: BlockHeader | None) -> None:
    if parent is None:
        return
    if header.parent_hash != parent.hash:
        raise HeaderInvalid("parent hash does not link")
    if header.number != parent.number + 1:
        raise HeaderInvalid("block number is not parent + 1")
    if header.timestamp <= parent.timestamp:
        raise HeaderInvalid("timestamp not later than parent")


def full_validate(base_state: WorldState, block: Block,
                  parent: BlockHeader | None = None) -> WorldState:
    """Legacy validation: header checks, sequential execution, root compare."""
    header = block.header
    check_header(header, parent)
    if body_hash(block.body) != header.txs_hash:
        raise HeaderInvalid("txs_hash does not match body")
    if header.coinbase in (COINBASE_PLACEHOLDER, ESCROW):
        raise HeaderInvalid("coinbase is a reserved account")
    final = execute_sequence(base_state, block.body, header.coinbase)
    if final.root != header.state_root:
        raise StateRootMismatch("state root differs from header")
    return final


def seal_block(parent: BlockHeader, base_state: WorldState, txs: Sequence[Transaction],
               coinbase: AccountId, timestamp: int) -> tuple[Block, WorldState]:
    """Build an honest block on ``parent``; ``txs`` must all execute."""
    final = execute_sequence(base_state, txs, coinbase)
    header = BlockHeader(parent.hash, parent.number + 1, timestamp, coinbase,
                         body_hash(txs), final.root)
    return Block(header, tuple(txs)), final
