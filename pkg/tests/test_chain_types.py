import csv
import hashlib
import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bbpsim.chain_types import (
    COINBASE_PLACEHOLDER,
    EMPTY_HASH,
    Block,
    BlockHeader,
    Transaction,
    WorldState,
    body_hash,
    state_root,
    tx_hash,
)

from conftest import A, B, mk_tx

GOLDEN = Path(__file__).parent / "data" / "golden_hashes.csv"


def golden():
    with GOLDEN.open() as fh:
        return {row["name"]: row for row in csv.DictReader(fh)}


def test_hash_ignores_timestamp_and_origin():
    t1 = mk_tx(created_ts=10, origin_node=3)
    t2 = mk_tx(created_ts=99_999, origin_node=7)
    assert tx_hash(t1) == tx_hash(t2)


def test_hash_depends_on_amount():
    assert tx_hash(mk_tx(amount=1)) != tx_hash(mk_tx(amount=2))


def test_golden_transactions():
    g = golden()
    tx_a = Transaction(1, 2, 1, 20_000_000_000, 21_000, 10**18)
    tx_b = Transaction(3, COINBASE_PLACEHOLDER, 7, 5, 21_000, 2)
    assert tx_a.preimage().hex() == g["transfer_1_to_2"]["input_hex"]
    assert tx_a.hash.hex() == g["transfer_1_to_2"]["digest_hex"]
    assert tx_b.preimage()[32:64] == b"\xff" * 32
    assert tx_b.hash.hex() == g["coinbase_tip_3"]["digest_hex"]
    assert body_hash([tx_a, tx_b]).hex() == g["tx_a_then_tx_b"]["digest_hex"]


def test_golden_state_and_header():
    g = golden()
    state = WorldState({0xB: (0, 50), 0xA: (1, 100)})
    assert state.root.hex() == g["A_1_100__B_0_50"]["digest_hex"]
    header = BlockHeader(bytes(32), 1, 14_000, 0xC0FFEE,
                         bytes.fromhex(g["tx_a_then_tx_b"]["digest_hex"]), state.root)
    assert header.encode().hex() == g["block_1"]["input_hex"]
    assert header.hash.hex() == g["block_1"]["digest_hex"]


def test_empty_commitments():
    assert body_hash([]) == hashlib.sha256(b"").digest() == EMPTY_HASH
    assert state_root(WorldState()) == EMPTY_HASH
    assert golden()["empty"]["digest_hex"] == EMPTY_HASH.hex()


def test_body_hash_is_order_sensitive():
    t1, t2 = mk_tx(nonce=1), mk_tx(nonce=2)
    assert body_hash([t1, t2]) != body_hash([t2, t1])


def test_state_root_ignores_insertion_order():
    rng = random.Random(5)
    for _ in range(1000):
        items = [(rng.randrange(1, 10**6), (rng.randrange(5), rng.randrange(1, 10**9)))
                 for _ in range(rng.randrange(0, 12))]
        shuffled = items[:]
        rng.shuffle(shuffled)
        assert WorldState(dict(items)).root == WorldState(dict(shuffled)).root


def test_empty_accounts_are_dropped():
    assert WorldState({A: (0, 0), B: (0, 5)}) == WorldState({B: (0, 5)})
    with pytest.raises(ValueError):
        WorldState({A: (0, -1)})


accounts = st.integers(min_value=0, max_value=(1 << 256) - 1)
u64 = st.integers(min_value=0, max_value=(1 << 64) - 1)
u256 = st.integers(min_value=0, max_value=(1 << 256) - 1)
txs = st.builds(Transaction, accounts, accounts, u64, u256, u64, u256,
                st.integers(min_value=-(1 << 62), max_value=1 << 62),
                st.integers(min_value=0, max_value=(1 << 32) - 1), st.booleans())


@given(txs)
def test_transaction_roundtrip(tx):
    assert Transaction.decode(tx.encode()) == tx


@given(st.lists(txs, max_size=4), st.binary(min_size=32, max_size=32), u64,
       st.integers(min_value=0, max_value=1 << 62), accounts)
@settings(max_examples=50)
def test_block_roundtrip(body, parent, number, ts, coinbase):
    header = BlockHeader(parent, number, ts, coinbase, body_hash(body), EMPTY_HASH)
    block = Block(header, tuple(body))
    assert BlockHeader.decode(header.encode()) == header
    assert Block.decode(block.encode()) == block


@given(st.lists(txs, min_size=2, max_size=6, unique_by=lambda t: t.hash), st.randoms())
def test_permutation_changes_body_hash(body, rnd):
    perm = body[:]
    rnd.shuffle(perm)
    same = [a.hash for a in perm] == [b.hash for b in body]
    assert (body_hash(perm) == body_hash(body)) == same


@given(st.lists(txs, max_size=8))
def test_independently_built_lists_agree(body):
    rebuilt = [Transaction.decode(t.encode()) for t in body]
    assert body_hash(rebuilt) == body_hash(body)
