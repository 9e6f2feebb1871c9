from __future__ import annotations

import itertools

import pytest

from bbpsim.chain_types import COINBASE_PLACEHOLDER, Transaction, WorldState

A, B, C, D, E = 0xA, 0xB, 0xC, 0xD, 0xE
CB = COINBASE_PLACEHOLDER
MINER = 0xBEEF

_counter = itertools.count(1)


def mk_tx(sender=A, recipient=B, nonce=1, gas_price=1, gas_used=1, amount=1,
          created_ts=0, origin_node=0) -> Transaction:
    return Transaction(sender, recipient, nonce, gas_price, gas_used, amount,
                       created_ts, origin_node)


def rich_state(*accounts, balance=10**9) -> WorldState:
    return WorldState({a: (0, balance) for a in accounts})


@pytest.fixture
def fresh_tx():
    """Factory for distinct transactions from distinct senders."""

    def make(**kw):
        kw.setdefault("sender", 0x1000 + next(_counter))
        return mk_tx(**kw)

    return make


# -- acceptance verdicts ------------------------------------------------------------

_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion and return the flag."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"C{number} {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        request.config.stash[_VERDICTS].append((number, line))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
