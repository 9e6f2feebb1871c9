"""Discrete-event simulator for bodyless block propagation and three
baseline propagation protocols, with the ledger, mempool and analytic
models they depend on."""

__version__ = "0.1.0"
