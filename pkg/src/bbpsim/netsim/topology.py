"""Overlay topology: a Holme-Kim power-law graph with triad closure for
clustering, nodes placed in four regions, per-link latency and loss."""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .config import GROUPS, ConfigError, LinkConfig, TopologyConfig


@dataclass
class Topology:
    n: int
    neighbors: list[list[int]]              # sorted adjacency
    group: list[str]
    latency: dict[tuple[int, int], float]   # keyed (min, max)
    loss: dict[tuple[int, int], float]
    bandwidth_bps: float

    def link(self, a: int, b: int) -> tuple[float, float]:
        key = (a, b) if a < b else (b, a)
        return self.latency[key], self.loss[key]

    def degree(self, node: int) -> int:
        return len(self.neighbors[node])

    @property
    def n_links(self) -> int:
        return len(self.latency)

    def delay_matrix(self, message_bytes: int) -> np.ndarray:
        """All-pairs shortest path delay for a message of ``message_bytes``
        relayed hop by hop without loss or processing."""
        transfer = 8.0 * message_bytes / self.bandwidth_bps * 1000.0
        rows, cols, w = [], [], []
        for (a, b), lat in self.latency.items():
            rows += [a, b]
            cols += [b, a]
            w += [lat + transfer] * 2
        m = csr_matrix((w, (rows, cols)), shape=(self.n, self.n))
        return shortest_path(m, directed=False)


def _pair_key(g1: str, g2: str) -> str:
    if g1 == g2:
        return "intra"
    a, b = sorted((g1, g2), key=GROUPS.index)
    return f"{a}-{b}"


def generate_topology(cfg: TopologyConfig, link: LinkConfig, n: int, seed: int) -> Topology:
    if n < 4:
        raise ConfigError("n_nodes", "must be at least 4")
    m = min(cfg.attach_m, n - 1)
    for attempt in range(cfg.max_retries + 1):
        sub = np.random.SeedSequence([seed, attempt])
        graph_seed = int(sub.generate_state(1)[0])
        g = nx.powerlaw_cluster_graph(n, m, cfg.triangle_p, seed=graph_seed)
        if nx.is_connected(g):
            break
    else:
        raise RuntimeError(f"no connected topology after {cfg.max_retries + 1} attempts")

    rng = np.random.default_rng(sub.spawn(1)[0])
    groups = [k for k in GROUPS if cfg.group_weights.get(k, 0) > 0]
    weights = np.array([cfg.group_weights[k] for k in groups])
    labels = [groups[i] for i in rng.choice(len(groups), size=n, p=weights / weights.sum())]

    latency, loss = {}, {}
    for a, b in sorted((min(e), max(e)) for e in g.edges()):
        key = _pair_key(labels[a], labels[b])
        if key not in cfg.latency_ranges:
            raise ConfigError(f"topology.latency_ranges.{key}", "missing range for group pair")
        lo, hi = cfg.latency_ranges[key]
        latency[(a, b)] = float(rng.uniform(lo, hi))
        loss[(a, b)] = float(rng.uniform(0.0, link.loss_max))
    neighbors = [sorted(g.neighbors(v)) for v in range(n)]
    return Topology(n, neighbors, labels, latency, loss, link.bandwidth_mbps * 1e6)


def deliver(latency_ms: float, bandwidth_bps: float, n_bytes: int, loss_prob: float,
            retransmit_multiplier: float, rng: np.random.Generator) -> float:
    """One-way delay in ms. A lost message is retransmitted once, costing
    ``retransmit_multiplier`` times the base delay on top."""
    if n_bytes < 0:
        raise ValueError("n_bytes must be non-negative")
    base = latency_ms + 8.0 * n_bytes / bandwidth_bps * 1000.0
    if loss_prob > 0 and rng.random() < loss_prob:
        return base * (1.0 + retransmit_multiplier)
    return base
