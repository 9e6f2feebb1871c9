"""Reduce a raw trace to the per-cell metrics reported for each run."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..protocols.actions import FAST, FULL, HASH, MINED
from ..protocols.messages import BLOCK_TRAFFIC
from .models import AnalyticParams, ParamError, latency_model
from .stats import nearest_rank

NAN = float("nan")


@dataclass
class MetricsReport:
    protocol: str
    n_t: int
    seed: int
    p90_ms: float
    p90_model_ms: float
    bytes_per_block: float
    sync_fail_frac: float
    beta: float
    gamma: float
    stale_tx: int
    stale_block_rate: float
    alpha: float = NAN
    hops: float = NAN
    t_c_ms: float = NAN
    tx_match_rate: float = NAN
    block_match_rate: float = NAN
    processing_ms: float = NAN
    n_u: float = NAN
    txs_per_block: float = NAN
    blocks: int = 0
    status: str = "ok"


def _mean(xs) -> float:
    xs = list(xs)
    return sum(xs) / len(xs) if xs else NAN


def block_p90s(trace) -> dict[str, float]:
    """p90 commit delay per canonical block over all nodes, miner included at 0.
    Blocks that never reached 90% of nodes are left out."""
    delays = trace.commit_times()
    out = {}
    for b in trace.canonical_blocks():
        p = nearest_rank(delays[b.block_hash], 90)
        if math.isfinite(p):
            out[b.block_hash] = p
    return out


def _p90_hops(trace) -> float:
    """Mean hop count of the node sitting at the 90th percentile of each block."""
    hops: dict[tuple[str, int], int] = {(c.block_hash, c.node): c.hop for c in trace.commits}
    delays = trace.commit_times()
    out = []
    for b in trace.canonical_blocks():
        d = delays[b.block_hash]
        order = sorted(range(len(d)), key=lambda i: (d[i], i))
        node = order[max(1, math.ceil(0.9 * len(d))) - 1]
        if math.isfinite(d[node]):
            out.append(hops[(b.block_hash, node)])
    return _mean(out)


def model_params(trace, m: MetricsReport) -> AnalyticParams:
    s = trace.scenario
    cost, sizes = s["cost"], s["sizes"]
    n_t = m.txs_per_block
    return AnalyticParams(
        s_h=sizes["s_h"], s_hash=sizes["s_hash"], s_t=sizes["s_t"],
        s_txs=max(0.0, _missing_bytes(trace, sizes["s_t"])),
        t_g=s["t_g_ms"], t_e=cost["t_e"], t_w=cost["t_w"], t_r=cost["t_r"], t_h=cost["t_h"],
        t_c=m.t_c_ms, t_1=s["bhp"]["t1_ms"], t_2=s["bhp"]["t2_ms"],
        b_w=s["link"]["bandwidth_mbps"] * 1e6, n_t=n_t, n_u=min(m.n_u, n_t), h=m.hops,
        gamma=0.0 if math.isnan(m.gamma) else m.gamma,
        alpha=0.0 if math.isnan(m.alpha) else m.alpha,
        beta=0.0 if math.isnan(m.beta) else m.beta)


def _missing_bytes(trace, s_t: float) -> float:
    rounds = [r for r in trace.reconstructions if r[2] > 0]
    return _mean(r[2] * s_t for r in rounds) if rounds else 0.0


def reduce_trace(trace) -> MetricsReport:
    if not trace.blocks:
        raise ValueError("trace has no blocks")
    canonical = trace.canonical_blocks()
    canon_hashes = {b.block_hash for b in canonical}
    p90s = block_p90s(trace)

    traffic = sum(n for _, _, _, typ, n in trace.messages if typ in BLOCK_TRAFFIC)

    non_miner = [c for c in trace.commits if c.path != MINED and c.block_hash in canon_hashes]
    paths = [c.path for c in non_miner]

    def share(kind: str) -> float:
        return paths.count(kind) / len(paths) if paths else NAN

    proto = trace.protocol
    sync = [s for s in trace.sync if s[0] in canon_hashes]
    recs = [r for r in trace.reconstructions if r[0] in canon_hashes]
    m = MetricsReport(
        protocol=proto, n_t=trace.n_t, seed=trace.seed,
        p90_ms=_mean(p90s.values()), p90_model_ms=NAN,
        bytes_per_block=traffic / len(trace.blocks),
        sync_fail_frac=(1 - sum(s[2] for s in sync) / len(sync)) if sync else NAN,
        beta=(sum(r[2] > 0 for r in recs) / len(recs)) if recs else NAN,
        gamma=share(FULL) if proto == "bbp" else NAN,
        stale_tx=sum(trace.stale_txs.values()),
        stale_block_rate=1 - len(canonical) / len(trace.blocks),
        alpha=share(HASH) if proto == "bhp" else NAN,
        hops=_p90_hops(trace),
        t_c_ms=_mean(c.link_ms for c in non_miner),
        tx_match_rate=(1 - sum(r[2] for r in recs) / max(1, sum(r[3] for r in recs)))
        if recs else NAN,
        block_match_rate=(sum(r[2] == 0 for r in recs) / len(recs)) if recs else NAN,
        processing_ms=_mean(c.processing_ms for c in non_miner
                            if c.path in (FAST, FULL, HASH)),
        n_u=_mean(b.n_u for b in canonical),
        txs_per_block=_mean(b.n_txs for b in canonical),
        blocks=len(trace.blocks),
    )
    if trace.scenario and not math.isnan(m.hops) and not math.isnan(m.t_c_ms):
        try:
            m.p90_model_ms = latency_model(proto, model_params(trace, m))
        except ParamError:
            pass
    return m
