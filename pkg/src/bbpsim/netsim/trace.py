"""Raw measurements of one run and their CSV serialization.

Every file has a fixed header; floats are written with six decimals so two
identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..analytics.stats import nearest_rank

SCHEMAS: dict[str, tuple[str, ...]] = {
    "blocks.csv": ("block_hash", "height", "miner", "mine_ms", "p50_ms", "p90_ms", "p99_ms",
                   "parent_hash", "canonical", "n_txs", "n_u", "reached"),
    "messages.csv": ("time_ms", "src", "dst", "type", "bytes"),
    "sync.csv": ("height", "synced_nodes", "total_nodes"),
    "stale.csv": ("kind", "count", "height"),
    "commits.csv": ("block_hash", "node", "commit_ms", "path", "hop", "via", "link_ms",
                    "processing_ms"),
    "reconstructions.csv": ("block_hash", "node", "n_missing", "n_txs"),
}

#: report.csv is written by the analytics package; its schema is checked here too.
SCHEMAS["report.csv"] = (
    "protocol", "n_t", "seed", "p90_ms", "p90_model_ms", "bytes_per_block", "sync_fail_frac",
    "beta", "gamma", "stale_tx", "stale_block_rate", "alpha", "hops", "t_c_ms",
    "tx_match_rate", "block_match_rate", "processing_ms", "n_u", "txs_per_block", "blocks",
    "status",
)


def fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.6f}"


@dataclass
class BlockRow:
    block_hash: str
    height: int
    parent_hash: str
    miner: int
    mine_ms: float
    n_txs: int
    n_u: int
    canonical: bool = False


@dataclass
class CommitRow:
    block_hash: str
    node: int
    commit_ms: float
    path: str
    hop: int
    via: int
    link_ms: float
    processing_ms: float


@dataclass
class RawTrace:
    n_nodes: int
    protocol: str
    seed: int
    n_t: int
    blocks: list[BlockRow] = field(default_factory=list)
    commits: list[CommitRow] = field(default_factory=list)
    messages: list[tuple[float, int, int, str, int]] = field(default_factory=list)
    sync: list[tuple[str, int, bool]] = field(default_factory=list)         # block, node, synced
    reconstructions: list[tuple[str, int, int, int]] = field(default_factory=list)
    stale_txs: dict[int, int] = field(default_factory=dict)                 # height -> count
    scenario: dict = field(default_factory=dict)
    invalid: int = 0
    voided_mining: int = 0
    end_ms: float = 0.0

    # -- views ----------------------------------------------------------------------

    def commit_times(self) -> dict[str, list[float]]:
        """Per block, commit delay of every node (``inf`` if it never committed)."""
        mined = {b.block_hash: b.mine_ms for b in self.blocks}
        out: dict[str, list[float]] = {h: [math.inf] * self.n_nodes for h in mined}
        for c in self.commits:
            if c.block_hash in out:
                out[c.block_hash][c.node] = c.commit_ms - mined[c.block_hash]
        return out

    def canonical_blocks(self) -> list[BlockRow]:
        return [b for b in self.blocks if b.canonical]

    # -- CSV ------------------------------------------------------------------------

    def block_rows(self) -> list[list[str]]:
        delays = self.commit_times()
        rows = []
        for b in self.blocks:
            d = delays[b.block_hash]
            rows.append([b.block_hash, str(b.height), str(b.miner), fmt(b.mine_ms),
                         fmt(nearest_rank(d, 50)), fmt(nearest_rank(d, 90)),
                         fmt(nearest_rank(d, 99)), b.parent_hash, str(int(b.canonical)),
                         str(b.n_txs), str(b.n_u), str(sum(math.isfinite(x) for x in d))])
        return rows

    def sync_rows(self) -> list[list[str]]:
        height = {b.block_hash: b.height for b in self.canonical_blocks()}
        per: dict[int, list[int]] = {}
        for h, _, synced in self.sync:
            if h in height:
                cell = per.setdefault(height[h], [0, 0])
                cell[0] += int(synced)
                cell[1] += 1
        return [[str(k), str(v[0]), str(v[1])] for k, v in sorted(per.items())]

    def stale_rows(self) -> list[list[str]]:
        rows = []
        stale_blocks: dict[int, int] = {}
        for b in self.blocks:
            if not b.canonical:
                stale_blocks[b.height] = stale_blocks.get(b.height, 0) + 1
        for k, v in sorted(stale_blocks.items()):
            rows.append(["block", str(v), str(k)])
        for k, v in sorted(self.stale_txs.items()):
            rows.append(["tx", str(v), str(k)])
        return rows

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        tables = {
            "blocks.csv": self.block_rows(),
            "messages.csv": ([fmt(t), str(s), str(d), typ, str(n)]
                             for t, s, d, typ, n in self.messages),
            "sync.csv": self.sync_rows(),
            "stale.csv": self.stale_rows(),
            "commits.csv": ([c.block_hash, str(c.node), fmt(c.commit_ms), c.path, str(c.hop),
                             str(c.via), fmt(c.link_ms), fmt(c.processing_ms)]
                            for c in self.commits),
            "reconstructions.csv": ([h, str(n), str(m), str(k)]
                                    for h, n, m, k in self.reconstructions),
        }
        for name, rows in tables.items():
            with open(out / name, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(SCHEMAS[name])
                w.writerows(rows)
        meta = {"n_nodes": self.n_nodes, "protocol": self.protocol, "seed": self.seed,
                "n_t": self.n_t, "invalid": self.invalid, "voided_mining": self.voided_mining,
                "end_ms": round(self.end_ms, 6)}
        (out / "run.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def check_csv(path: str | Path) -> int:
    """Validate a trace CSV against its schema; return the number of data rows."""
    path = Path(path)
    schema = SCHEMAS.get(path.name)
    if schema is None:
        raise ValueError(f"no schema for {path.name}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != schema:
            raise ValueError(f"{path.name}: header {header} != {list(schema)}")
        n = 0
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(schema):
                raise ValueError(f"{path.name}:{lineno}: expected {len(schema)} fields")
            n += 1
    return n
