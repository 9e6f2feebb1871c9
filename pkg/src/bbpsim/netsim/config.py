"""Scenario configuration: typed dataclasses, JSON loading with strict key
checking, and validation."""

from __future__ import annotations

import dataclasses
import json
import math
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

PROTOCOLS = ("bbp", "lbp", "bhp", "cbp")
GROUPS = ("asia", "oceania", "north_america", "europe")


class ConfigError(ValueError):
    """A config value is missing, unknown or out of range. ``key`` names it."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class CostModel:
    """Simulated CPU cost, milliseconds."""

    t_h: float = 4.0        # header verification
    t_e: float = 1.8        # execute one transaction
    t_w: float = 1.2        # persist one transaction's state writes
    t_r: float = 0.004      # read one pre-executed result from the intermediate state

    def full_validation(self, n_txs: int) -> float:
        return self.t_h + n_txs * (self.t_e + self.t_w)

    def finalize(self, n_txs: int, n_u: int) -> float:
        return self.t_h + (n_txs - n_u) * self.t_r + n_u * self.t_e

    def pre_validation(self, n_txs: int, n_u: int) -> float:
        # state writes of pre-executed txs overlap with other work
        return (n_txs - n_u) * self.t_e


@dataclass(frozen=True)
class MessageSizes:
    s_hash: int = 72
    s_h: int = 508
    s_t: int = 250


@dataclass(frozen=True)
class LinkConfig:
    bandwidth_mbps: float = 55.0
    loss_max: float = 0.01
    retransmit_multiplier: float = 2.0


def _default_latency_ranges() -> dict[str, list[float]]:
    return {
        "intra": [10.0, 40.0],
        "asia-oceania": [40.0, 60.0],
        "oceania-north_america": [40.0, 60.0],
        "north_america-europe": [40.0, 60.0],
        "asia-north_america": [60.0, 90.0],
        "oceania-europe": [60.0, 90.0],
        "asia-europe": [90.0, 110.0],
    }


@dataclass(frozen=True)
class TopologyConfig:
    attach_m: int = 14
    triangle_p: float = 0.5
    group_weights: dict[str, float] = field(default_factory=lambda: {
        "asia": 0.25, "oceania": 0.05, "north_america": 0.35, "europe": 0.35})
    latency_ranges: dict[str, list[float]] = field(default_factory=_default_latency_ranges)
    max_retries: int = 20


@dataclass(frozen=True)
class WorkloadConfig:
    n_accounts: int = 10_000
    coinbase_fraction: float = 0.0
    late_fraction: float = 0.0
    local_fraction: float = 0.0
    withheld_fraction: float = 0.0
    late_window_ms: float = 200.0
    late_release_delay_ms: float = 3000.0
    gas_price_max: int = 1000


@dataclass(frozen=True)
class BhpConfig:
    t1_ms: float = 400.0
    t2_ms: float = 100.0


@dataclass(frozen=True)
class Scenario:
    protocol: str = "bbp"
    n_nodes: int = 200
    seed: int = 1
    t_g_ms: float = 14_000.0
    n_t: int = 200
    gas_limit_factor: float = 1.0
    tx_rate_factor: float = 1.1
    prefill_ms: float | None = None
    miner_fraction: float = 0.1
    delta_ms: float = 1000.0
    max_sync_rounds: int = 4
    run_blocks: int = 30
    drain_ms: float | None = None
    tx_gossip: str = "flood"
    dishonest_fraction: float = 0.0
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    link: LinkConfig = field(default_factory=LinkConfig)
    sizes: MessageSizes = field(default_factory=MessageSizes)
    cost: CostModel = field(default_factory=CostModel)
    bhp: BhpConfig = field(default_factory=BhpConfig)

    @property
    def gas_limit(self) -> int:
        return max(21_000, int(round(self.gas_limit_factor * self.n_t)) * 21_000)

    @property
    def tx_rate_per_ms(self) -> float:
        return self.tx_rate_factor * self.n_t / self.t_g_ms

    @property
    def effective_prefill_ms(self) -> float:
        return self.t_g_ms if self.prefill_ms is None else self.prefill_ms

    @property
    def effective_drain_ms(self) -> float:
        return 10 * self.t_g_ms if self.drain_ms is None else self.drain_ms

    def replace(self, **changes: Any) -> Scenario:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


# -- loading -------------------------------------------------------------------


def _coerce(value: Any, tp: Any, key: str) -> Any:
    origin = typing.get_origin(tp)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(key, "expected an object")
        return _build(tp, value, key + ".")
    if origin in (typing.Union, types.UnionType):
        args = typing.get_args(tp)
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)][0]
        return _coerce(value, inner, key)
    if origin is dict:
        if not isinstance(value, dict):
            raise ConfigError(key, "expected an object")
        _, vt = typing.get_args(tp)
        return {str(k): _coerce(v, vt, f"{key}.{k}") for k, v in value.items()}
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(key, "expected a list")
        (it,) = typing.get_args(tp)
        return [_coerce(v, it, f"{key}[{i}]") for i, v in enumerate(value)]
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(key, "expected true/false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, "expected an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, "expected a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(key, "expected a string")
        return value
    raise ConfigError(key, f"unsupported type {tp}")


def _build(cls: type, data: dict[str, Any], prefix: str = "") -> Any:
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for k in data:
        if k not in names:
            raise ConfigError(prefix + k, "unknown key")
    kwargs = {k: _coerce(v, hints[k], prefix + k) for k, v in data.items()}
    return cls(**kwargs)


def _check(cond: bool, key: str, message: str) -> None:
    if not cond:
        raise ConfigError(key, message)


def validate(s: Scenario) -> Scenario:
    _check(s.protocol in PROTOCOLS, "protocol", f"must be one of {', '.join(PROTOCOLS)}")
    _check(s.n_nodes >= 4, "n_nodes", "must be at least 4")
    _check(s.t_g_ms > 0, "t_g_ms", "must be positive")
    _check(s.n_t >= 0, "n_t", "must be non-negative")
    _check(s.gas_limit_factor > 0, "gas_limit_factor", "must be positive")
    _check(s.tx_rate_factor >= 0, "tx_rate_factor", "must be non-negative")
    _check(s.prefill_ms is None or s.prefill_ms >= 0, "prefill_ms", "must be non-negative")
    _check(0 < s.miner_fraction <= 1, "miner_fraction", "must be in (0, 1]")
    _check(s.delta_ms >= 0, "delta_ms", "must be non-negative")
    _check(s.max_sync_rounds >= 0, "max_sync_rounds", "must be non-negative")
    _check(s.run_blocks >= 1, "run_blocks", "must be at least 1")
    _check(s.drain_ms is None or s.drain_ms > 0, "drain_ms", "must be positive")
    _check(s.tx_gossip in ("flood", "event"), "tx_gossip", "must be 'flood' or 'event'")
    _check(0 <= s.dishonest_fraction <= 1, "dishonest_fraction", "must be in [0, 1]")
    w = s.workload
    _check(w.n_accounts >= 2, "workload.n_accounts", "must be at least 2")
    for name in ("coinbase_fraction", "late_fraction", "local_fraction", "withheld_fraction"):
        v = getattr(w, name)
        _check(0 <= v <= 1, f"workload.{name}", "must be in [0, 1]")
    _check(w.late_fraction + w.local_fraction + w.withheld_fraction <= 1,
           "workload.late_fraction", "special fractions must sum to at most 1")
    _check(w.late_window_ms >= 0, "workload.late_window_ms", "must be non-negative")
    _check(w.late_release_delay_ms >= 0, "workload.late_release_delay_ms", "must be non-negative")
    _check(w.gas_price_max >= 1, "workload.gas_price_max", "must be at least 1")
    t = s.topology
    _check(t.attach_m >= 1 and t.attach_m < s.n_nodes, "topology.attach_m",
           "must be in [1, n_nodes)")
    _check(0 <= t.triangle_p <= 1, "topology.triangle_p", "must be in [0, 1]")
    _check(set(t.group_weights) <= set(GROUPS), "topology.group_weights",
           f"groups must be among {', '.join(GROUPS)}")
    _check(all(v >= 0 for v in t.group_weights.values()), "topology.group_weights",
           "weights must be non-negative")
    _check(math.isclose(sum(t.group_weights.values()), 1.0, abs_tol=1e-9),
           "topology.group_weights", "weights must sum to 1")
    for k, rng in t.latency_ranges.items():
        _check(len(rng) == 2 and 0 <= rng[0] <= rng[1], f"topology.latency_ranges.{k}",
               "must be [low, high] with 0 <= low <= high")
    _check(s.link.bandwidth_mbps > 0, "link.bandwidth_mbps", "must be positive")
    _check(0 <= s.link.loss_max < 1, "link.loss_max", "must be in [0, 1)")
    _check(s.link.retransmit_multiplier >= 0, "link.retransmit_multiplier", "must be non-negative")
    for name in ("s_hash", "s_h", "s_t"):
        _check(getattr(s.sizes, name) >= 0, f"sizes.{name}", "must be non-negative")
    for name in ("t_h", "t_e", "t_w", "t_r"):
        _check(getattr(s.cost, name) >= 0, f"cost.{name}", "must be non-negative")
    _check(s.bhp.t1_ms >= 0 and s.bhp.t2_ms >= 0, "bhp", "timers must be non-negative")
    return s


def scenario_from_dict(data: dict[str, Any]) -> Scenario:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a JSON object")
    return validate(_build(Scenario, data))


def load_json(path: str | Path) -> dict[str, Any]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(str(p), "config file not found")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(str(p), f"invalid JSON ({exc})") from None


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(load_json(path))


def dump_scenario(s: Scenario) -> str:
    return json.dumps(s.to_dict(), indent=2, sort_keys=True) + "\n"
