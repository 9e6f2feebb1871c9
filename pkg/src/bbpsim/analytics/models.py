"""Closed-form throughput, fork-rate and per-protocol propagation latency.

Units: sizes in bytes, times in ms, bandwidth in bits/s. A transfer of ``s``
bytes takes ``8000 * s / b_w`` ms.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

FRACTIONS = ("gamma", "alpha", "beta")


class ParamError(ValueError):
    def __init__(self, name: str, message: str):
        super().__init__(f"{name}: {message}")
        self.name = name


@dataclass(frozen=True)
class AnalyticParams:
    """Model inputs. ``None`` means "not given"; a model that needs a missing
    symbol raises :class:`ParamError` naming it. ``s_b`` and ``s_c`` are
    derived from ``s_h``, ``s_t``, ``s_hash`` and ``n_t`` when omitted."""

    s_b: float | None = None
    s_h: float | None = None
    s_hash: float | None = None
    s_t: float | None = None
    s_c: float | None = None
    s_txs: float | None = None
    t_g: float | None = None
    t_e: float | None = None
    t_w: float | None = None
    t_r: float | None = None
    t_h: float | None = None
    t_c: float | None = None
    t_1: float | None = None
    t_2: float | None = None
    b_w: float | None = None
    n_t: float | None = None
    n_u: float | None = None
    h: float | None = None
    gamma: float | None = None
    alpha: float | None = None
    beta: float | None = None
    k: float | None = None

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, bool) or not isinstance(v, (int, float)) or math.isnan(v):
                raise ParamError(f.name, "must be a number")
            if v < 0:
                raise ParamError(f.name, "must be non-negative")
            if f.name in FRACTIONS and v > 1:
                raise ParamError(f.name, "must be in [0, 1]")
        if self.b_w is not None and self.b_w == 0:
            raise ParamError("b_w", "must be positive")
        if self.n_u is not None and self.n_t is not None and self.n_u > self.n_t:
            raise ParamError("n_u", "cannot exceed n_t")

    def replace(self, **changes) -> AnalyticParams:
        return dataclasses.replace(self, **changes)

    def need(self, *names: str) -> list[float]:
        out = []
        for name in names:
            v = getattr(self, name)
            if v is None:
                v = self._derived(name)
            if v is None:
                raise ParamError(name, "required by this model but not given")
            out.append(float(v))
        return out

    def _derived(self, name: str) -> float | None:
        if name == "s_b" and None not in (self.s_h, self.s_t, self.n_t):
            return self.s_h + self.n_t * self.s_t
        if name == "s_c" and None not in (self.s_h, self.s_hash, self.n_t):
            return self.s_h + self.n_t * self.s_hash
        return None


def transfer_ms(n_bytes: float, b_w: float) -> float:
    return 8000.0 * n_bytes / b_w


def tps(n_t: float, t_g_s: float) -> float:
    """Transactions per second for ``n_t`` transactions every ``t_g_s`` seconds."""
    if t_g_s <= 0:
        raise ParamError("t_g", "must be positive")
    return n_t / t_g_s


def tps_from_sizes(s_b: float, s_t: float, t_g_s: float) -> float:
    """Same, with the transaction count given as block size over tx size."""
    if s_t <= 0:
        raise ParamError("s_t", "must be positive")
    return tps(s_b / s_t, t_g_s)


def fork_probability(t_l: float, t_g: float) -> float:
    """Chance that a competing block appears while one is still propagating."""
    if t_g <= 0:
        raise ParamError("t_g", "must be positive")
    return 1.0 - math.exp(-t_l / t_g)


def fork_probability_tps(k: float, tx_per_s: float) -> float:
    """Fork probability with latency taken as linear in block size, ``t_l = k n_t``.

    ``k`` is in ms per transaction; ``t_l / t_g`` then equals ``k * TPS / 1000``.
    """
    return 1.0 - math.exp(-k * tx_per_s / 1000.0)


def bbp_latency(p: AnalyticParams) -> float:
    h, gamma, n_t, n_u, t_e, t_w, t_r, t_h, t_c, b_w = p.need(
        "h", "gamma", "n_t", "n_u", "t_e", "t_w", "t_r", "t_h", "t_c", "b_w")
    full = n_t * t_e + n_t * t_w + t_h + transfer_ms(p.need("s_b")[0], b_w) + t_c if gamma \
        else 0.0
    fast = (n_t - n_u) * t_r + n_u * t_e + t_h + transfer_ms(p.need("s_h")[0], b_w) + t_c
    return gamma * h * full + (1 - gamma) * h * fast


def lbp_latency(p: AnalyticParams) -> float:
    h, n_t, t_e, t_w, t_h, t_c, b_w, s_hash, s_b = p.need(
        "h", "n_t", "t_e", "t_w", "t_h", "t_c", "b_w", "s_hash", "s_b")
    t_v = t_h + n_t * (t_e + t_w)
    return h * (t_v + transfer_ms(s_b + 2 * s_hash, b_w) + 3 * t_c)


def bhp_latency(p: AnalyticParams) -> float:
    h, alpha, n_t, t_e, t_w, t_h, t_c, b_w, s_b, s_hash = p.need(
        "h", "alpha", "n_t", "t_e", "t_w", "t_h", "t_c", "b_w", "s_b", "s_hash")
    extra = 0.0
    if alpha:
        t_1, t_2 = p.need("t_1", "t_2")
        t_c2 = 4 * t_c + t_1 + t_2
        extra = alpha * h * (n_t * t_e + n_t * t_w + transfer_ms(3 * s_hash, b_w) + t_c2)
    return h * (t_h + transfer_ms(s_b, b_w) + t_c) + extra


def cbp_latency(p: AnalyticParams) -> float:
    h, beta, n_t, t_e, t_w, t_h, t_c, b_w, s_hash, s_c = p.need(
        "h", "beta", "n_t", "t_e", "t_w", "t_h", "t_c", "b_w", "s_hash", "s_c")
    t_v = t_h + n_t * (t_e + t_w)
    base = h * (t_v + 3 * t_c + transfer_ms(2 * s_hash + s_c, b_w))
    if not beta:
        return base
    (s_txs,) = p.need("s_txs")
    return base + beta * h * (2 * t_c + transfer_ms(s_hash + s_txs, b_w))


MODELS = {"bbp": bbp_latency, "lbp": lbp_latency, "bhp": bhp_latency, "cbp": cbp_latency}


def latency_model(protocol: str, p: AnalyticParams) -> float:
    try:
        model = MODELS[protocol]
    except KeyError:
        raise ParamError("protocol", f"unknown protocol {protocol!r}") from None
    return model(p)
