"""Small numeric helpers shared by the trace writer and the reducer."""

from __future__ import annotations

import math
from collections.abc import Sequence


def nearest_rank(values: Sequence[float], q: float) -> float:
    """Nearest-rank percentile: the smallest value with at least ``q`` percent
    of the sample at or below it. ``inf`` entries are allowed and sort last."""
    if not values:
        raise ValueError("empty sample")
    if not 0 < q <= 100:
        raise ValueError("q must be in (0, 100]")
    ordered = sorted(values)
    k = max(1, math.ceil(q / 100.0 * len(ordered)))
    return float(ordered[k - 1])
