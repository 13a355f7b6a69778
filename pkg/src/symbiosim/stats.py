"""Small interval helpers shared by the Monte Carlo front-ends."""
from __future__ import annotations

import math

from scipy import stats


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes={successes} outside [0, {trials}]")
    z = float(stats.norm.ppf(0.5 + confidence / 2))
    p = successes / trials
    z2 = z * z
    denom = 1 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


def binomial_band(p: float, trials: int, confidence: float = 0.99) -> tuple[float, float]:
    """Normal-approximation band in which ``successes/trials`` falls for true ``p``."""
    z = float(stats.norm.ppf(0.5 + confidence / 2))
    half = z * math.sqrt(p * (1 - p) / trials)
    return p - half, p + half


def mean_ci(values, confidence: float = 0.95) -> tuple[float, float, float]:
    """Sample mean with a Student-t interval."""
    import numpy as np

    v = np.asarray(values, dtype=float)
    n = v.size
    m = float(v.mean())
    if n < 2:
        return m, -math.inf, math.inf
    se = float(v.std(ddof=1)) / math.sqrt(n)
    t = float(stats.t.ppf(0.5 + confidence / 2, n - 1))
    return m, m - t * se, m + t * se
