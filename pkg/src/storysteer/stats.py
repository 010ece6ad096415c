"""Statistics for experiment analysis: Welch's t, Cohen's d, rank correlations,
and power-based sample sizing.

Self-contained on purpose: p-values go through our own regularized incomplete
beta (continued fraction), and power through a numerically integrated
noncentral-t tail, so the package does not pull in a statistics runtime.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


class DegenerateSampleError(ValueError):
    """Raised when a statistic is undefined for the given sample."""


# ---------------------------------------------------------------------------
# special functions


def _betacf(a: float, b: float, x: float) -> float:
    # Lentz's continued fraction for the incomplete beta function.
    max_iter = 300
    eps = 1e-15
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h


def incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf(t: float, df: float) -> float:
    """Survival function P(T > t) of the central t distribution."""
    if math.isnan(t):
        return math.nan
    x = df / (df + t * t)
    tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x)
    return tail if t >= 0.0 else 1.0 - tail


def t_ppf(q: float, df: float) -> float:
    """Upper-tail quantile: the c with P(T > c) = 1 - q, for q in (0.5, 1)."""
    if not 0.5 <= q < 1.0:
        raise ValueError("t_ppf supports the upper half only")
    lo, hi = 0.0, 1.0
    while 1.0 - t_sf(hi, df) < q:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("t_ppf did not bracket the quantile")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 1.0 - t_sf(mid, df) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _normal_sf(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def noncentral_t_sf(c: float, df: float, delta: float, nodes: int = 400) -> float:
    """P(T > c) for the noncentral t, via its chi-square mixture representation.

    T = (Z + delta) / sqrt(V/df) with Z ~ N(0,1), V ~ chi2(df), so the tail is
    an expectation of a normal tail over the chi-square density, integrated
    with Gauss-Legendre on a range covering essentially all chi-square mass.
    """
    hi = df + 14.0 * math.sqrt(2.0 * df) + 60.0
    x, w = np.polynomial.legendre.leggauss(nodes)
    v = 0.5 * (x + 1.0) * hi
    wv = 0.5 * hi * w
    log_dens = (
        (0.5 * df - 1.0) * np.log(v)
        - 0.5 * v
        - 0.5 * df * math.log(2.0)
        - math.lgamma(0.5 * df)
    )
    arg = c * np.sqrt(v / df) - delta
    tail = 0.5 * np.vectorize(math.erfc)(arg / math.sqrt(2.0))
    return float(np.sum(wv * np.exp(log_dens) * tail))


# ---------------------------------------------------------------------------
# sample statistics


def _as_array(xs: Sequence[float], name: str, min_len: int) -> np.ndarray:
    arr = np.asarray(xs, dtype=float)
    if arr.ndim != 1 or arr.size < min_len:
        raise DegenerateSampleError(f"{name} needs at least {min_len} values")
    if not np.all(np.isfinite(arr)):
        raise DegenerateSampleError(f"{name} contains non-finite values")
    return arr


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = _as_array(xs, "xs", 3)
    y = _as_array(ys, "ys", 3)
    if x.size != y.size:
        raise DegenerateSampleError("samples must have equal length")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = math.sqrt(float(np.dot(xd, xd)))
    sy = math.sqrt(float(np.dot(yd, yd)))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateSampleError("zero variance sample")
    return float(np.dot(xd, yd)) / (sx * sy)


def average_ranks(xs: Sequence[float]) -> list[float]:
    """Ranks 1..n with ties assigned the mean of their positions."""
    x = np.asarray(xs, dtype=float)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=float)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and x[order[j + 1]] == x[order[i]]:
            j += 1
        avg = 0.5 * (i + j) + 1.0
        for idx in range(i, j + 1):
            ranks[order[idx]] = avg
        i = j + 1
    return ranks.tolist()


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    return pearson(average_ranks(xs), average_ranks(ys))


def welch_t_test(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Welch's unequal-variance t statistic and two-sided p-value."""
    x = _as_array(xs, "xs", 2)
    y = _as_array(ys, "ys", 2)
    nx, ny = x.size, y.size
    vx = float(x.var(ddof=1))
    vy = float(y.var(ddof=1))
    if vx == 0.0 and vy == 0.0:
        raise DegenerateSampleError("both samples have zero variance")
    se2x = vx / nx
    se2y = vy / ny
    df_denom = se2x**2 / (nx - 1) + se2y**2 / (ny - 1)
    # squared subnormal variances can underflow to an exact zero
    if se2x + se2y == 0.0 or df_denom == 0.0:
        raise DegenerateSampleError("sample variances underflow to zero")
    t = (float(x.mean()) - float(y.mean())) / math.sqrt(se2x + se2y)
    df = (se2x + se2y) ** 2 / df_denom
    p = 2.0 * t_sf(abs(t), df)
    return t, min(p, 1.0)


def cohens_d(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Standardized mean difference using the pooled standard deviation."""
    x = _as_array(xs, "xs", 2)
    y = _as_array(ys, "ys", 2)
    nx, ny = x.size, y.size
    pooled = ((nx - 1) * float(x.var(ddof=1)) + (ny - 1) * float(y.var(ddof=1))) / (
        nx + ny - 2
    )
    if pooled == 0.0:
        raise DegenerateSampleError("pooled variance is zero")
    return (float(x.mean()) - float(y.mean())) / math.sqrt(pooled)


def power_two_sample_t(n: int, d: float, alpha: float = 0.05) -> float:
    """Power of the two-sided two-sample t test with n subjects per group."""
    if n < 2:
        return 0.0
    df = 2 * n - 2
    delta = d * math.sqrt(n / 2.0)
    crit = t_ppf(1.0 - alpha / 2.0, df)
    return noncentral_t_sf(crit, df, delta) + (1.0 - noncentral_t_sf(-crit, df, delta))


def sample_size(d: float, alpha: float = 0.05, power: float = 0.80) -> int:
    """Smallest per-group n at which the two-sample t test reaches the power."""
    if d <= 0.0:
        raise ValueError("effect size must be positive")
    n = 2
    while power_two_sample_t(n, d, alpha) < power:
        n += 1
        if n > 1_000_000:
            raise ValueError("sample size search did not converge")
    return n
