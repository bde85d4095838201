"""Goodness-of-fit of p-value lists against U(0, 1).

Anderson-Darling p-values follow Marsaglia & Marsaglia (2004): the
asymptotic distribution ``adinf`` plus the finite-sample correction
``errfix``.  Kolmogorov-Smirnov uses the asymptotic Kolmogorov distribution.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

MIN_VALUES = 5
RECOMMENDED_VALUES = 200
N_BINS = 20
_EPS = 1e-12


def _as_array(p, min_n: int = MIN_VALUES) -> np.ndarray:
    u = np.asarray(p, dtype=float).ravel()
    if u.size < min_n:
        raise ValueError(f"need at least {min_n} p-values, got {u.size}")
    if np.isnan(u).any() or (u < 0).any() or (u > 1).any():
        raise ValueError("p-values must lie in [0, 1]")
    return u


def ad_statistic(p: Sequence[float]) -> float:
    """Anderson-Darling A^2 of ``p`` against U(0, 1)."""
    u = np.sort(_as_array(p, 1))
    u = np.clip(u, _EPS, 1.0 - _EPS)
    n = u.size
    i = np.arange(1, n + 1)
    s = np.sum((2 * i - 1) * (np.log(u) + np.log1p(-u[::-1])))
    return float(-n - s / n)


def adinf(z: float) -> float:
    """Asymptotic P(A^2 < z)."""
    if z <= 0:
        return 0.0
    if z < 2.0:
        return (
            math.exp(-1.2337141 / z)
            / math.sqrt(z)
            * (2.00012 + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z)
        )
    return math.exp(
        -math.exp(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z)
    )


def errfix(n: int, x: float) -> float:
    """Finite-n correction to add to ``adinf``."""
    if x > 0.8:
        return (
            -130.2137 + (745.2337 - (1705.091 - (1950.646 - (1116.360 - 255.7844 * x) * x) * x) * x) * x
        ) / n
    c = 0.01265 + 0.1757 / n
    if x < c:
        t = x / c
        t = math.sqrt(t) * (1.0 - t) * (49 * t - 102)
        return t * (0.0037 / (n * n) + 0.00078 / n + 0.00006) / n
    t = (x - c) / (0.8 - c)
    t = -0.00022633 + (6.54034 - (14.6538 - (14.458 - (8.259 - 1.91864 * t) * t) * t) * t) * t
    return t * (0.04213 + 0.01365 / n) / n


def ad_cdf(n: int, z: float) -> float:
    """P(A_n^2 < z) for a sample of size ``n`` from U(0, 1)."""
    x = adinf(z)
    if x > 0.999:
        # errfix is a fitted polynomial whose residual (~1e-3/n) exceeds the
        # whole tail mass here; the asymptotic tail is the better estimate.
        return x
    return min(max(x + errfix(n, x), 0.0), 1.0)


def anderson_darling(p: Sequence[float]) -> tuple[float, float]:
    """(A^2, p-value) for the hypothesis that ``p`` is drawn from U(0, 1)."""
    u = _as_array(p)
    a2 = ad_statistic(u)
    return a2, min(max(1.0 - ad_cdf(u.size, a2), 0.0), 1.0)


def kolmogorov_sf(lam: float, tol: float = 1e-10) -> float:
    """P(K > lam) for the limiting Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 1.18:
        # theta-function form; the alternating series converges slowly here
        total = 0.0
        k = 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8 * lam * lam))
            total += term
            if term < tol:
                break
            k += 1
        return min(max(1.0 - math.sqrt(2 * math.pi) / lam * total, 0.0), 1.0)
    total = 0.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * lam * lam)
        total += term if k % 2 else -term
        if term < tol:
            break
        k += 1
    return min(max(2.0 * total, 0.0), 1.0)


def kolmogorov_smirnov(p: Sequence[float]) -> tuple[float, float]:
    """(D, p-value) of the one-sample KS test against U(0, 1)."""
    u = np.sort(_as_array(p))
    n = u.size
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))
    return d, kolmogorov_sf(math.sqrt(n) * d)


def histogram_20(p: Sequence[float]) -> list[int]:
    u = _as_array(p, 1)
    counts, _ = np.histogram(u, bins=N_BINS, range=(0.0, 1.0))
    return [int(c) for c in counts]


def kl_divergence_20bin(p: Sequence[float]) -> float:
    """KL divergence (nats) of the 20-bin p-value histogram from uniform bins."""
    counts = np.asarray(histogram_20(p), dtype=float)
    props = counts / counts.sum()
    nz = props > 0
    return float(max(np.sum(props[nz] * np.log(props[nz] * N_BINS)), 0.0))


@dataclass(frozen=True)
class UniformityReport:
    ad_stat: float
    p_ad: float
    ks_stat: float
    p_ks: float
    kl_div: float
    n: int
    histogram: list[int] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def uniformity_report(p: Sequence[float]) -> UniformityReport:
    u = _as_array(p)
    a2, p_ad = anderson_darling(u)
    d, p_ks = kolmogorov_smirnov(u)
    warnings = []
    if u.size < RECOMMENDED_VALUES:
        warnings.append(f"only {u.size} p-values; at least {RECOMMENDED_VALUES} are recommended")
    return UniformityReport(a2, p_ad, d, p_ks, kl_divergence_20bin(u), int(u.size), histogram_20(u), warnings)
