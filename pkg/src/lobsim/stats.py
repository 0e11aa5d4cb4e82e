"""Return and volatility statistics.

Returns are relative price changes over non-overlapping windows; the
normalized series subtracts the sample mean and divides by the sample
standard deviation (population convention throughout, no small-sample
corrections). Tail weight is measured by kurtosis excess, the fourth
standardized moment minus 3: zero for a normal, positive for heavier
tails.

Includes a mergeable central-moment accumulator (up to the fourth
moment) so per-run statistics can be pooled across seeds without
holding every sample, plus histogram / empirical-CCDF estimators and a
log-normal reference fit for volatility distributions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ReturnSeries",
    "Moments",
    "Histogram",
    "MomentAccumulator",
    "returns",
    "normalize",
    "moments",
    "excess_kurtosis",
    "moving_volatility",
    "estimate_pdf",
    "estimate_ccdf",
    "lognormal_reference",
    "ks_statistic",
]


@dataclass(frozen=True)
class ReturnSeries:
    """Dimensionless returns sampled every ``delta_t`` steps."""

    values: np.ndarray
    delta_t: int


@dataclass(frozen=True)
class Moments:
    mean: float
    std: float
    excess_kurtosis: float
    count: int


@dataclass(frozen=True)
class Histogram:
    """Density-normalized histogram (integrates to 1)."""

    edges: np.ndarray
    density: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])


def returns(prices: np.ndarray, delta_t: int) -> ReturnSeries:
    """Relative price changes over non-overlapping delta_t windows.

    r_k = (s((k+1) dt) - s(k dt)) / s(k dt), sampling the input series
    from its first element.
    """
    prices = np.asarray(prices, dtype=np.float64)
    if delta_t < 1:
        raise ValueError("delta_t must be >= 1")
    if prices.size <= delta_t:
        raise ValueError("price series shorter than one return window")
    if np.any(prices <= 0) or not np.all(np.isfinite(prices)):
        raise ValueError("prices must be positive and finite")
    sampled = prices[::delta_t]
    vals = np.diff(sampled) / sampled[:-1]
    return ReturnSeries(values=vals, delta_t=delta_t)


def moments(values: np.ndarray) -> Moments:
    """Population mean, standard deviation and kurtosis excess."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise ValueError("need at least 2 samples for moments")
    mean = float(values.mean())
    centered = values - mean
    var = float(np.mean(centered * centered))
    std = float(np.sqrt(var))
    if std == 0.0:
        kurt = float("nan")
    else:
        kurt = float(np.mean(centered**4) / var**2 - 3.0)
    return Moments(mean=mean, std=std, excess_kurtosis=kurt, count=values.size)


def normalize(rs: ReturnSeries) -> ReturnSeries:
    """Standardize returns to sample mean 0 and standard deviation 1."""
    vals = np.asarray(rs.values, dtype=np.float64)
    mean = vals.mean()
    std = vals.std()
    if std == 0.0 or not np.isfinite(std):
        raise ValueError("degenerate return series: zero standard deviation")
    return ReturnSeries(values=(vals - mean) / std, delta_t=rs.delta_t)


def excess_kurtosis(values: np.ndarray) -> float:
    """Fourth central moment over sigma^4, minus 3 (population form)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 4:
        raise ValueError("need at least 4 samples for kurtosis")
    centered = values - values.mean()
    var = np.mean(centered * centered)
    if var == 0.0:
        raise ValueError("degenerate series: zero variance")
    return float(np.mean(centered**4) / var**2 - 3.0)


def moving_volatility(rs: ReturnSeries, window: int) -> np.ndarray:
    """Standard deviation of returns over a sliding time window.

    ``window`` is in simulation steps; each window covers
    window // delta_t consecutive return samples and slides by one
    sample. Empty result when the series is shorter than one window.
    """
    n = window // rs.delta_t
    if n < 2:
        raise ValueError("window must cover at least 2 return samples")
    vals = np.asarray(rs.values, dtype=np.float64)
    if n > vals.size:
        return np.empty(0, dtype=np.float64)
    windows = np.lib.stride_tricks.sliding_window_view(vals, n)
    return windows.std(axis=1)


def estimate_pdf(values: np.ndarray, bins="fd") -> Histogram:
    """Density-normalized histogram; Freedman-Diaconis bins by default."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot estimate a density from no samples")
    if values.min() == values.max():
        # degenerate sample: a single unit-width bin centered on the value
        edges = np.array([values[0] - 0.5, values[0] + 0.5])
        density, edges = np.histogram(values, bins=edges, density=True)
    else:
        density, edges = np.histogram(values, bins=bins, density=True)
    return Histogram(edges=edges, density=density)


def estimate_ccdf(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Empirical complementary CDF, P(X > x) at each distinct sample value.

    Returns (x, ccdf) with x sorted ascending; the CCDF is monotone
    nonincreasing, equals 1 - 1/n at the minimum of a tie-free sample
    and 0 at the maximum.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot estimate a CCDF from no samples")
    xs, counts = np.unique(values, return_counts=True)
    ccdf = 1.0 - np.cumsum(counts) / values.size
    return xs, ccdf


def lognormal_reference(sigmas: np.ndarray) -> tuple[float, float]:
    """Log-normal fit (location, scale) by moments of log sigma.

    location/scale are the mean and standard deviation of log(sigma);
    an exact log-normal sample recovers its parameters, a constant
    sample yields scale 0.
    """
    sigmas = np.asarray(sigmas, dtype=np.float64)
    if sigmas.size == 0:
        raise ValueError("no volatilities to fit")
    if np.any(sigmas <= 0):
        raise ValueError("volatilities must be positive for a log-normal fit")
    logs = np.log(sigmas)
    return float(logs.mean()), float(logs.std())


def ks_statistic(values: np.ndarray, cdf) -> float:
    """One-sample Kolmogorov-Smirnov distance against a CDF callable."""
    values = np.sort(np.asarray(values, dtype=np.float64))
    n = values.size
    if n == 0:
        raise ValueError("no samples")
    f = np.asarray(cdf(values), dtype=np.float64)
    grid = np.arange(1, n + 1) / n
    return float(np.max(np.maximum(np.abs(f - grid), np.abs(f - (grid - 1 / n)))))


class MomentAccumulator:
    """Streaming central moments up to order four, mergeable pairwise.

    Accumulators from independent runs combine exactly (update order
    aside, to rounding), so pooled mean/std/kurtosis never require the
    raw samples. Uses the standard one-pass update generalized to
    batches: a batch's own central sums are computed vectorized, then
    merged like another accumulator.
    """

    __slots__ = ("n", "m1", "m2", "m3", "m4")

    def __init__(self):
        self.n = 0
        self.m1 = 0.0
        self.m2 = 0.0
        self.m3 = 0.0
        self.m4 = 0.0

    def add(self, values: np.ndarray) -> "MomentAccumulator":
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0:
            return self
        mean = float(values.mean())
        centered = values - mean
        c2 = centered * centered
        batch = MomentAccumulator()
        batch.n = values.size
        batch.m1 = mean
        batch.m2 = float(c2.sum())
        batch.m3 = float((c2 * centered).sum())
        batch.m4 = float((c2 * c2).sum())
        self._merge_in_place(batch)
        return self

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        combined = MomentAccumulator()
        combined._merge_in_place(self)
        combined._merge_in_place(other)
        return combined

    def _merge_in_place(self, other: "MomentAccumulator") -> None:
        if other.n == 0:
            return
        if self.n == 0:
            self.n, self.m1 = other.n, other.m1
            self.m2, self.m3, self.m4 = other.m2, other.m3, other.m4
            return
        na, nb = self.n, other.n
        n = na + nb
        delta = other.m1 - self.m1
        d_n = delta / n
        m2 = self.m2 + other.m2 + delta * d_n * na * nb
        m3 = (
            self.m3 + other.m3
            + delta * d_n**2 * na * nb * (na - nb)
            + 3.0 * d_n * (na * other.m2 - nb * self.m2)
        )
        m4 = (
            self.m4 + other.m4
            + delta * d_n**3 * na * nb * (na * na - na * nb + nb * nb)
            + 6.0 * d_n**2 * (na * na * other.m2 + nb * nb * self.m2)
            + 4.0 * d_n * (na * other.m3 - nb * self.m3)
        )
        self.m1 += d_n * nb
        self.n, self.m2, self.m3, self.m4 = n, m2, m3, m4

    @property
    def count(self) -> int:
        return self.n

    @property
    def mean(self) -> float:
        return self.m1

    @property
    def variance(self) -> float:
        return self.m2 / self.n if self.n else float("nan")

    @property
    def std(self) -> float:
        return float(np.sqrt(self.variance))

    @property
    def excess_kurtosis(self) -> float:
        if self.n == 0 or self.m2 == 0.0:
            return float("nan")
        return self.n * self.m4 / (self.m2 * self.m2) - 3.0

    def to_moments(self) -> Moments:
        return Moments(
            mean=self.mean, std=self.std,
            excess_kurtosis=self.excess_kurtosis, count=self.n,
        )
