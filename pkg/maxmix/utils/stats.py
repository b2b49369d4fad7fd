# maxmix 📈, AGPL-3.0 license
"""
Empirical distribution statistics used by the verification runs.
"""

import numpy as np
from scipy import special, stats

from maxmix.utils.errors import ContractError


def _as_sample(samples, name='samples'):
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ContractError(f'{name} must be nonempty')
    return x


def frechet_cdf(y):
    """Unit Frechet CDF exp(-1/y), 0 for y <= 0."""
    y = np.asarray(y, dtype=np.float64)
    with np.errstate(divide='ignore'):
        return np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)


def norm_cdf(x):
    """Standard normal CDF."""
    return special.ndtr(x)


def normal_quantile(p):
    """
    Standard normal quantile Phi^-1(p).

    Args:
        p (float | np.ndarray): Probabilities strictly inside (0, 1).

    Returns:
        (float | np.ndarray): Quantiles, 0.0 at p = 0.5.
    """
    arr = np.asarray(p, dtype=np.float64)
    if np.any((arr <= 0) | (arr >= 1)) or np.any(np.isnan(arr)):
        raise ContractError(f'normal_quantile() requires 0 < p < 1, got {p}')
    q = special.ndtri(arr)
    return float(q) if q.ndim == 0 else q


def ks_test(samples, cdf):
    """One-sample Kolmogorov-Smirnov test of `samples` against the callable `cdf`, returns (statistic, p-value)."""
    r = stats.kstest(_as_sample(samples), cdf)
    return float(r.statistic), float(r.pvalue)


def ks_statistic(samples, cdf):
    """Kolmogorov-Smirnov distance sup |F_n - F| between the empirical CDF of `samples` and `cdf`."""
    return ks_test(samples, cdf)[0]


def two_sample_test(a, b):
    """Two-sample Kolmogorov-Smirnov test, returns (statistic, p-value)."""
    r = stats.ks_2samp(_as_sample(a, 'a'), _as_sample(b, 'b'))
    return float(r.statistic), float(r.pvalue)


def two_sample_ks(a, b):
    """Two-sample Kolmogorov-Smirnov distance, 0.0 for identical samples."""
    return two_sample_test(a, b)[0]


def ks_critical(n, level=0.01):
    """Asymptotic one-sample KS critical value at `level`, i.e. 1.63 / sqrt(n) at 0.01."""
    return float(stats.kstwobign.isf(level)) / np.sqrt(n)


def mean_se(x):
    """Sample mean and its standard error."""
    x = _as_sample(x)
    se = float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else float('inf')
    return float(np.mean(x)), se
