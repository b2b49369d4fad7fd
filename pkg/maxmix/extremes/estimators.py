# maxmix 📈, AGPL-3.0 license
"""
Estimators of the pair extremal coefficient theta(h) from one field sample on a window Lambda:

    theta1 = -y log p(h, y),        p(h, y) = |Lambda|^-1 sum_t 1{eta(t) <= y, eta(t+h) <= y}
    theta2 = |Lambda| / sum_t min(1 / eta(t), 1 / eta(t+h))
    theta3 = (1 + 2 nu) / (1 - 2 nu),   nu = (2 |Lambda|)^-1 sum_t |F(eta(t)) - F(eta(t+h))|,  F(y) = exp(-1/y)

with their asymptotic variances: the lattice series sigma1^2 for theta1 and long-run-variance plug-ins otherwise.
"""

import math

import numpy as np
from scipy import optimize, signal

from maxmix.engine.results import EstimateReport, Report, SeriesValue, ThetaValue
from maxmix.extremes.theta import Theta4Provider, gap_bounds
from maxmix.fields.lattice import shell
from maxmix.utils import LOGGER
from maxmix.utils.errors import BracketError, ContractError, EstimatorError, SeriesError
from maxmix.utils.stats import frechet_cdf

SMALL_SAMPLE = 30  # windows below this size flag theta2 for small-sample bias


def pair_values(sample, h, base=None):
    """Values (eta(t), eta(t + h)) for t in the estimation window, ContractError when t + h was not simulated."""
    base = base or sample.base
    h = np.asarray(h, dtype=np.int64).reshape(base.dim)
    return sample.at(base.sites), sample.at(base.sites + h)


def p_hat(sample, h, y, base=None):
    """Empirical joint non-exceedance frequency |Lambda|^-1 sum_t 1{eta(t) <= y, eta(t + h) <= y}."""
    if not y > 0:
        raise ContractError(f'p_hat() requires y > 0, got y={y}')
    x, xh = pair_values(sample, h, base)
    return float(np.mean((x <= y) & (xh <= y)))


# Plug-in long-run variances -------------------------------------------------------------------------------------------


def default_bandwidth(size, dim):
    """Plug-in bandwidth L = floor(|Lambda|^(1 / (2d)))."""
    return int(math.floor(size ** (1 / (2 * dim)) + 1e-9))


def _box_extents(base):
    if base.descriptor.get('type') != 'box':
        raise ContractError(f'plug-in variances need a box estimation window, got {base.descriptor}')
    return tuple(base.descriptor['extents'])


def autocovariances(fields):
    """
    Empirical autocovariances gamma(u) = n^-1 sum_t z(t) z(t + u) of the centred fields for every lag u, averaged over
    the given arrays (one per replicate, all of the same box shape). Lag 0 sits at index shape - 1.
    """
    fields = [np.asarray(f, dtype=np.float64) for f in fields]
    total = 0.0
    for f in fields:
        z = f - f.mean()
        total = total + signal.correlate(z, z, mode='full', method='fft') / z.size
    return total / len(fields)


def long_run_variance(fields, L, acov=None):
    """sum_{|u| <= L} gamma(u) over the sup-norm ball of lags, see autocovariances()."""
    shape = np.asarray(fields[0]).shape
    if L >= min(shape) / 2:
        raise ContractError(f'bandwidth L={L} is not below the window radius {min(shape) / 2:g}, use a larger window')
    acov = autocovariances(fields) if acov is None else acov
    return float(acov[tuple(slice(s - 1 - L, s + L) for s in shape)].sum())


def summand_field(sample, h, estimator, y=None, base=None):
    """The per-site summand of an estimator as an array shaped like the box estimation window."""
    base = base or sample.base
    x, xh = pair_values(sample, h, base)
    if estimator == 'theta1':
        z = ((x <= y) & (xh <= y)).astype(np.float64)
    elif estimator == 'theta2':
        z = np.minimum(1 / x, 1 / xh)
    elif estimator == 'theta3':
        z = 0.5 * np.abs(frechet_cdf(x) - frechet_cdf(xh))
    else:
        raise ContractError(f"unknown estimator '{estimator}'")
    return z.reshape(_box_extents(base))


def _delta_scale(estimator, mean, y=None):
    # squared derivative of the estimate with respect to the summand mean
    if estimator == 'theta1':
        return (y / mean) ** 2
    if estimator == 'theta2':
        return mean ** -4
    return (2 / (1 - 2 * mean)) ** 4  # (theta + 1)^4


def sigma23_plugin(samples, h, estimator='theta2', L=None, y=None, base=None):
    """
    Plug-in asymptotic variance of an estimator from one large window or pooled replicate windows.

    sigma2^2 = theta^4 LRV(min-inverse field), sigma3^2 = (theta + 1)^4 LRV(madogram increments), and for theta1
    y^2 / p^2 LRV(indicator field), LRV summing the empirical autocovariances over |u| <= L.

    Args:
        samples (FieldSample | list): Samples sharing one box estimation window.
        h (array-like): Lag.
        estimator (str): 'theta1', 'theta2' or 'theta3'.
        L (int, optional): Bandwidth, default floor(|Lambda|^(1 / (2d))).
        y (float): Threshold of theta1.

    Returns:
        (Report): 'variance', 'bandwidth', 'sensitivity' at L/2 and 2L, 'floored' flag.
    """
    samples = samples if isinstance(samples, (list, tuple)) else [samples]
    fields = [summand_field(s, h, estimator, y, base) for s in samples]
    size = fields[0].size
    dim = fields[0].ndim
    L = default_bandwidth(size, dim) if L is None else L
    mean = float(np.mean([f.mean() for f in fields]))
    if estimator == 'theta1' and mean == 0:
        raise EstimatorError(f'p_hat = 0 at y={y}, the theta1 plug-in variance is undefined, raise y')
    scale = _delta_scale(estimator, mean, y)
    acov = autocovariances(fields)
    variance = scale * long_run_variance(fields, L, acov)
    sensitivity = {}
    for k in sorted({max(L // 2, 0), 2 * L}):
        try:
            sensitivity[k] = scale * long_run_variance(fields, k, acov)
        except ContractError:
            sensitivity[k] = None
    floored = variance < 0
    if floored:
        LOGGER.warning(f'WARNING ⚠️ negative plug-in variance {variance:.4g} for {estimator} at lag {list(h)}, '
                       f'floored at 0')
        variance = 0.0
    return Report('plug-in-variance', {
        'estimator': estimator,
        'variance': variance,
        'bandwidth': L,
        'sensitivity': sensitivity,
        'floored': floored,
        'replicates': len(fields)})


def _plugin_or_none(sample, h, estimator, y, base, flags):
    try:
        return sigma23_plugin(sample, h, estimator, y=y, base=base)['variance']
    except ContractError as e:
        LOGGER.debug(f'no plug-in variance: {e}')
        flags.append('no-variance')
        return None


# Estimators -----------------------------------------------------------------------------------------------------------


def theta_hat1(sample, h, y=None, spec=None, provider=None, level=0.95, base=None, variance=None):
    """
    Threshold estimator -y log p_hat(h, y).

    Args:
        sample (FieldSample): Field on a window covering t and t + h.
        h (array-like): Lag.
        y (float, optional): Threshold, default optimal_y() when `spec` is given and 1.0 otherwise.
        spec (ModelSpec, optional): Model supplying the sigma1^2 series variance.
        provider (Theta4Provider, optional): Four-point coefficients of the series.
        level (float): Confidence level.
        variance (float, optional): Precomputed sigma1^2 of `spec` at (h, y), shared across replicates.

    Returns:
        (EstimateReport): Estimate with analytic-series or plug-in-empirical variance.
    """
    base = base or sample.base
    if spec is not None and provider is None and (variance is None or y is None):
        provider = Theta4Provider(spec, h)
    y = (optimal_y(spec, h, provider) if spec is not None else 1.0) if y is None else y
    p = p_hat(sample, h, y, base)
    if p == 0:
        raise EstimatorError(f'p_hat = 0 at y={y:g}: no pair of the window is below the threshold, raise y')
    flags = []
    if spec is not None:
        method = 'analytic-series'
        variance = sigma1_sq(spec, h, y, provider).value if variance is None else variance
    else:
        variance, method = _plugin_or_none(sample, h, 'theta1', y, base, flags), 'plug-in-empirical'
    return EstimateReport('theta1', h, -y * math.log(p), variance, method, len(base), level, y, flags, {'p_hat': p})


def theta_hat2(sample, h, level=0.95, base=None):
    """Smith estimator |Lambda| / sum_t min(1 / eta(t), 1 / eta(t + h))."""
    base = base or sample.base
    x, xh = pair_values(sample, h, base)
    m = np.minimum(1 / x, 1 / xh)
    flags = ['small-sample'] if len(base) < SMALL_SAMPLE else []
    variance = _plugin_or_none(sample, h, 'theta2', None, base, flags)
    return EstimateReport('theta2', h, len(m) / float(m.sum()), variance, 'plug-in-empirical', len(base), level,
                          flags=flags, extra={'mean_min_inverse': float(m.mean())})


def theta_hat3(sample, h, level=0.95, base=None):
    """
    F-madogram estimator (1 + 2 nu) / (1 - 2 nu) = (|Lambda| + sum) / (|Lambda| - sum), with
    nu = sum / (2 |Lambda|) and sum = sum_t |F(eta(t)) - F(eta(t + h))|. nu is 1/6 for independent pairs, 0 at full
    dependence.
    """
    base = base or sample.base
    x, xh = pair_values(sample, h, base)
    s = float(np.abs(frechet_cdf(x) - frechet_cdf(xh)).sum())
    n = len(x)
    nu = 0.5 * s / n
    if nu >= 0.5:
        raise EstimatorError(f'madogram nu={nu:.4g} >= 1/2, the estimator diverges; the sample is not max-stable')
    flags = []
    variance = _plugin_or_none(sample, h, 'theta3', None, base, flags)
    return EstimateReport('theta3', h, (n + s) / (n - s), variance, 'plug-in-empirical', n, level,
                          flags=flags, extra={'nu': nu})


def estimate(sample, h, estimator, y=None, spec=None, provider=None, level=0.95, base=None, variance=None):
    """Dispatch to theta_hat1/2/3 by tag."""
    if estimator == 'theta1':
        return theta_hat1(sample, h, y, spec, provider, level, base, variance)
    if estimator == 'theta2':
        return theta_hat2(sample, h, level, base)
    if estimator == 'theta3':
        return theta_hat3(sample, h, level, base)
    raise ContractError(f"unknown estimator '{estimator}'")


def pair_theta_hat(x, y):
    """
    Pair coefficient across replicates, 1 / mean(min(1 / x, 1 / y)), with its delta-method standard error.

    Args:
        x, y (array-like): Paired positive field values, one pair per replicate.
    """
    m = np.minimum(1 / np.asarray(x, dtype=np.float64), 1 / np.asarray(y, dtype=np.float64))
    theta = 1 / m.mean()
    se = theta ** 2 * m.std(ddof=1) / math.sqrt(len(m)) if len(m) > 1 else math.inf
    return ThetaValue(theta, 'monte-carlo', se, n=len(m))


# Threshold estimator variance -----------------------------------------------------------------------------------------


def _series_terms(gap, y):
    return y * y * np.expm1(gap / y)


def sigma1_sq(spec, h, y, theta4_provider=None, tail_frac=0.01, max_radius=256):
    """
    Asymptotic variance of theta1, sigma1^2 = y^2 sum_t (exp[(2 theta(h) - theta({0, h, t, t + h})) / y] - 1).

    Shells |t| = r are added until the tail bound over |t| > r falls below `tail_frac` of the partial sum. The tail
    bound uses 2 theta(h) - theta4(t) <= 2 (2 - theta(t)) + (2 - theta(t + h)) + (2 - theta(t - h)), the cross-pair
    sum between {0, h} and {t, t + h}.

    Args:
        spec (ModelSpec): Model.
        h (array-like): Lag.
        y (float): Threshold, y > 0.
        theta4_provider (Theta4Provider, optional): Four-point coefficients, built from `spec` by default.
        tail_frac (float): Relative tail bound at which the series stops.
        max_radius (int): Largest shell radius.

    Returns:
        (SeriesValue): Partial sum of the signed terms floored at 0, radius, tail bound, number of terms, partial
            sums per shell and last decay ratio.
    """
    if not y > 0:
        raise ContractError(f'sigma1_sq() requires y > 0, got y={y}')
    h = np.asarray(h, dtype=np.int64).reshape(spec.dim)
    provider = theta4_provider or Theta4Provider(spec, h)
    theta = float(spec.theta_pair(h))
    bounds = {}  # shell radius -> summed term bound

    def shell_bound(r):
        if r not in bounds:
            t = shell(r, spec.dim)
            gap = 2 * gap_bounds(spec, t) + gap_bounds(spec, t + h) + gap_bounds(spec, t - h)
            bounds[r] = float(_series_terms(gap, y).sum())
        return bounds[r]

    def tail_bound(r):
        total, k, small = 0.0, r + 1, 0
        while small < 3:
            b = shell_bound(k)
            total += b
            small = small + 1 if b <= 1e-6 * total or b == 0 else 0
            k += 1
            if k > 8 * max_radius:
                raise SeriesError(f'sigma1^2 tail bound does not decay, shell bound ratio '
                                  f'{shell_bound(k - 1) / max(shell_bound(k - 2), 1e-300):.4g} at radius {k - 1}')
        return total

    partial, partials, n_terms = 0.0, [], 0
    for r in range(max_radius + 1):
        t_shell = shell(r, spec.dim)
        gap = 2 * gap_bounds(spec, t_shell) + gap_bounds(spec, t_shell + h) + gap_bounds(spec, t_shell - h)
        for t, g in zip(t_shell, gap):
            if g > 0:
                partial += float(_series_terms(2 * theta - float(provider(t)), y))
                n_terms += 1
        partials.append(partial)
        tail = tail_bound(r)
        if tail <= tail_frac * partial:
            decay = shell_bound(r + 1) / shell_bound(r) if shell_bound(r) > 0 else 0.0
            return SeriesValue(max(partial, 0.0), r, tail, n_terms, partials, decay)
    decay = shell_bound(max_radius + 1) / max(shell_bound(max_radius), 1e-300)
    raise SeriesError(f'sigma1^2 series not converged within radius {max_radius}: tail bound {tail:.4g} vs partial '
                      f'sum {partial:.4g}, shell decay ratio {decay:.4g}')


def sigma1_profile(spec, h, ys, theta4_provider=None):
    """
    sigma1^2 on a grid of thresholds with second divided differences as a convexity diagnostic.

    Returns:
        (Report): 'y', 'sigma1_sq', 'second_differences', 'convex' and the grid argmin 'y_min'.
    """
    provider = theta4_provider or Theta4Provider(spec, h)
    ys = np.sort(np.asarray(ys, dtype=np.float64))
    vals = np.array([sigma1_sq(spec, h, y, provider).value for y in ys])
    d1 = np.diff(vals) / np.diff(ys)
    d2 = 2 * np.diff(d1) / (ys[2:] - ys[:-2]) if len(ys) > 2 else np.zeros(0)
    i = int(np.argmin(vals))
    return Report('sigma1-profile', {
        'y': ys,
        'sigma1_sq': vals,
        'second_differences': d2,
        'convex': bool(np.all(d2 > 0)),
        'y_min': float(ys[i]),
        'interior': 0 < i < len(ys) - 1})


def optimal_y(spec, h, theta4_provider=None, y0=1.0, xtol=1e-3, max_doublings=30):
    """
    Threshold y* minimising sigma1^2(y), by golden-section search in log y over a bracket found by doubling.

    Args:
        xtol (float): Tolerance on log y, i.e. the relative tolerance of y*.

    Raises:
        BracketError: No bracket found, the error carries the evaluated profile.
    """
    provider = theta4_provider or Theta4Provider(spec, h)
    profile = {}

    def f(u):
        y = math.exp(u)
        if y not in profile:
            profile[y] = sigma1_sq(spec, h, y, provider).value
        return profile[y]

    a, b = math.log(y0), math.log(2 * y0)
    if f(b) > f(a):
        a, b = b, a  # walk towards smaller y
    for _ in range(max_doublings):
        c = 2 * b - a  # next point of the ladder, a doubling of y
        if f(c) > f(b):
            break
        a, b = b, c
    else:
        raise BracketError(f'no bracket of the sigma1^2 minimiser within {max_doublings} doublings from y={y0:g}',
                           dict(sorted(profile.items())))
    lo, hi = sorted((a, c))
    try:
        res = optimize.minimize_scalar(f, bracket=(lo, b, hi), method='golden', options={'xtol': xtol})
    except ValueError as e:
        raise BracketError(f'invalid bracket ({math.exp(lo):g}, {math.exp(b):g}, {math.exp(hi):g}): {e}',
                           dict(sorted(profile.items()))) from e
    y = math.exp(float(res.x))
    LOGGER.debug(f'optimal threshold y*={y:.6g} sigma1^2={res.fun:.6g} after {len(profile)} evaluations')
    return y
