# maxmix 📈, AGPL-3.0 license
"""
Upper bounds on the beta- and alpha-mixing coefficients of simple max-stable fields and the summability conditions of
the lattice central limit theorem.

    beta(S1, S2) <= 4 sum_{s1 in S1} sum_{s2 in S2} (2 - theta(s1, s2))                      (pairwise)
    beta(S1, S2) <= 2 [C(S1) + C(S2)] [theta(S1) + theta(S2) - theta(S1 u S2)]            (finite sets)
    alpha(S1, S2) <= beta(S1, S2) / 2
"""

import math

import numpy as np
from scipy import special, stats

from maxmix.engine.results import CltConditionReport, MixingBoundReport, Report
from maxmix.extremes.theta import (MC_CHUNK, box_union_volume, capital_C, gap_bounds, spectral_ratio_sample, theta_gap,
                                   theta_set)
from maxmix.fields.lattice import set_distance, shell, shell_size
from maxmix.utils import LOGGER
from maxmix.utils.errors import ContractError, SeriesError
from maxmix.utils.quadrature import nested_midpoint
from maxmix.utils.rng import make_rng

MC_WARN = 0.1  # relative Monte Carlo error of a bound that sets the 'mc-error' flag


def _set(S, dim):
    S = np.asarray(S, dtype=np.int64)
    return S.reshape(-1, dim) if S.ndim == 1 else S


def _check_disjoint(S1, S2):
    common = {tuple(s) for s in S1.tolist()} & {tuple(s) for s in S2.tolist()}
    if common:
        raise ContractError(f'S1 and S2 must be disjoint, common sites {sorted(common)}')


def beta_bound_countable(spec, S1, S2):
    """
    Pairwise bound 4 sum_{s1, s2} (2 - theta(s2 - s1)) over all cross pairs of two disjoint sets.

    Returns:
        (MixingBoundReport): 'cor2-countable' bound with the per-pair gaps as components.
    """
    S1, S2 = _set(S1, spec.dim), _set(S2, spec.dim)
    _check_disjoint(S1, S2)
    gaps = [theta_gap(spec, s2 - s1) for s1 in S1 for s2 in S2]
    pairs = [{'s1': s1, 's2': s2, 'gap': g} for (s1, s2), g in zip(((a, b) for a in S1.tolist()
                                                                     for b in S2.tolist()), gaps)]
    return MixingBoundReport('cor2-countable', S1, S2, 4 * sum(gaps), 0.0, {'pairs': pairs})


def set_gap(spec, S1, S2, n_draws=200_000, rng=None, rtol=1e-6, max_points=1 << 22):
    """
    theta(S1) + theta(S2) - theta(S1 u S2) = E[min(max_{S1} Y, max_{S2} Y)] with its error estimate.

    Singletons use the pair gap, Brown-Resnick sets common Monte Carlo draws, moving maxima quadrature of
    min(max_{S1} f, max_{S2} f), exact for indicator-box kernels and 0 for disjoint compact supports.
    """
    S1, S2 = _set(S1, spec.dim), _set(S2, spec.dim)
    if len(S1) == 1 and len(S2) == 1:
        return theta_gap(spec, S2[0] - S1[0], rtol, max_points), 0.0
    if spec.is_brown_resnick:
        rng = rng if rng is not None else make_rng(0, 'bounds')
        S = np.concatenate([S1, S2])
        vals = []
        for k in range(0, n_draws, MC_CHUNK):
            y = spectral_ratio_sample(spec.variogram, S, rng, min(MC_CHUNK, n_draws - k))
            vals.append(np.minimum(y[:, :len(S1)].max(1), y[:, len(S1):].max(1)))
        vals = np.concatenate(vals)
        return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals)))
    kernel = spec.kernel
    if kernel.is_compact and all(kernel.disjoint(b - a) for a in S1 for b in S2):
        return 0.0, 0.0
    if kernel.family == 'indicator-box':
        v = box_union_volume(S1, kernel.radius) + box_union_volume(S2, kernel.radius) - box_union_volume(
            np.concatenate([S1, S2]), kernel.radius)
        return float(v * kernel.norm), 0.0
    F1, F2 = S1.astype(np.float64), S2.astype(np.float64)

    def integrand(x):
        m1 = np.max([kernel.pdf(s - x) for s in F1], 0)
        m2 = np.max([kernel.pdf(s - x) for s in F2], 0)
        return np.minimum(m1, m2)

    S = np.concatenate([S1, S2])
    r = nested_midpoint(integrand, S.min(0) - kernel.radius, S.max(0) + kernel.radius, rtol, 1e-14, max_points)
    return r.value, r.error


def beta_bound_compact(spec, S1, S2, n_draws=20_000, rng=None, gap_draws=200_000, rtol=1e-6, max_points=1 << 22):
    """
    Set bound 2 [C(S1) + C(S2)] [theta(S1) + theta(S2) - theta(S1 u S2)] for disjoint finite sets.

    For singletons C = 1 exactly and the bound equals the pairwise bound 4 (2 - theta(h)).

    Args:
        spec (ModelSpec): Model.
        S1, S2 (array-like): Disjoint site sets.
        n_draws (int): Simulated fields per C(S).
        rng (np.random.Generator): Stream, split into the C(S1), C(S2) and set-gap streams.
        gap_draws (int): Monte Carlo draws of the Brown-Resnick set gap.

    Returns:
        (MixingBoundReport): 'thm2-compact' bound, flagged 'mc-error' when its error exceeds 10% of the bound.
    """
    S1, S2 = _set(S1, spec.dim), _set(S2, spec.dim)
    _check_disjoint(S1, S2)
    r1, r2, r3 = (rng if rng is not None else make_rng(0, 'bounds')).spawn(3)
    c1, c2 = capital_C(spec, S1, n_draws, r1), capital_C(spec, S2, n_draws, r2)
    gap, gap_err = set_gap(spec, S1, S2, gap_draws, r3, rtol, max_points)
    csum = c1.value + c2.value
    beta = 2 * csum * gap
    error = 2 * ((c1.error + c2.error) * gap + csum * gap_err)
    flags = []
    if beta > 0 and error > MC_WARN * beta:
        flags.append('mc-error')
        LOGGER.warning(f'WARNING ⚠️ Monte Carlo error {error:.3g} exceeds {MC_WARN:.0%} of the bound {beta:.3g}')
    return MixingBoundReport('thm2-compact', S1, S2, beta, error, {
        'C1': c1.to_dict(),
        'C2': c2.to_dict(),
        'set_gap': gap,
        'set_gap_error': gap_err}, flags)


def beta_bound_family(spec, family1, family2, n_draws=20_000, rng=None, gap_draws=200_000, rtol=1e-6,
                      max_points=1 << 22):
    """
    Family bound 2 sum_i sum_j [C(S1_i) + C(S2_j)] [theta(S1_i) + theta(S2_j) - theta(S1_i u S2_j)] for partitions
    S1 = u_i S1_i and S2 = u_j S2_j.
    """
    family1 = [_set(S, spec.dim) for S in family1]
    family2 = [_set(S, spec.dim) for S in family2]
    _check_disjoint(np.concatenate(family1), np.concatenate(family2))
    rng = rng if rng is not None else make_rng(0, 'bounds')
    streams = iter(rng.spawn(len(family1) + len(family2) + len(family1) * len(family2)))
    c1 = [capital_C(spec, S, n_draws, next(streams)) for S in family1]
    c2 = [capital_C(spec, S, n_draws, next(streams)) for S in family2]
    beta, error, terms = 0.0, 0.0, []
    for i, A in enumerate(family1):
        for j, B in enumerate(family2):
            gap, gap_err = set_gap(spec, A, B, gap_draws, next(streams), rtol, max_points)
            csum = c1[i].value + c2[j].value
            beta += 2 * csum * gap
            error += 2 * ((c1[i].error + c2[j].error) * gap + csum * gap_err)
            terms.append({'i': i, 'j': j, 'set_gap': gap, 'C_sum': csum})
    flags = ['mc-error'] if beta > 0 and error > MC_WARN * beta else []
    return MixingBoundReport('thm2-family', np.concatenate(family1), np.concatenate(family2), beta, error,
                             {'terms': terms}, flags)


def gamma_bound(spec, h):
    """Bound gamma(h) <= 2 (2 - theta(h)) of the bivariate exponent-measure dependence of a simple max-stable field."""
    return 2 * theta_gap(spec, h)


# Decay of the dependence bound ----------------------------------------------------------------------------------------


def _axis(m, dim):
    m = np.atleast_1d(np.asarray(m, dtype=np.float64))
    return np.concatenate([m[:, None], np.zeros((len(m), dim - 1))], 1)


def _gamma_fn(spec_or_gamma, dim):
    # sup_{|t| >= m} gamma bound, attained on the first axis for the isotropic families
    if callable(spec_or_gamma):
        return lambda m: np.array([float(spec_or_gamma(x)) for x in np.atleast_1d(m)])
    return lambda m: 2 * gap_bounds(spec_or_gamma, _axis(m, dim))


def _log_gamma_fn(spec_or_gamma, dim):
    # log of the decay bound, through log_ndtr for the gaussian-tail families so far lags do not underflow to -inf
    if not callable(spec_or_gamma):
        spec = spec_or_gamma
        if spec.is_brown_resnick:
            return lambda m: math.log(4) + special.log_ndtr(-0.5 * np.sqrt(spec.variogram(_axis(m, dim))))
        if spec.kernel.family == 'gaussian':
            return lambda m: math.log(4) + special.log_ndtr(-np.atleast_1d(m) / (2 * spec.kernel.bandwidth))
    gamma_fn = _gamma_fn(spec_or_gamma, dim)

    def log_gamma(m):
        with np.errstate(divide='ignore'):
            return np.log(gamma_fn(m))  # -inf where the bound vanishes

    return log_gamma


def clt_condition_check(spec, delta, d=None, fit_range=(8, 16, 32, 64, 128, 256, 512, 1024)):
    """
    Check the CLT decay condition gamma(h) = O(|h|^-b) with b > d max(2, (2 + delta) / delta).

    log gamma is fitted against log |h| by least squares on the largest decade of `fit_range`; when the local slopes
    keep steepening the decay is super-polynomial and b = inf. Gaussian tails (Brown-Resnick, gaussian kernels) are
    fitted on log_ndtr so they never underflow; a bound vanishing beyond a finite radius passes trivially.

    Args:
        spec (ModelSpec | callable): Model, or a function m -> gamma(m) for synthetic decay laws.
        delta (float): Moment exponent, delta > 0.
        d (int, optional): Lattice dimension, default the model's.
        fit_range (list): Geometric ladder of lags |h|.

    Returns:
        (CltConditionReport): Verdict, fitted b, its standard error and the partial-sum diagnostics.
    """
    if not delta > 0:
        raise ContractError(f'clt_condition_check() requires delta > 0, got {delta}')
    d = d or spec.dim
    lags = np.asarray(sorted(fit_range), dtype=np.float64)
    if len(lags) < 3 or lags[0] < 1:
        raise ContractError(f"'fit_range={list(fit_range)}' needs at least 3 lags >= 1")
    gamma_fn = _gamma_fn(spec, d)
    gamma = gamma_fn(lags)
    threshold = d * max(2.0, (2 + delta) / delta)

    # partial-sum diagnostics over shells, sup of the bound on each shell taken on the axis
    radii = np.arange(1, int(8 * lags[-1]) + 1)
    g_all = gamma_fn(radii)
    sizes = np.array([shell_size(int(r), d) for r in radii], dtype=np.float64)
    tails = np.cumsum((sizes * g_all)[::-1])[::-1]  # sum_{|h| >= m} gamma(h)
    moments = np.cumsum(radii ** (d - 1.0) * g_all ** (delta / (2 + delta)))
    tail_sums = [float(tails[int(m) - 1] / m ** (d - 1)) for m in lags]
    moment_sums = [float(moments[int(m) - 1]) for m in lags]

    log_gamma = _log_gamma_fn(spec, d)(lags)
    if np.isneginf(log_gamma[-1]):  # compact support, the bound is exactly 0 beyond a finite radius
        return CltConditionReport(True, math.inf, 0.0, threshold, delta, d, lags.tolist(), gamma.tolist(), tail_sums,
                                  moment_sums, trivial=True)
    pos = np.isfinite(log_gamma)
    top = pos & (lags >= lags[-1] / 10)
    x, y = np.log(lags[top]), log_gamma[top]
    local = np.diff(log_gamma[pos]) / np.diff(np.log(lags[pos]))
    steepening = len(local) >= 2 and bool(np.all(np.diff(local) < -0.01 * np.abs(local[1:])))
    if steepening:
        b, b_se = math.inf, 0.0
    else:
        fit = stats.linregress(x, y) if len(x) >= 2 else None
        b, b_se = (-fit.slope, fit.stderr) if fit is not None else (math.nan, math.inf)
    passed = bool(b > threshold)
    report = CltConditionReport(passed, b, b_se, threshold, delta, d, lags.tolist(), gamma.tolist(), tail_sums,
                                moment_sums)
    LOGGER.debug(report.verdict)
    return report


# Bolthausen coefficients ----------------------------------------------------------------------------------------------


def _axis_gap(spec, m):
    return float(gap_bounds(spec, _axis(m, spec.dim))[0])


def _lattice_tail(spec, m, max_radius=1 << 14):
    # sum_{|t| >= m} (2 - theta(t)) by sup-norm shells
    total, r, small = 0.0, m, 0
    while small < 3:
        s = float(gap_bounds(spec, shell(r, spec.dim)).sum())
        total += s
        small = small + 1 if s == 0 or s <= 1e-12 * total else 0
        r += 1
        if r > max_radius:
            raise SeriesError(f'sum of 2 - theta(t) over |t| >= {m} does not converge by radius {max_radius}')
    return total


def bolthausen_alpha_bound(spec, k, l, m, lag=None):
    """
    Bound on alpha_{k,l}(m) = sup{alpha(S1, S2): |S1| = k, |S2| = l, d(S1, S2) >= m}.

    Finite l gives 2 k l sup_{|t| >= m} (2 - theta(t)); l = inf gives 2 k sum_{|t| >= m} (2 - theta(t)). With `lag`
    the bound is lifted to the pair field X(t) = g(eta(t), eta(t + lag)) through alpha_{2k, 2l}(m - |lag|).
    """
    if k < 1 or (l is not None and l < 1) or m < 1:
        raise ContractError(f'bolthausen_alpha_bound() requires k, l >= 1 and m >= 1, got k={k} l={l} m={m}')
    if lag is not None:
        reach = int(np.abs(np.asarray(lag)).max())
        if m - reach < 1:
            raise ContractError(f'distance m={m} must exceed the lag length {reach}')
        k, l, m = 2 * k, None if l is None or math.isinf(l) else 2 * l, m - reach
    if l is None or math.isinf(l):
        return 2 * k * _lattice_tail(spec, m)
    return 2 * k * l * _axis_gap(spec, m)


def bolthausen_conditions(spec, delta, radii, lag=None):
    """
    Evaluate the three summability conditions of the mixing CLT from bolthausen_alpha_bound():

        (i)   m^d alpha_{1,inf}(m) -> 0
        (ii)  sum_m m^(d-1) alpha_{k,l}(m) < inf for k + l <= 4
        (iii) sum_m m^(d-1) alpha_{1,1}(m)^(delta / (2 + delta)) < inf

    Partial sums are reported at each radius; a sum counts as converged when its last increment is below 1e-3 of
    its value.
    """
    d = spec.dim
    radii = sorted(int(r) for r in radii)
    reach = 0 if lag is None else int(np.abs(np.asarray(lag)).max())
    ms = np.arange(reach + 1, radii[-1] + 1)
    first = [m ** d * bolthausen_alpha_bound(spec, 1, None, m, lag) for m in radii if m > reach]
    cond1 = bool(first and first[-1] <= 1e-3 and all(b <= a for a, b in zip(first[len(first) // 2:],
                                                                              first[len(first) // 2 + 1:])))

    def partial(values):
        s = np.cumsum(values)
        at = [float(s[r - reach - 1]) for r in radii if r > reach]
        last = float(values[-1]) if len(values) else 0.0
        return at, bool(s[-1] == 0 or last <= 1e-3 * s[-1])

    sums2, cond2 = {}, True
    for k, l in ((1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (2, 2)):
        vals = np.array([m ** (d - 1) * bolthausen_alpha_bound(spec, k, l, m, lag) for m in ms])
        sums2[f'{k},{l}'], ok = partial(vals)
        cond2 &= ok
    a11 = np.array([bolthausen_alpha_bound(spec, 1, 1, m, lag) for m in ms])
    sums3, cond3 = partial(ms ** (d - 1.0) * a11 ** (delta / (2 + delta)))
    return Report('bolthausen-conditions', {
        'radii': [r for r in radii if r > reach],
        'delta': delta,
        'lag': None if lag is None else list(lag),
        'decay_1_inf': first,
        'sums_kl': sums2,
        'sums_moment': sums3,
        'conditions': [cond1, cond2, cond3]}, passed=cond1 and cond2 and cond3)


def bounds_ladder(spec, distances, set1=None, n_draws=20_000, rng=None, gap_draws=200_000):
    """
    Pairwise and set bounds along a ladder of distances, S2 = S1 shifted by m along the first axis.

    Returns:
        (list): One row per distance with the pairwise beta, the set beta, their alpha bounds and the errors.
    """
    S1 = np.zeros((1, spec.dim), dtype=np.int64) if set1 is None else _set(set1, spec.dim)
    rng = rng if rng is not None else make_rng(0, 'bounds')
    streams = rng.spawn(len(distances))
    rows = []
    for m, g in zip(distances, streams):
        width = int(S1[:, 0].max() - S1[:, 0].min())
        S2 = S1 + _axis([m + width], spec.dim).astype(np.int64)[0]
        pair = beta_bound_countable(spec, S1, S2)
        comp = beta_bound_compact(spec, S1, S2, n_draws, g, gap_draws)
        rows.append({
            'm': int(m),
            'distance': set_distance(S1, S2),
            'beta_pairwise': pair.beta,
            'alpha_pairwise': pair.alpha,
            'beta_set': comp.beta,
            'alpha_set': comp.alpha,
            'beta_set_error': comp.error,
            'gamma_bound': gamma_bound(spec, _axis([m], spec.dim)[0].astype(np.int64)),
            'flags': ';'.join(comp.flags)})
    return rows
