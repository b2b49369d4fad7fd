# maxmix 📈, AGPL-3.0 license
"""
Extremal coefficients theta(h), theta(S), the constant C(S) and the dependence function tau_a(h).

    P[max_{s in S} eta(s) <= y] = exp(-theta(S) / y),    theta(S) = E[max_{s in S} Y(s)]

Brown-Resnick pairs and gaussian-kernel pairs have closed forms, indicator-box kernels an exact union volume; other
sets use nested midpoint quadrature (moving maxima) or Monte Carlo over the spectral functions (Brown-Resnick).
"""

import math
import zlib

import numpy as np
from scipy import special

from maxmix.engine.results import MonteCarloValue, ThetaValue
from maxmix.fields.lattice import LatticeWindow
from maxmix.utils import LOGGER
from maxmix.utils.errors import ContractError, EstimatorError
from maxmix.utils.quadrature import nested_midpoint
from maxmix.utils.rng import make_rng, stream_key

SQRT2 = math.sqrt(2)
MC_CHUNK = 10_000


def _sites(S, dim=None):
    S = np.asarray(S, dtype=np.int64)
    if S.ndim == 1:
        S = S.reshape(-1, dim) if dim else S[:, None]
    if len(S) == 0:
        raise ContractError('extremal coefficients need a nonempty site set')
    return np.unique(S, axis=0)


def _lag(h, dim):
    return np.asarray(h, dtype=np.int64).reshape(dim)


# Brown-Resnick --------------------------------------------------------------------------------------------------------


def theta_gap_br(variogram, h):
    """2 - theta(h) = erfc(sqrt(V(h)) / (2 sqrt(2))), accurate far into the tail."""
    return float(special.erfc(math.sqrt(float(variogram(h)[0])) / (2 * SQRT2)))


def theta_pair_br(variogram, h):
    """theta(h) = 2 Psi(sqrt(V(h)) / 2) with Psi the standard normal CDF."""
    return ThetaValue(2.0 - theta_gap_br(variogram, h))


def spectral_ratio_sample(variogram, S, rng, size):
    """
    Draw `size` normalised spectral functions on S, an (size, |S|) array of |S| Y_J(s) / sum_t Y_J(t).

    J is uniform on S and Y_J(s) = exp(W(s - s_J) - V(s - s_J) / 2) is pinned at s_J. Rows sum to |S| and every
    entry lies in [0, |S|], so E[max_s] = theta(S) with a bounded integrand however far apart the sites are.
    """
    from maxmix.fields.simulate import gaussian_increments_sample
    S = np.asarray(S, dtype=np.int64)
    m = len(S)
    pins = rng.integers(m, size=size)
    out = np.empty((size, m))
    for j in range(m):
        rows = np.flatnonzero(pins == j)
        if not len(rows):
            continue
        D = S - S[j]
        log_y = gaussian_increments_sample(variogram, D, rng, size=len(rows)) - 0.5 * variogram(D)
        y = np.exp(log_y - log_y.max(1, keepdims=True))
        out[rows] = m * y / y.sum(1, keepdims=True)
    return out


def theta_set_br_mc(variogram, S, n_draws, rng, chunk=MC_CHUNK):
    """Monte Carlo theta(S) = |S| E[max_s Y_J(s) / sum_s Y_J(s)] and its standard error, see spectral_ratio_sample()."""
    if n_draws < 1000:
        raise ContractError(f'theta_set_br_mc() requires n_draws >= 1000, got {n_draws}')
    S = np.asarray(S, dtype=np.int64)
    S = S if S.ndim == 2 else S[:, None]
    total, total_sq = 0.0, 0.0
    for k in range(0, n_draws, chunk):
        m = spectral_ratio_sample(variogram, S, rng, min(chunk, n_draws - k)).max(1)
        total += float(m.sum())
        total_sq += float((m * m).sum())
    mean = total / n_draws
    var = max(total_sq / n_draws - mean * mean, 0.0) * n_draws / (n_draws - 1)
    return ThetaValue(mean, 'monte-carlo', math.sqrt(var / n_draws), n=n_draws)


# Moving maxima --------------------------------------------------------------------------------------------------------


def box_union_volume(S, radius):
    """Exact volume of the union of the sup-norm boxes s + [-radius, radius]^d by coordinate compression."""
    S = np.asarray(S, dtype=np.float64)
    edges = [np.unique(np.concatenate([S[:, k] - radius, S[:, k] + radius])) for k in range(S.shape[1])]
    mids = np.stack(np.meshgrid(*[(e[1:] + e[:-1]) / 2 for e in edges], indexing='ij'), -1).reshape(-1, S.shape[1])
    sizes = np.prod(np.stack(np.meshgrid(*[np.diff(e) for e in edges], indexing='ij'), -1).reshape(-1, S.shape[1]), 1)
    covered = np.zeros(len(mids), dtype=bool)
    for s in S:
        covered |= np.abs(mids - s).max(1) < radius
    return float(sizes[covered].sum())


def theta_gap_mm(kernel, h, rtol=1e-6, max_points=1 << 22):
    """2 - theta(h) of a moving maximum, exact where a closed form exists."""
    h = np.asarray(h, dtype=np.float64)
    if not np.any(h):
        return 1.0
    if kernel.disjoint(h):
        return 0.0
    if kernel.family == 'gaussian':
        return float(special.erfc(math.sqrt(float(np.sum(h * h))) / (2 * kernel.bandwidth * SQRT2)))
    if kernel.family == 'indicator-box':
        overlap = np.prod(np.clip(2 * kernel.radius - np.abs(h), 0, None))
        return float(overlap * kernel.norm)
    S = np.stack([np.zeros_like(h), h])  # min-integral: 2 - theta = int min(f(x), f(x - h)) dx
    lo, hi = S.min(0) - kernel.radius, S.max(0) + kernel.radius
    r = nested_midpoint(lambda x: np.minimum(kernel.pdf(x), kernel.pdf(x - h)), lo, hi, rtol, 1e-12, max_points)
    return r.value


def theta_set_mm(kernel, S, rtol=1e-6, max_points=1 << 22, method='auto'):
    """
    theta(S) = int max_{s in S} f(s - x) dx for a moving-maximum kernel.

    Args:
        kernel (KernelSpec): Kernel density.
        S (array-like): (n, d) sites.
        rtol (float): Relative tolerance of the nested midpoint quadrature.
        max_points (int): Largest quadrature grid.
        method (str): 'auto' uses closed forms when available, 'quadrature' forces quadrature.

    Returns:
        (ThetaValue): Coefficient, error estimate and method tag.
    """
    S = _sites(S, kernel.dim)
    if len(S) == 1:
        return ThetaValue(1.0)
    if method == 'auto':
        if kernel.family == 'indicator-box':
            return ThetaValue(box_union_volume(S, kernel.radius) * kernel.norm)
        pairs = [(i, j) for i in range(len(S)) for j in range(i + 1, len(S))]
        if kernel.is_compact and all(kernel.disjoint(S[j] - S[i]) for i, j in pairs):
            return ThetaValue(float(len(S)))
        if kernel.family == 'gaussian' and len(S) == 2:
            return ThetaValue(2.0 - theta_gap_mm(kernel, S[1] - S[0]))
    lo, hi = S.min(0) - kernel.radius, S.max(0) + kernel.radius
    Sf = S.astype(np.float64)

    def integrand(x):
        out = kernel.pdf(Sf[0] - x)
        for s in Sf[1:]:
            out = np.maximum(out, kernel.pdf(s - x))
        return out

    r = nested_midpoint(integrand, lo, hi, rtol, 1e-12, max_points)
    return ThetaValue(r.value, 'quadrature', r.error, r.converged, n=r.points)


def theta_set_mm_mc(kernel, S, n_draws, rng, chunk=MC_CHUNK):
    """
    Monte Carlo theta(S) for a moving maximum by mixture importance sampling.

    X is drawn from q = |S|^-1 sum_s f(s - .), then theta(S) = E_q[max_s f(s - X) / mean_s f(s - X)].
    """
    S = _sites(S, kernel.dim).astype(np.float64)
    total, total_sq = 0.0, 0.0
    for k in range(0, n_draws, chunk):
        n = min(chunk, n_draws - k)
        x = S[rng.integers(len(S), size=n)] + kernel.sample(rng, n)
        f = kernel.pdf(S[None, :, :] - x[:, None, :])
        ratio = f.max(1) / f.mean(1)
        total += float(ratio.sum())
        total_sq += float((ratio * ratio).sum())
    mean = total / n_draws
    var = max(total_sq / n_draws - mean * mean, 0.0) * n_draws / max(n_draws - 1, 1)
    return ThetaValue(mean, 'monte-carlo', math.sqrt(var / n_draws), n=n_draws)


# Dispatch -------------------------------------------------------------------------------------------------------------


def theta_pair(spec, h, rtol=1e-6, max_points=1 << 22):
    """Pair extremal coefficient theta(h) of a model."""
    h = _lag(h, spec.dim)
    if not np.any(h):
        return ThetaValue(1.0)
    if spec.is_brown_resnick:
        return theta_pair_br(spec.variogram, h)
    return theta_set_mm(spec.kernel, np.stack([np.zeros_like(h), h]), rtol, max_points)


def theta_gap(spec, h, rtol=1e-6, max_points=1 << 22):
    """2 - theta(h) without cancellation, 0.0 exactly for disjoint compact kernels."""
    h = _lag(h, spec.dim)
    if spec.is_brown_resnick:
        return theta_gap_br(spec.variogram, h)
    return theta_gap_mm(spec.kernel, h, rtol, max_points)


def theta_set(spec, S, n_draws=200_000, rng=None, rtol=1e-6, max_points=1 << 22, method='auto'):
    """
    Set extremal coefficient theta(S) of a model: closed form for Brown-Resnick pairs, Monte Carlo for larger
    Brown-Resnick sets, theta_set_mm() for moving maxima ('monte-carlo' selects theta_set_mm_mc()).
    """
    S = _sites(S, spec.dim)
    if len(S) == 1:
        return ThetaValue(1.0)
    if spec.is_brown_resnick:
        if len(S) == 2 and method != 'monte-carlo':
            return theta_pair_br(spec.variogram, S[1] - S[0])
        return theta_set_br_mc(spec.variogram, S, n_draws, rng if rng is not None else make_rng(0, 'theta'))
    if method == 'monte-carlo':
        return theta_set_mm_mc(spec.kernel, S, n_draws, rng if rng is not None else make_rng(0, 'theta'))
    return theta_set_mm(spec.kernel, S, rtol, max_points, method)


def capital_C(spec, S, n_draws=20_000, rng=None, trunc=None):
    """
    C(S) = E[max_{s in S} 1 / eta(s)] by simulation, exactly 1 for a singleton.

    Fields are simulated on S itself; truncation-flagged draws are excluded and counted.
    """
    from maxmix.fields.simulate import simulate
    S = _sites(S, spec.dim)
    if len(S) == 1:
        return MonteCarloValue(1.0, 0.0, 0)
    window = LatticeWindow.from_sites(S - S[0])
    streams = (rng if rng is not None else make_rng(0, 'capital-c')).spawn(n_draws)
    vals, flagged = [], 0
    for g in streams:
        sample = simulate(spec, window, g, trunc)
        if sample.truncated:
            flagged += 1
            continue
        vals.append(float((1.0 / sample.values).max()))
    if not vals:
        raise EstimatorError(f'all {n_draws} fields for C(S) hit the truncation cap, raise max_atoms')
    vals = np.asarray(vals)
    se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else math.inf
    return MonteCarloValue(vals.mean(), se, len(vals), flagged)


def capital_C_bound(spec, S, n_draws=200_000, rng=None, rtol=1e-6, max_points=1 << 22):
    """
    Analytic upper bound C(S) <= 1 / int min_{s in S} f(s) sigma(df).

    Quadrature of min_s f(s - x) for moving maxima (exact box intersection for indicator-box kernels), Monte Carlo
    of E[min_s Y(s)] over normalised spectral functions for Brown-Resnick; inf when the integral vanishes.
    """
    S = _sites(S, spec.dim)
    if len(S) == 1:
        return ThetaValue(1.0)
    if spec.is_brown_resnick:
        rng = rng if rng is not None else make_rng(0, 'capital-c')
        mins = np.concatenate([spectral_ratio_sample(spec.variogram, S, rng, min(MC_CHUNK, n_draws - k)).min(1)
                               for k in range(0, n_draws, MC_CHUNK)])
        m, se = float(mins.mean()), float(mins.std(ddof=1) / math.sqrt(len(mins)))
        return ThetaValue(1 / m if m > 0 else math.inf, 'monte-carlo', se / m ** 2 if m > 0 else math.inf, n=n_draws)
    kernel = spec.kernel
    if kernel.family == 'indicator-box':
        side = np.clip(2 * kernel.radius - (S.max(0) - S.min(0)), 0, None)
        m = float(np.prod(side)) * kernel.norm
        return ThetaValue(1 / m if m > 0 else math.inf)
    Sf = S.astype(np.float64)

    def integrand(x):
        out = kernel.pdf(Sf[0] - x)
        for s in Sf[1:]:
            out = np.minimum(out, kernel.pdf(s - x))
        return out

    r = nested_midpoint(integrand, S.min(0) - kernel.radius, S.max(0) + kernel.radius, rtol, 1e-14, max_points)
    if r.value <= 0:
        return ThetaValue(math.inf, 'quadrature', 0.0, r.converged)
    return ThetaValue(1 / r.value, 'quadrature', r.error / r.value ** 2, r.converged, n=r.points)


# Dependence function --------------------------------------------------------------------------------------------------


def tau_a(spec, h, a):
    """tau_a(h) = log P[eta(0) <= a, eta(h) <= a] - 2 log P[eta(0) <= a] = (2 - theta(h)) / a."""
    if not a > 0:
        raise ContractError(f'tau_a() requires a > 0, got a={a}')
    return theta_gap(spec, h) / a


def tau_a_empirical(x, y, a):
    """Empirical tau_a from paired values: log P[x <= a, y <= a] - log P[x <= a] - log P[y <= a]."""
    if not a > 0:
        raise ContractError(f'tau_a_empirical() requires a > 0, got a={a}')
    x, y = np.asarray(x), np.asarray(y)
    px, py, pxy = (x <= a).mean(), (y <= a).mean(), ((x <= a) & (y <= a)).mean()
    if pxy == 0:
        raise EstimatorError(f'no paired values below a={a}, raise a')
    return float(math.log(pxy) - math.log(px) - math.log(py))


# Four-point coefficients ----------------------------------------------------------------------------------------------


class Theta4Provider:
    """
    Cached theta({0, h, t, t + h}) as a function of t, for the lattice series of the threshold estimator variance.

    By stationarity the set at -t is the set at t shifted, so both share one evaluation. Monte Carlo evaluations draw
    from a stream derived from (seed, 'theta4', t).

    Args:
        spec (ModelSpec): Model.
        h (array-like): Lag h.
        method (str): 'auto', 'quadrature' or 'monte-carlo'. 'auto' is Monte Carlo for Brown-Resnick and exact or
            quadrature for moving maxima.
        n_draws (int): Monte Carlo draws per coefficient.
        seed (int): Root seed of the Monte Carlo streams.
    """

    def __init__(self, spec, h, method='auto', n_draws=200_000, seed=0, rtol=1e-6, max_points=1 << 22):
        self.spec = spec
        self.h = _lag(h, spec.dim)
        self.method = ('monte-carlo' if spec.is_brown_resnick else 'quadrature') if method == 'auto' else method
        if spec.is_brown_resnick and self.method == 'quadrature':
            LOGGER.warning("WARNING ⚠️ no quadrature for Brown-Resnick sets, using theta4_method='monte-carlo'")
            self.method = 'monte-carlo'
        self.n_draws = n_draws
        self.seed = seed
        self.rtol = rtol
        self.max_points = max_points
        self.cache = {}

    def _stream(self, t):
        entropy = stream_key(self.seed, 'theta4') + [zlib.crc32(np.asarray(t, dtype=np.int64).tobytes())]
        return np.random.default_rng(np.random.SeedSequence(entropy))

    def __call__(self, t):
        t = _lag(t, self.spec.dim)
        key = max(tuple(t.tolist()), tuple((-t).tolist()))
        if key not in self.cache:
            t = np.asarray(key, dtype=np.int64)
            S = np.unique(np.stack([np.zeros_like(t), self.h, t, t + self.h]), axis=0)
            if len(S) <= 2 or (not self.spec.is_brown_resnick and self.method == 'quadrature'):
                value = theta_set(self.spec, S, rtol=self.rtol, max_points=self.max_points)
            else:
                value = theta_set(self.spec, S, self.n_draws, self._stream(t), method='monte-carlo')
            self.cache[key] = value
        return self.cache[key]


def theta4_provider(spec, h, args=None, **kwargs):
    """Build the Theta4Provider of a model from run arguments."""
    if args is not None:
        kwargs = {
            'method': args.theta4_method,
            'n_draws': args.theta4_draws,
            'seed': args.seed,
            'rtol': args.quad_rtol,
            'max_points': args.quad_max_points,
            **kwargs}
    return Theta4Provider(spec, h, **kwargs)


def gap_bounds(spec, H):
    """
    Upper bounds of 2 - theta(t) for each row t of H, vectorised: exact for Brown-Resnick, gaussian and indicator-box
    kernels, 1 inside the kernel diameter and 0 beyond it for compact-gaussian kernels.
    """
    H = np.asarray(H, dtype=np.float64).reshape(-1, spec.dim)
    if spec.is_brown_resnick:
        return special.erfc(np.sqrt(spec.variogram(H)) / (2 * SQRT2))
    k = spec.kernel
    if k.family == 'gaussian':
        return special.erfc(np.sqrt((H * H).sum(1)) / (2 * k.bandwidth * SQRT2))
    if k.family == 'indicator-box':
        return np.prod(np.clip(2 * k.radius - np.abs(H), 0, None), 1) * k.norm
    return (np.sqrt((H * H).sum(1)) < k.diameter).astype(np.float64)
