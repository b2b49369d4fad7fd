# maxmix 📈, AGPL-3.0 license
"""
Series simulation of simple max-stable fields from their Poisson point process representations.

    eta(t) = max_i Z_i Y_i(t),    Z_i = 1 / Gamma_i,    Gamma_i = E_1 + ... + E_i

Brown-Resnick:  Y_i(t) = exp(W_i(t) - V(t) / 2), stopped by a pilot-quantile bias certificate.
Moving maximum: Y_i(t) = f(t - U_i) * |B|, U_i uniform on the inflated bounding box B, stopped exactly.
"""

import math
from functools import lru_cache
from itertools import islice

import numpy as np
from scipy import linalg

from maxmix.engine.results import FieldSample, PointProcessSample
from maxmix.fields.models import TruncationPolicy
from maxmix.utils import LOGGER
from maxmix.utils.errors import ConfigError, ContractError, ModelError
from maxmix.utils.rng import as_generator, make_rng
from maxmix.utils.stats import frechet_cdf, ks_statistic, two_sample_test

MAX_DENSE_SITES = 4096  # largest site set factorised densely, 64 x 64
BR_BATCH = 64  # Gaussian paths drawn per batch
MM_BATCH = 1024  # moving-maximum atoms drawn per batch
EXP_BLOCK = 256  # exponentials drawn per block by frechet_points()


def frechet_points(rng, count_limit=None, scale=1.0, start=0.0):
    """
    Lazily enumerate the points Z_1 > Z_2 > ... of a Poisson process on (0, inf) with intensity scale * z^-2 dz.

    Args:
        rng (np.random.Generator): Stream of the unit exponentials E_j.
        count_limit (int, optional): Stop after this many points, unlimited by default.
        scale (float): Intensity scale, Z_i = scale / Gamma_i.
        start (float): Gamma_0, to continue an enumeration.

    Yields:
        (float): Z_i = scale / (start + E_1 + ... + E_i).
    """
    if count_limit is not None and count_limit < 1:
        raise ContractError(f'frechet_points() requires count_limit >= 1, got {count_limit}')
    gamma, n = float(start), 0
    while True:
        e = np.asarray(rng.exponential(size=EXP_BLOCK), dtype=np.float64)
        for x in e[e > 0]:  # exact zeros would repeat a point
            gamma += float(x)
            yield scale / gamma
            n += 1
            if count_limit is not None and n >= count_limit:
                return


# Gaussian fields with stationary increments ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _factor(variogram, shape, sites_bytes):
    sites = np.frombuffer(sites_bytes, dtype=np.int64).reshape(shape)
    keep = np.any(sites != 0, axis=1)  # W(0) = 0 is pinned, the origin row is identically 0
    s = sites[keep]
    cov = variogram.covariance(s, s) if len(s) else np.zeros((0, 0))
    n = len(s)
    trace = float(np.trace(cov))
    if n == 0 or trace == 0:
        return np.zeros((n, n)), keep
    jitter = 1e-10 * trace / n
    try:
        factor = linalg.cholesky(cov + jitter * np.eye(n), lower=True)
    except linalg.LinAlgError:
        w, v = linalg.eigh(cov)
        if w[0] < -1e-8 * trace / n:
            raise ModelError(f'increment covariance is not positive semi-definite, smallest eigenvalue {w[0]:.3e} '
                             f'(jitter {jitter:.3e})') from None
        factor = v * np.sqrt(np.clip(w, 0, None))
    factor.flags.writeable = False
    return factor, keep


def gaussian_factor(variogram, sites):
    """
    Factor L with L L^T = Cov(W(s), W(t)) over the non-origin sites, jittered by 1e-10 * trace / n.

    Returns:
        factor (np.ndarray): (m, m) lower factor, eigen factor when Cholesky fails on a semi-definite matrix.
        keep (np.ndarray): Boolean mask of the non-origin rows of `sites`.
    """
    sites = np.ascontiguousarray(np.asarray(sites, dtype=np.int64))
    if len(sites) > MAX_DENSE_SITES:
        raise ConfigError(f'{len(sites)} sites exceed the dense factorisation limit of {MAX_DENSE_SITES} sites '
                          f'(a 64 x 64 window in 2-D) for Brown-Resnick fields, use a smaller window or a '
                          f'moving-maximum model')
    return _factor(variogram, sites.shape, sites.tobytes())


def gaussian_increments_sample(variogram, sites, rng, size=None):
    """
    Draw W on `sites` with W(0) = 0 and Cov(W(s), W(t)) = (V(s) + V(t) - V(s - t)) / 2.

    Args:
        variogram (VariogramSpec): Variogram V.
        sites (np.ndarray): (n, d) integer sites, the origin may or may not be among them.
        rng (np.random.Generator): Gaussian stream.
        size (int, optional): Number of independent draws.

    Returns:
        (np.ndarray): (n,) values, or (size, n) when `size` is given.
    """
    sites = np.asarray(sites, dtype=np.int64)
    if sites.ndim == 1:
        sites = sites[:, None]
    if len(sites) == 0:
        raise ContractError('gaussian_increments_sample() needs a nonempty site set')
    factor, keep = gaussian_factor(variogram, sites)
    k = 1 if size is None else size
    w = np.zeros((k, len(sites)))
    normals = rng.standard_normal((k, factor.shape[0]))
    w[:, keep] = normals @ factor.T
    return w[0] if size is None else w


def _spectral_max(variogram, window, rng, draws, chunk=256):
    half_v = 0.5 * variogram(window.sites)
    out = []
    for k in range(0, draws, chunk):
        w = gaussian_increments_sample(variogram, window.sites, rng, size=min(chunk, draws - k))
        out.append(np.exp(w - half_v).max(1))
    return np.concatenate(out)


@lru_cache(maxsize=32)
def spectral_quantile(variogram, window, draws=2000, quantile=0.9999, seed=0):
    """Pilot estimate of the `quantile` of max_t exp(W(t) - V(t) / 2) over the window, from its own stream."""
    q = float(np.quantile(_spectral_max(variogram, window, make_rng(seed, 'pilot'), draws), quantile))
    LOGGER.debug(f'pilot quantile {quantile} of the spectral maximum over {len(window)} sites: {q:.6g}')
    return q


def simulate_brown_resnick(spec, window, rng, trunc=None, retain=False):
    """
    Simulate a Brown-Resnick field on `window`.

    Atoms are added until Z_i * q < bias_tol * min_t eta(t), q the pilot quantile of the spectral maximum, so the
    residual atoms exceed the current field with probability at most 1 - pilot_quantile relative to bias_tol. Hitting
    `max_atoms` first returns the sample with `truncated=True`.

    Args:
        spec (ModelSpec): Brown-Resnick model.
        window (LatticeWindow): Sites to simulate.
        rng (np.random.Generator | int): Replicate stream, split into the Frechet and the Gaussian streams.
        trunc (TruncationPolicy): Stopping controls.
        retain (bool): Keep the atoms as a PointProcessSample in `sample.process`.

    Returns:
        (FieldSample): The field.
    """
    trunc = trunc or TruncationPolicy()
    rng_z, rng_w = as_generator(rng).spawn(2)
    q = spectral_quantile(spec.variogram, window, trunc.pilot_draws, trunc.pilot_quantile, trunc.pilot_seed)
    half_v = 0.5 * spec.variogram(window.sites)
    points = frechet_points(rng_z)
    eta = np.zeros(len(window))
    used, stopped, zs, paths = 0, False, [], []
    z_stop = math.inf
    while not stopped and used < trunc.max_atoms:
        z = np.fromiter(islice(points, BR_BATCH), dtype=np.float64, count=BR_BATCH)
        w = gaussian_increments_sample(spec.variogram, window.sites, rng_w, size=BR_BATCH)
        n = min(BR_BATCH, trunc.max_atoms - used)
        running = np.maximum(eta, np.maximum.accumulate(z[:n, None] * np.exp(w[:n] - half_v), axis=0))
        floor = np.concatenate([[eta.min()], running[:-1].min(1)])  # min eta before atom i
        stop = np.flatnonzero(z[:n] * q < trunc.bias_tol * floor)
        k = int(stop[0]) if len(stop) else n
        if k:
            eta = running[k - 1]
        if retain:
            zs.append(z[:k])
            paths.append(w[:k])
        used += k
        stopped = bool(len(stop))
        z_stop = z[k] if k < n else z[n - 1]
    diagnostic = z_stop * q / (trunc.bias_tol * eta.min()) if eta.min() > 0 else math.inf
    if not stopped:
        LOGGER.debug(f'brown-resnick simulation hit max_atoms={trunc.max_atoms}, bias ratio {diagnostic:.3g}')
    process = None
    if retain:
        z = np.concatenate(zs) if zs else np.zeros(0)
        process = PointProcessSample(spec,
                                     z,
                                     1 / z,
                                     paths=np.concatenate(paths) if paths else np.zeros((0, len(window))),
                                     window=window,
                                     truncated=not stopped,
                                     stopped_by='certificate' if stopped else 'max_atoms')
    return FieldSample(window, eta, atoms_used=used, truncated=not stopped, diagnostic=diagnostic,
                       model=spec.describe(), process=process)


# Moving maxima --------------------------------------------------------------------------------------------------------


def location_box(kernel, window):
    """Bounding box of the window inflated by the kernel radius, the domain of the atom locations."""
    lo, hi = window.bounding_box
    lo, hi = lo - kernel.radius, hi + kernel.radius
    if np.any(hi <= lo):
        raise ConfigError(f'empty location box {lo.tolist()} - {hi.tolist()}')
    return lo.astype(np.float64), hi.astype(np.float64)


def _generator_from_state(state):
    g = np.random.Generator(getattr(np.random, state['bit_generator'])())
    g.bit_generator.state = state
    return g


def mm_batches(kernel, box, rng, gamma=0.0):
    """
    Endless batches (gamma, z, u) of moving-maximum atoms in decreasing z order.

    Each batch draws MM_BATCH exponentials then the matching uniform locations from `rng`, so a stream always
    produces the same atoms whatever the stopping point.
    """
    lo, hi = box
    volume = float(np.prod(hi - lo))
    while True:
        e = rng.exponential(size=MM_BATCH)
        e = e[e > 0]
        g = gamma + np.cumsum(e)
        u = lo + (hi - lo) * rng.random((len(e), len(lo)))
        gamma = float(g[-1])
        yield g, volume / g, u


def _offsets(kernel, dim):
    k = int(math.floor(2 * kernel.radius)) + 1
    return np.indices((k, ) * dim).reshape(dim, -1).T


def _deposit(eta, window, kernel, z, u, offsets):
    # each atom reaches the sites within sup-distance R of its location
    base = np.ceil(u - kernel.radius).astype(np.int64)
    pts = base[:, None, :] + offsets[None, :, :]
    vals = z[:, None] * kernel.pdf(pts - u[:, None, :])
    idx = window.index_of(pts.reshape(-1, window.dim))
    vals = vals.ravel()
    keep = (idx >= 0) & (vals > 0)
    np.maximum.at(eta, idx[keep], vals[keep])


def run_moving_maximum(spec, window, rng, trunc, gamma=0.0, floor=None, accept=None):
    """
    Core moving-maximum loop shared by simulation and process extension.

    Atoms are generated batch by batch until z_last * f_max < min(max(eta, floor)) and Gamma >= trunc.min_gamma, or
    until trunc.max_atoms atoms exist, eta being the running field of the kept atoms. `accept(z, u)` returns the mask
    of atoms to keep, default all.

    Returns:
        eta (np.ndarray), gammas, zs, us (lists of arrays), stopped (bool), state (dict), z_last (float)
    """
    kernel = spec.kernel
    box = location_box(kernel, window)
    eta = np.zeros(len(window))
    offsets = _offsets(kernel, window.dim)
    gammas, zs, us = [], [], []
    used, stopped, z_last = 0, False, math.inf
    for g, z, u in mm_batches(kernel, box, rng, gamma):
        n = min(len(z), trunc.max_atoms - used)
        g, z, u = g[:n], z[:n], u[:n]
        used += n
        z_last, gamma = float(z[-1]), float(g[-1])
        if accept is not None:
            keep = accept(z, u)
            g, z, u = g[keep], z[keep], u[keep]
        _deposit(eta, window, kernel, z, u, offsets)
        gammas.append(g)
        zs.append(z)
        us.append(u)
        target = eta if floor is None else np.maximum(eta, floor)
        if z_last * kernel.f_max < target.min() and gamma >= trunc.min_gamma:
            stopped = True
            break
        if used >= trunc.max_atoms:
            break
    return eta, gammas, zs, us, stopped, rng.bit_generator.state, z_last


def simulate_moving_maximum(spec, window, rng, trunc=None):
    """
    Simulate a moving-maximum field eta(t) = max_i Z_i f(t - U_i) on `window`.

    The stop at z_last * f_max < min_t eta(t) is exact for compact kernels: no later atom can reach the field. For the
    gaussian kernel the locations beyond the effective radius are ignored, a bias below the 1e-8 tail mass.

    Args:
        spec (ModelSpec): Moving-maximum model.
        window (LatticeWindow): Sites to simulate.
        rng (np.random.Generator | int): Replicate stream.
        trunc (TruncationPolicy): Stopping controls.

    Returns:
        (FieldSample, PointProcessSample): The field and every generated atom.
    """
    trunc = trunc or TruncationPolicy()
    rng = as_generator(rng)
    box = location_box(spec.kernel, window)
    eta, gammas, zs, us, stopped, state, z_last = run_moving_maximum(spec, window, rng, trunc)
    process = PointProcessSample(spec,
                                 np.concatenate(zs),
                                 np.concatenate(gammas),
                                 locations=np.concatenate(us),
                                 window=window,
                                 box=box,
                                 state=state,
                                 truncated=not stopped,
                                 stopped_by='certificate' if stopped else 'max_atoms')
    diagnostic = z_last * spec.kernel.f_max / eta.min() if eta.min() > 0 else math.inf
    field = FieldSample(window, eta, atoms_used=len(process), truncated=not stopped, diagnostic=diagnostic,
                        model=spec.describe(), process=process)
    return field, process


def extend_process(process, window, floor, trunc, accept=None):
    """
    Continue the enumeration of a moving-maximum process from its saved stream state.

    Args:
        process (PointProcessSample): Process produced by simulate_moving_maximum().
        window (LatticeWindow): Window of `floor`.
        floor (np.ndarray): Field level on `window`, generation stops once z_last * f_max lies below the maximum of
            `floor` and the kept new atoms at every site.
        trunc (TruncationPolicy): Atom cap and min_gamma for the extension.
        accept (callable, optional): accept(z, u) -> mask of the new atoms to keep, default all.

    Returns:
        (PointProcessSample): The new atoms only, possibly empty.
    """
    if process.state is None:
        raise ContractError('the process has no saved stream state to continue from')
    if process.z[-1] * process.spec.kernel.f_max < floor.min() and process.gamma_last >= trunc.min_gamma:
        return process.select(np.zeros(0, dtype=np.int64))
    rng = _generator_from_state(process.state)
    _, gammas, zs, us, stopped, state, _ = run_moving_maximum(process.spec, window, rng, trunc,
                                                              gamma=process.gamma_last, floor=floor, accept=accept)
    return PointProcessSample(process.spec,
                              np.concatenate(zs),
                              np.concatenate(gammas),
                              locations=np.concatenate(us),
                              window=window,
                              box=process.box,
                              state=state,
                              truncated=not stopped,
                              stopped_by='certificate' if stopped else 'max_atoms')


def simulate(spec, window, rng, trunc=None, retain=False):
    """Simulate `spec` on `window`, returning a FieldSample with `process` set for moving maxima or when retained."""
    if spec.is_brown_resnick:
        return simulate_brown_resnick(spec, window, rng, trunc, retain)
    return simulate_moving_maximum(spec, window, rng, trunc)[0]


def max_stability_check(spec, window, n, replicates, rng, trunc=None, site=0, lag=None):
    """
    Compare n^-1 * (pointwise max of n independent fields) with a direct field.

    Args:
        spec (ModelSpec): Model.
        window (LatticeWindow): Sites, `site` and `site + lag` must be among them.
        n (int): Number of fields in each maximum, n >= 1.
        replicates (int): Replicates of both samples.
        rng (np.random.Generator | int): Stream, split into the maxima and the direct streams.
        site (int): Row of the window used for the marginal comparison.
        lag (list, optional): Lag of the pair coefficient comparison, default one step along the first axis.

    Returns:
        (Report): KS distance and p-value of the marginals against each other and against exp(-1/y), pair
            coefficients of both samples with standard errors and their discrepancy in standard errors.
    """
    from maxmix.engine.results import Report
    from maxmix.extremes.estimators import pair_theta_hat
    if n < 1:
        raise ContractError(f'max_stability_check() requires n >= 1, got {n}')
    lag = np.asarray(lag if lag is not None else [1] + [0] * (window.dim - 1), dtype=np.int64)
    j = window.index_of(window.sites[site] + lag)[0]
    if j < 0:
        raise ContractError(f'site {window.sites[site].tolist()} + lag {lag.tolist()} is not in the window')
    rng_max, rng_direct = as_generator(rng).spawn(2)
    streams_max, streams_direct = rng_max.spawn(replicates * n), rng_direct.spawn(replicates)
    maxed, direct = np.empty((replicates, 2)), np.empty((replicates, 2))
    for r in range(replicates):
        m = np.max([simulate(spec, window, streams_max[r * n + i], trunc).values[[site, j]] for i in range(n)], 0)
        maxed[r] = m / n
        direct[r] = simulate(spec, window, streams_direct[r], trunc).values[[site, j]]
    ks, p = two_sample_test(maxed[:, 0], direct[:, 0])
    t_max, t_direct = pair_theta_hat(*maxed.T), pair_theta_hat(*direct.T)
    z = abs(t_max.value - t_direct.value) / math.hypot(t_max.error, t_direct.error)
    return Report('max-stability', {
        'n': n,
        'replicates': replicates,
        'ks_two_sample': ks,
        'ks_pvalue': p,
        'ks_frechet_max': ks_statistic(maxed[:, 0], frechet_cdf),
        'theta_max': t_max.to_dict(),
        'theta_direct': t_direct.to_dict(),
        'theta_discrepancy_se': z})

