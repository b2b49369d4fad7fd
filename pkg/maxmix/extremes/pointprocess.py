# maxmix 📈, AGPL-3.0 license
"""
Atom-level laboratory: S-extremal / S-subextremal classification of the Poisson atoms, the coupled process built from
an independent copy, and Monte Carlo checks of the shared-extremal-atom probability and its Slivnyak integral.

Usage:
    from maxmix.extremes.pointprocess import build_coupling, classify_extremal

    field, pp = simulate_moving_maximum(spec, window, rng)
    dec = classify_extremal(pp, field, S)

An atom phi is S-subextremal (phi <_S eta) when phi(s) < eta(s) at every s in S, S-extremal otherwise. The shared
event of mc_shared_extremal_prob() is {Phi+_S1 and Phi+_S2 have a common atom}.
"""

import math
from dataclasses import replace

import numpy as np

from maxmix.engine.results import (CoupledProcess, ExtremalDecomposition, FieldSample, MonteCarloValue,
                                   PointProcessSample, Report)
from maxmix.extremes.estimators import pair_theta_hat
from maxmix.fields.lattice import LatticeWindow
from maxmix.fields.models import TruncationPolicy
from maxmix.fields.simulate import extend_process, location_box, simulate_brown_resnick, simulate_moving_maximum
from maxmix.utils import LOGGER
from maxmix.utils.errors import ContractError, ReplicationError
from maxmix.utils.rng import as_generator
from maxmix.utils.stats import two_sample_test

MC_DOMINANT = 0.5  # inner Monte Carlo error share of the Slivnyak integral that triggers a warning


def _sites(S, dim):
    S = np.asarray(S, dtype=np.int64)
    return S.reshape(-1, dim) if S.ndim == 1 else S


def _check_disjoint(S1, S2):
    common = {tuple(s) for s in S1.tolist()} & {tuple(s) for s in S2.tolist()}
    if common:
        raise ContractError(f'S1 and S2 must be disjoint, common sites {sorted(common)}')


def _union_window(*sets):
    S = np.unique(np.concatenate(sets), axis=0)
    return LatticeWindow.from_sites(S)


def classify_extremal(pp, field, S):
    """
    Split the atoms of `pp` into S-extremal and S-subextremal atoms.

    Atom i is S-extremal when its stored contribution equals eta(s) at some s in S. Contributions are recomputed with
    the exact arithmetic of the simulation and compared without tolerance; atoms tying for the maximum are all
    extremal and the extra ties are counted.

    Args:
        pp (PointProcessSample): Retained atoms.
        field (FieldSample): Field simulated from `pp`.
        S (array-like): Reference sites, a subset of the field window.

    Returns:
        (ExtremalDecomposition): Extremal and subextremal atom indices.
    """
    S = _sites(S, pp.spec.dim)
    eta = field.at(S)
    c = pp.contributions(S)
    recomputed = c.max(0) if len(c) else np.zeros(len(S))
    if not np.array_equal(recomputed, eta):
        bad = int((recomputed != eta).sum())
        raise ContractError(f'point process does not reproduce the field at {bad} of {len(S)} sites')
    hits = (c == eta[None, :]) & (eta[None, :] > 0)
    extremal = hits.any(1)
    ties = int(np.clip(hits.sum(0) - 1, 0, None).sum())
    if ties:
        LOGGER.warning(f'WARNING ⚠️ {ties} exact ties between atoms at the field maximum, all tying atoms are extremal')
    return ExtremalDecomposition(S, np.flatnonzero(extremal), np.flatnonzero(~extremal), ties)


def build_coupling(pp, pp_tilde, S1, trunc=None):
    """
    Coupled process Phi_hat = Phi+_S1 u {phi~ in Phi~ : phi~ <_S1 eta}.

    The independent copy is first extended until its remaining atoms lie below the coupled field on the whole
    window, so the coupled field is exact everywhere and equals eta on S1 bit for bit.

    Args:
        pp (PointProcessSample): Moving-maximum atoms of eta.
        pp_tilde (PointProcessSample): Atoms of an independent copy on the same window.
        S1 (array-like): Conditioning sites.
        trunc (TruncationPolicy): Atom cap of the extension.

    Returns:
        (CoupledProcess): Atoms sorted by decreasing z with their provenance ('phi' or 'tilde') and the coupled field.
    """
    if pp.kind != 'moving-maximum' or pp_tilde.kind != 'moving-maximum':
        raise ContractError('build_coupling() requires moving-maximum processes with retained locations')
    if pp.window != pp_tilde.window:
        raise ContractError('both processes must be simulated on the same window')
    trunc = trunc or TruncationPolicy()
    window = pp.window
    S1 = _sites(S1, pp.spec.dim)
    if (window.index_of(S1) < 0).any():
        raise ContractError('S1 must be a subset of the simulation window')
    eta_s1 = pp.field(S1)
    keep_phi = classify_extremal(pp, FieldSample(window, pp.field(window.sites)), S1).extremal

    def below(p):
        return np.flatnonzero((p.contributions(S1) < eta_s1[None, :]).all(1)) if len(p) else np.zeros(0, np.int64)

    kernel = pp.spec.kernel

    def accept(z, u):
        return (z[:, None] * kernel.pdf(S1[None, :, :] - u[:, None, :]) < eta_s1[None, :]).all(1)

    phi, tilde = pp.select(keep_phi), pp_tilde.select(below(pp_tilde))
    floor = np.maximum(phi.field(window.sites), tilde.field(window.sites))
    extra = extend_process(pp_tilde, window, floor, replace(trunc, min_gamma=0.0), accept)
    parts = [phi, tilde, extra]
    z = np.concatenate([p.z for p in parts])
    order = np.argsort(-z, kind='stable')
    source = np.array(['phi'] * len(phi) + ['tilde'] * (len(tilde) + len(extra)))[order]
    process = PointProcessSample(pp.spec,
                                 z[order],
                                 np.concatenate([p.gamma for p in parts])[order],
                                 locations=np.concatenate([p.locations for p in parts])[order],
                                 window=window,
                                 box=pp.box,
                                 truncated=pp.truncated or pp_tilde.truncated or extra.truncated,
                                 stopped_by='coupling')
    eta_hat = process.field(window.sites)
    exact = np.array_equal(eta_hat[window.index_of(S1)], eta_s1)
    return CoupledProcess(process, source, eta_hat, exact, extended=len(extra))


def _simulate_atoms(spec, window, rng, trunc):
    if spec.is_brown_resnick:
        field = simulate_brown_resnick(spec, window, rng, trunc, retain=True)
        return field, field.process
    return simulate_moving_maximum(spec, window, rng, trunc)


def mc_shared_extremal_prob(spec, S1, S2, replicates, rng=None, trunc=None):
    """
    Frequency of {Phi+_S1 and Phi+_S2 share an atom} over independent fields on S1 u S2.

    Truncation-flagged replicates are excluded and counted in `flagged`. Brown-Resnick atoms are retained only up to
    the truncation level, so moving maxima with compact kernels are the exact case.

    Returns:
        (MonteCarloValue): Frequency with its binomial standard error.
    """
    S1, S2 = _sites(S1, spec.dim), _sites(S2, spec.dim)
    _check_disjoint(S1, S2)
    if spec.is_brown_resnick:
        LOGGER.warning('WARNING ⚠️ Brown-Resnick atoms are retained up to truncation only, shared-atom frequencies are '
                       'approximate')
    window = _union_window(S1, S2)
    hits, flagged = [], 0
    for g in as_generator(rng).spawn(replicates):
        field, pp = _simulate_atoms(spec, window, g, trunc)
        if pp.truncated:
            flagged += 1
            continue
        e1 = classify_extremal(pp, field, S1).extremal
        e2 = classify_extremal(pp, field, S2).extremal
        hits.append(len(np.intersect1d(e1, e2)) > 0)
    n = len(hits)
    if not n:
        raise ReplicationError(f'all {replicates} replicates were truncation-flagged')
    p = float(np.mean(hits))
    return MonteCarloValue(p, math.sqrt(p * (1 - p) / n), n, flagged)


def _slivnyak_grid(kernel, S1, S2, inv1, inv2, lo, hi, m, chunk=1 << 16):
    # midpoint rule in u of E[min(max_S1 f(s - u) / eta(s), max_S2 f(s - u) / eta(s))], one value per eta draw
    dim = len(lo)
    step = (hi - lo) / m
    total = np.zeros(len(inv1))
    for start in range(0, m ** dim, chunk):
        idx = np.arange(start, min(start + chunk, m ** dim))
        u = lo + (np.stack(np.unravel_index(idx, (m, ) * dim), 1) + 0.5) * step
        f1 = kernel.pdf(S1[None, :, :] - u[:, None, :])  # (points, |S1|)
        f2 = kernel.pdf(S2[None, :, :] - u[:, None, :])
        b1 = (f1[None, :, :] * inv1[:, None, :]).max(2)  # (draws, points)
        b2 = (f2[None, :, :] * inv2[:, None, :]).max(2)
        total += np.minimum(b1, b2).sum(1)
    return total * float(np.prod(step))


def _slivnyak_cells(kernel, S1, S2, inv1, inv2):
    # exact u-integral for indicator-box kernels: the integrand is constant on the cells cut by the edges s +- radius
    S = np.concatenate([S1, S2])
    edges = [np.unique(np.concatenate([S[:, k] - kernel.radius, S[:, k] + kernel.radius])) for k in range(S.shape[1])]
    mids = np.stack(np.meshgrid(*[(e[1:] + e[:-1]) / 2 for e in edges], indexing='ij'), -1).reshape(-1, S.shape[1])
    sizes = np.prod(np.stack(np.meshgrid(*[np.diff(e) for e in edges], indexing='ij'), -1).reshape(-1, S.shape[1]), 1)
    f1 = kernel.pdf(S1[None, :, :] - mids[:, None, :])  # (cells, |S1|)
    f2 = kernel.pdf(S2[None, :, :] - mids[:, None, :])
    b1 = (f1[None, :, :] * inv1[:, None, :]).max(2)  # (draws, cells)
    b2 = (f2[None, :, :] * inv2[:, None, :]).max(2)
    return (np.minimum(b1, b2) * sizes).sum(1)


def slyvniak_integral(spec, S1, S2, grid=32, inner=400, rng=None, trunc=None):
    """
    Slivnyak integral of the shared extremal event,

        int P(z f(. - u) not <_S1 eta, z f(. - u) not <_S2 eta) z^-2 dz du,

    which bounds the probability that S1 and S2 share an extremal atom from above.

    With w = 1/z the measure becomes dw du and the event reads w <= min_k max_{s in S_k} f(s - u) / eta(s), so the
    w-integral is exact. The u-integral is exact on the cells cut by the kernel edges for indicator-box kernels and a
    midpoint rule with `grid` points per axis over the location box of S1 u S2 otherwise, its error the difference to
    the rule with `grid // 2` points. The probability is an average over `inner` independent fields sharing all points.

    Returns:
        (Report): value, combined error (Monte Carlo and the grid-halving difference) and both error parts.
    """
    if spec.is_brown_resnick:
        raise ContractError('slyvniak_integral() requires a moving-maximum model')
    S1, S2 = _sites(S1, spec.dim), _sites(S2, spec.dim)
    _check_disjoint(S1, S2)
    if grid < 2 or inner < 2:
        raise ContractError(f'slyvniak_integral() requires grid >= 2 and inner >= 2, got {grid} and {inner}')
    kernel = spec.kernel
    window = _union_window(S1, S2)
    lo, hi = location_box(kernel, window)
    eta, flagged = [], 0
    for g in as_generator(rng).spawn(inner):
        field, pp = simulate_moving_maximum(spec, window, g, trunc)
        if pp.truncated:
            flagged += 1
            continue
        eta.append(field.values)
    if len(eta) < 2:
        raise ReplicationError(f'{flagged} of {inner} inner fields were truncation-flagged')
    eta = np.asarray(eta)
    inv1, inv2 = 1 / eta[:, window.index_of(S1)], 1 / eta[:, window.index_of(S2)]
    F1, F2 = S1.astype(np.float64), S2.astype(np.float64)
    exact = kernel.family == 'indicator-box'
    if exact:
        fine = _slivnyak_cells(kernel, F1, F2, inv1, inv2)
    else:
        fine = _slivnyak_grid(kernel, F1, F2, inv1, inv2, lo, hi, grid)
    value = float(fine.mean())
    mc_error = float(fine.std(ddof=1) / math.sqrt(len(fine)))
    grid_error = 0.0
    if not exact:
        grid_error = abs(value - float(_slivnyak_grid(kernel, F1, F2, inv1, inv2, lo, hi, grid // 2).mean()))
    if value > 0 and mc_error > MC_DOMINANT * value:
        LOGGER.warning(f'WARNING ⚠️ inner Monte Carlo error {mc_error:.3g} exceeds {MC_DOMINANT:.0%} of the '
                       f'Slivnyak integral {value:.3g}, increase inner')
    return Report('slyvniak-integral', {
        'value': value,
        'error': math.hypot(mc_error, grid_error),
        'mc_error': mc_error,
        'grid_error': grid_error,
        'grid': 'exact' if exact else grid,
        'inner': len(fine),
        'flagged': flagged})


def _counts(pp, levels):
    # atoms with Gamma <= k in the standard Poisson scale, z >= scale / k
    return [int((pp.z >= pp.scale / k).sum()) for k in levels]


def conditional_law_check(spec, S, replicates, rng=None, window=None, count_levels=(1, 2, 5, 10), trunc=None,
                          max_distance=0.05, lag=None):
    """
    Check that the coupled process built from (Phi, Phi~) has the law of Phi.

    The coupled process and an independent direct process are compared through atom counts above the levels
    Gamma <= k, the field marginals at every window site and the pair coefficient at `lag`. The frequency of an empty
    thinning (no atom of the extended copy below eta on S) is compared with the coupled process's S-subextremal atoms.

    Args:
        spec (ModelSpec): Moving-maximum model.
        S (array-like): Conditioning sites.
        replicates (int): Independent (Phi, Phi~, direct) triples.
        rng (np.random.Generator | int): Stream split into the replicate triples.
        window (LatticeWindow, optional): Simulation window, default the bounding box of S grown by one site.
        count_levels (tuple): Levels k of the atom counts.
        max_distance (float): KS distance accepted for counts and marginals.
        lag (list, optional): Pair-coefficient lag, default one step along the first axis.

    Returns:
        (Report): p-values and distances of every comparison and the overall verdict.
    """
    if spec.is_brown_resnick:
        raise ContractError('conditional_law_check() requires a moving-maximum model')
    S = _sites(S, spec.dim)
    if window is None:
        lo, hi = S.min(0) - 1, S.max(0) + 1
        window = LatticeWindow.box((hi - lo + 1).tolist(), origin=lo)
    if (window.index_of(S) < 0).any():
        raise ContractError('S must be a subset of the simulation window')
    trunc = replace(trunc or TruncationPolicy(), min_gamma=float(max(count_levels)))
    lag = np.asarray(lag if lag is not None else [1] + [0] * (spec.dim - 1), dtype=np.int64)
    i0, i1 = 0, int(window.index_of(window.sites[0] + lag)[0])
    if i1 < 0:
        raise ContractError(f'lag {lag.tolist()} leaves the window from its first site')

    coupled_counts, direct_counts, coupled_eta, direct_eta = [], [], [], []
    empty_thinning, empty_subextremal, inexact, flagged = 0, 0, 0, 0
    for g in as_generator(rng).spawn(replicates):
        g_phi, g_tilde, g_direct = g.spawn(3)
        _, pp = simulate_moving_maximum(spec, window, g_phi, trunc)
        _, pp_tilde = simulate_moving_maximum(spec, window, g_tilde, trunc)
        direct, pp_direct = simulate_moving_maximum(spec, window, g_direct, trunc)
        if pp.truncated or pp_tilde.truncated or pp_direct.truncated:
            flagged += 1
            continue
        cp = build_coupling(pp, pp_tilde, S, trunc)
        inexact += not cp.exact
        coupled_counts.append(_counts(cp.process, count_levels))
        direct_counts.append(_counts(pp_direct, count_levels))
        coupled_eta.append(cp.field)
        direct_eta.append(direct.values)
        empty_thinning += cp.n_tilde == 0
        dec = classify_extremal(cp.process, FieldSample(window, cp.field), S)
        empty_subextremal += len(dec.subextremal) == 0
    n = len(coupled_eta)
    if n < 2:
        raise ReplicationError(f'{flagged} of {replicates} replicates were truncation-flagged')

    coupled_counts, direct_counts = np.asarray(coupled_counts), np.asarray(direct_counts)
    coupled_eta, direct_eta = np.asarray(coupled_eta), np.asarray(direct_eta)
    counts = [two_sample_test(coupled_counts[:, j], direct_counts[:, j]) for j in range(len(count_levels))]
    marginals = [two_sample_test(coupled_eta[:, j], direct_eta[:, j]) for j in range(len(window))]
    t_hat, t_direct = pair_theta_hat(coupled_eta[:, i0], coupled_eta[:, i1]), pair_theta_hat(*direct_eta[:, [i0, i1]].T)
    z = abs(t_hat.value - t_direct.value) / math.hypot(t_hat.error, t_direct.error)
    count_distance = max(d for d, _ in counts)
    marginal_distance = max(d for d, _ in marginals)
    passed = bool(count_distance < max_distance and marginal_distance < max_distance and z < 3 and inexact == 0 and
                  empty_thinning == empty_subextremal)
    return Report('conditional-law', {
        'replicates': n,
        'flagged': flagged,
        'count_levels': list(count_levels),
        'count_ks': [d for d, _ in counts],
        'count_pvalues': [p for _, p in counts],
        'marginal_ks_max': marginal_distance,
        'marginal_pvalue_min': min(p for _, p in marginals),
        'theta_coupled': t_hat.to_dict(),
        'theta_direct': t_direct.to_dict(),
        'theta_discrepancy_se': z,
        'empty_thinning_freq': empty_thinning / n,
        'empty_subextremal_freq': empty_subextremal / n,
        'inexact': inexact}, passed=passed)
