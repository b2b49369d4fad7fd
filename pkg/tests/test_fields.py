# maxmix 📈, AGPL-3.0 license

import math

import numpy as np
import pytest
from scipy import stats

from maxmix.extremes.estimators import pair_theta_hat
from maxmix.fields.lattice import LatticeWindow, set_distance, shell, shell_size, sup_norm
from maxmix.fields.models import KernelSpec, ModelSpec, TruncationPolicy, VariogramSpec
from maxmix.fields.simulate import (frechet_points, gaussian_factor, gaussian_increments_sample, max_stability_check,
                                    simulate, simulate_brown_resnick, simulate_moving_maximum)
from maxmix.utils.errors import ConfigError, ContractError
from maxmix.utils.quadrature import nested_midpoint
from maxmix.utils.rng import make_rng
from maxmix.utils.stats import frechet_cdf, ks_statistic

BOX = ModelSpec.moving_maximum('indicator-box', 1.5, dim=2)
GAUSS_1D = ModelSpec.moving_maximum('gaussian', 1.0, dim=1)
BR = ModelSpec.brown_resnick(2.0, 1.0, dim=2)
REPLICATES = 2000


class _UnitExponentials:
    # every exponential draw equals 1
    def exponential(self, size=None):
        return np.ones(size)


def test_lattice_window():
    w = LatticeWindow.box(4, 2)
    assert len(w) == 16
    assert w.sites[1].tolist() == [0, 1]  # last axis fastest
    assert w.index_of([[3, 3], [4, 0]]).tolist() == [15, -1]
    assert w.boundary_count == 12
    cover = w.cover([[2, 0]])
    assert len(cover) == 24 and cover.descriptor['base'] == w.descriptor
    assert w.shift([1, 1]).descriptor['origin'] == [1, 1]
    with pytest.raises(ContractError):
        LatticeWindow([[0, 0], [0, 0]])


def test_distances():
    assert sup_norm([3, -5]) == 5
    assert set_distance([[0, 0]], [[2, 1], [4, 0]]) == 2
    for r in (1, 2, 3):
        assert len(shell(r, 2)) == shell_size(r, 2) == 8 * r
    assert shell_size(0, 3) == 1


def test_frechet_points():
    z = list(frechet_points(_UnitExponentials(), count_limit=2))
    assert z == [1.0, 0.5]
    draws = np.array([next(frechet_points(g)) for g in make_rng(0, 'simulate').spawn(20000)])
    assert ks_statistic(draws, frechet_cdf) < 0.02
    with pytest.raises(ContractError):
        next(frechet_points(make_rng(0), count_limit=0))


@pytest.mark.parametrize('family', ['gaussian', 'compact-gaussian', 'indicator-box'])
def test_kernel_density(family):
    k = KernelSpec(family, 0.8, dim=2)
    r = k.radius
    total = nested_midpoint(k.pdf, np.array([-r, -r]), np.array([r, r]), rtol=1e-4, max_points=1 << 20).value
    assert abs(total - 1) < 2e-3
    x = k.sample(make_rng(1), 1000)
    assert np.all(k.pdf(x) > 0) or family == 'gaussian'


def test_model_errors():
    with pytest.raises(ConfigError):
        VariogramSpec('fractional', 1.0, 2.0)
    with pytest.raises(ConfigError):
        KernelSpec('triangle')
    with pytest.raises(ConfigError):
        TruncationPolicy(max_atoms=0)
    assert float(VariogramSpec(scale=math.inf)([3, 4])[0]) == 0.0


def test_gaussian_increments():
    v = VariogramSpec('power', 1.0, 1.0)
    sites = np.array([[0, 0], [2, 0]])
    w = gaussian_increments_sample(v, sites, make_rng(2), size=10000)
    assert np.all(w[:, 0] == 0)  # W(0) = 0
    assert abs(w[:, 1].var() / float(v(sites[1])[0]) - 1) < 0.05


def test_moving_maximum_marginals():
    window = LatticeWindow.box(3, 2)
    values = np.array([simulate(BOX, window, g).values for g in make_rng(3).spawn(REPLICATES)])
    assert ks_statistic(values[:, 4], frechet_cdf) < 0.035  # 1.63 / sqrt(2000)


def test_moving_maximum_certificate():
    window = LatticeWindow.box(4, 2)
    field, pp = simulate_moving_maximum(BOX, window, make_rng(4))
    assert not field.truncated and field.diagnostic < 1
    assert np.array_equal(pp.field(window.sites), field.values)
    field, _ = simulate_moving_maximum(BOX, window, make_rng(4), TruncationPolicy(max_atoms=5))
    assert field.truncated


def test_disjoint_kernels_independent():
    spec = ModelSpec.moving_maximum('indicator-box', 0.4, dim=1)
    window = LatticeWindow.box(2, 1)
    values = np.array([simulate(spec, window, g).values for g in make_rng(5).spawn(REPLICATES)])
    t = pair_theta_hat(values[:, 0], values[:, 1])
    assert abs(t.value - 2) < 3 * t.error


def test_brown_resnick():
    window = LatticeWindow.box(3, 2)
    sample = simulate_brown_resnick(BR, window, make_rng(6), retain=True)
    assert len(sample) == 9 and np.all(sample.values > 0)
    assert np.allclose(sample.process.field(window.sites), sample.values)
    values = np.array([simulate(BR, window, g).values[4] for g in make_rng(7).spawn(REPLICATES)])
    assert ks_statistic(values, frechet_cdf) < 0.035


def test_max_stability():
    window = LatticeWindow.box(2, 1)
    r = max_stability_check(GAUSS_1D, window, 1, 300, make_rng(8))
    assert r['ks_two_sample'] < 0.15
    r = max_stability_check(GAUSS_1D, window, 5, 300, make_rng(9))
    assert r['theta_discrepancy_se'] < 4
    with pytest.raises(ContractError):
        max_stability_check(GAUSS_1D, window, 0, 10, make_rng(0))


def test_variogram_single_lag():
    v = VariogramSpec('power', 2.0, 1.0)
    assert v([3, 4]).shape == (1, )
    assert float(v([3, 4])[0]) == 2.5
    assert float(v(3)[0]) == 1.5
    assert v([[3, 4], [0, 1]]).tolist() == [2.5, 0.5]


def test_brown_resnick_pair_coefficient():
    window = LatticeWindow.box(2, 2)
    i, j = window.index_of([[0, 0], [1, 0]]).tolist()
    values = np.array([simulate(BR, window, g).values for g in make_rng(12).spawn(REPLICATES)])
    t = pair_theta_hat(values[:, i], values[:, j])
    v = float(BR.variogram([1, 0])[0])
    assert abs(t.value - 2 * stats.norm.cdf(math.sqrt(v) / 2)) < 3 * t.error


def test_brown_resnick_full_dependence():
    spec = ModelSpec.brown_resnick(math.inf, 1.0, dim=2)
    sample = simulate(spec, LatticeWindow.box(3, 2), make_rng(13))
    assert np.all(sample.values == sample.values[0])


@pytest.mark.parametrize('spec', [BOX, BR])
def test_same_seed_same_field(spec):
    window = LatticeWindow.box(4, 2)
    a, b = simulate(spec, window, make_rng(14)), simulate(spec, window, make_rng(14))
    assert np.array_equal(a.values, b.values) and a.atoms_used == b.atoms_used


@pytest.mark.parametrize('spec', [BOX, BR])
def test_atom_cap_keeps_prefix(spec):
    window = LatticeWindow.box(4, 2)
    fields = [simulate(spec, window, make_rng(15), TruncationPolicy(max_atoms=n)) for n in (3, 30, 100_000)]
    assert fields[0].truncated and fields[0].atoms_used == 3
    for lo, hi in zip(fields, fields[1:]):
        assert np.all(lo.values <= hi.values)  # the capped run keeps the first atoms of the same stream


def test_dense_site_limit():
    with pytest.raises(ConfigError, match='64 x 64'):
        gaussian_factor(VariogramSpec(), LatticeWindow.box(65, 2).sites)
