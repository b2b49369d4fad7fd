# maxmix 📈, AGPL-3.0 license

import math

import numpy as np
import pytest
from scipy import stats

from maxmix.extremes.theta import (Theta4Provider, capital_C, capital_C_bound, gap_bounds, tau_a, tau_a_empirical,
                                   theta_gap, theta_pair, theta_set)
from maxmix.fields.lattice import LatticeWindow
from maxmix.fields.models import ModelSpec
from maxmix.fields.simulate import simulate
from maxmix.utils.errors import ContractError
from maxmix.utils.rng import make_rng

BR_V4 = ModelSpec.brown_resnick(0.25, 1.0, dim=2)  # V((1, 0)) = 4
THETA_V4 = 1.6826894921370859  # 2 Psi(1)
LAG = [1, 0]
SQUARE = [[0, 0], [1, 0], [0, 1], [1, 1]]


def test_brown_resnick_pair():
    assert theta_pair(BR_V4, LAG).value == pytest.approx(THETA_V4, abs=1e-12)
    assert theta_gap(BR_V4, LAG) == pytest.approx(2 - THETA_V4, rel=1e-12)
    assert theta_pair(BR_V4, [0, 0]).value == 1.0
    far = ModelSpec.brown_resnick(0.05, 2.0, dim=2)  # V = 400
    assert 0 < theta_gap(far, [1, 0]) < 1e-20  # 2 - theta would cancel to 0


def test_brown_resnick_monte_carlo():
    lags = ([1, 0], [2, 0], [0, 1], [1, 1], [3, 2])
    for h in lags:
        mc = theta_set(BR_V4, [[0, 0], h], n_draws=20000, rng=make_rng(0, 'theta'), method='monte-carlo')
        assert abs(mc.value - theta_pair(BR_V4, h).value) < 3 * mc.error
    fully = ModelSpec.brown_resnick(math.inf, 1.0, dim=2)
    assert theta_pair(fully, [5, 5]).value == pytest.approx(1.0)


def test_gaussian_kernel_pair():
    spec = ModelSpec.moving_maximum('gaussian', 1.0, dim=1)
    for h in (1, 2, 3):
        oracle = 2 * stats.norm.cdf(h / 2)
        assert theta_pair(spec, [h]).value == pytest.approx(oracle, rel=1e-10)
        quad = theta_set(spec, [[0], [h]], method='quadrature', rtol=1e-7)
        assert quad.value == pytest.approx(oracle, rel=1e-5)


def test_moving_maximum_sets():
    spec = ModelSpec.moving_maximum('compact-gaussian', 1.0, dim=2)
    sets = [[[0, 0], h] for h in ([1, 0], [2, 0], [0, 1], [2, 1], [3, 3])] + [SQUARE]
    for S in sets:
        quad = theta_set(spec, S, rtol=1e-5)
        mc = theta_set(spec, S, n_draws=50000, rng=make_rng(1, 'theta'), method='monte-carlo')
        assert abs(quad.value - mc.value) < 3 * math.hypot(mc.error, quad.error) + 1e-9
    assert 1 <= theta_set(spec, SQUARE).value <= 4


def test_indicator_box_closed_form():
    spec = ModelSpec.moving_maximum('indicator-box', 1.5, dim=2)
    assert theta_pair(spec, [1, 0]).value == pytest.approx(2 - 2 / 3)
    assert theta_pair(spec, [3, 0]).value == 2.0  # disjoint supports
    assert theta_set(spec, SQUARE).value == pytest.approx(16 / 9)
    assert gap_bounds(spec, [[1, 0], [1, 1], [4, 0]]) == pytest.approx([2 / 3, 4 / 9, 0.0])


def test_capital_C():
    spec = ModelSpec.moving_maximum('indicator-box', 0.4, dim=1)  # independent neighbours
    c = capital_C(spec, [[0], [1]], n_draws=4000, rng=make_rng(2, 'capital-c'))
    assert abs(c.value - 1.5) < 3 * c.error
    assert capital_C(spec, [[0]]).value == 1.0
    dependent = ModelSpec.moving_maximum('indicator-box', 1.5, dim=1)
    bound = capital_C_bound(dependent, [[0], [1]])
    assert bound.value == pytest.approx(1.5)
    c = capital_C(dependent, [[0], [1]], n_draws=2000, rng=make_rng(3, 'capital-c'))
    assert c.value <= bound.value + 3 * c.error
    assert math.isinf(capital_C_bound(spec, [[0], [1]]).value)


def test_tau_a():
    assert tau_a(BR_V4, LAG, 1.0) == pytest.approx(0.3173105078629141, rel=1e-10)
    assert tau_a(BR_V4, LAG, 2.0) == pytest.approx(0.3173105078629141 / 2, rel=1e-10)
    with pytest.raises(ContractError):
        tau_a(BR_V4, LAG, 0.0)
    spec = ModelSpec.moving_maximum('indicator-box', 1.5, dim=1)
    window = LatticeWindow.box(2, 1)
    values = np.array([simulate(spec, window, g).values for g in make_rng(4).spawn(20000)])
    assert tau_a_empirical(values[:, 0], values[:, 1], 1.0) == pytest.approx(tau_a(spec, [1], 1.0), abs=0.05)


def test_theta4_provider():
    spec = ModelSpec.moving_maximum('indicator-box', 1.5, dim=2)
    provider = Theta4Provider(spec, LAG)
    assert provider([2, 1]) is provider([-2, -1])
    assert len(provider.cache) == 1
    assert provider([0, 0]).value == theta_pair(spec, LAG).value  # {0, h, 0, h}
    assert provider([10, 0]).value == pytest.approx(2 * theta_pair(spec, LAG).value)


def test_brown_resnick_far_sets_decouple():
    spec = ModelSpec.brown_resnick(1.0, 1.0, dim=2)  # V(h) = |h|
    pair = theta_pair(spec, LAG).value
    far = theta_set(spec, [[0, 0], LAG, [60, 0], [61, 0]], n_draws=20000, rng=make_rng(5, 'theta'))
    assert abs(far.value - 2 * pair) < 3 * far.error + 1e-3
    assert far.error < 0.02


def test_brown_resnick_set_monotone_subadditive():
    spec = ModelSpec.brown_resnick(1.0, 1.0, dim=2)
    rng = make_rng(6, 'theta')
    triple = theta_set(spec, SQUARE[:3], n_draws=20000, rng=rng)
    square = theta_set(spec, SQUARE, n_draws=20000, rng=rng)
    assert theta_pair(spec, LAG).value <= triple.value + 3 * triple.error
    assert triple.value <= square.value + 3 * math.hypot(triple.error, square.error)
    assert square.value <= 2 * theta_pair(spec, LAG).value + 3 * square.error  # {0, e1} and {e2, e1 + e2}
    assert 1 <= square.value <= 4
