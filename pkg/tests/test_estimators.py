# maxmix 📈, AGPL-3.0 license

import math

import numpy as np
import pytest

from maxmix.engine.results import FieldSample
from maxmix.extremes.estimators import (default_bandwidth, estimate, optimal_y, pair_theta_hat, sigma1_profile,
                                        sigma1_sq, sigma23_plugin, theta_hat1, theta_hat2, theta_hat3)
from maxmix.extremes.theta import Theta4Provider, theta_pair
from maxmix.fields.lattice import LatticeWindow
from maxmix.fields.models import ModelSpec
from maxmix.fields.simulate import simulate
from maxmix.utils.errors import ContractError, EstimatorError
from maxmix.utils.rng import make_rng

LAG = np.array([1, 0])
BOX = ModelSpec.moving_maximum('indicator-box', 1.5, dim=2)
BR = ModelSpec.brown_resnick(0.5, 1.5, dim=2)


def iid_sample(side, seed=0):
    """Independent unit Frechet values on a box window covering LAG."""
    base = LatticeWindow.box(side, 2)
    window = base.cover(LAG)
    return FieldSample(window, 1 / make_rng(seed).exponential(size=len(window)), base=base)


def test_estimators_on_iid_field():
    sample = iid_sample(64)
    for est in ('theta1', 'theta2', 'theta3'):
        r = estimate(sample, LAG, est, y=1.0)
        assert r.estimator == est and r.size == 64 * 64
        assert abs(r.estimate - 2) < 4 * r.se  # independence
        lo, hi = r.ci
        assert lo < r.estimate < hi


def test_estimators_on_moving_maximum():
    base = LatticeWindow.box(48, 2)
    theta = theta_pair(BOX, LAG).value
    sample = simulate(BOX, base.cover(LAG), make_rng(1))
    provider = Theta4Provider(BOX, LAG)
    r1 = theta_hat1(sample, LAG, 1.0, BOX, provider, base=base)
    assert r1.variance_method == 'analytic-series'
    for r in (r1, theta_hat2(sample, LAG, base=base), theta_hat3(sample, LAG, base=base)):
        assert abs(r.estimate - theta) < 3 * r.se
        assert r.size == len(base)


def test_estimator_errors():
    sample = iid_sample(8)
    with pytest.raises(EstimatorError):
        theta_hat1(sample, LAG, y=1e-3)  # no pair below the threshold
    with pytest.raises(ContractError):
        estimate(sample, LAG, 'theta4')
    with pytest.raises(ContractError):
        theta_hat2(sample, [3, 0])  # t + h was not simulated
    base = LatticeWindow.box(8, 2)
    window = base.cover(LAG)
    x = np.where(window.sites[:, 0] % 2 == 0, 0.01, 100.0)  # not max-stable, nu close to 1
    with pytest.raises(EstimatorError):
        theta_hat3(FieldSample(window, x, base=base), LAG)


def test_plugin_variance():
    sample = iid_sample(128, seed=2)
    r = sigma23_plugin(sample, LAG, 'theta2', L=0)
    assert r['variance'] == pytest.approx(4.0, rel=0.15)  # theta^4 Var(Exp(2)) = 16 / 4
    assert default_bandwidth(64 * 64, 2) == 8
    r = sigma23_plugin(sample, LAG, 'theta3')
    assert r['bandwidth'] == 11 and set(r['sensitivity']) == {5, 22}


def test_plugin_bandwidth_stability():
    sample = iid_sample(128, seed=3)
    v = [sigma23_plugin(sample, LAG, 'theta2', L=L)['variance'] for L in (2, 4)]
    assert abs(v[1] - v[0]) < 0.1 * v[0]


def test_pair_theta_hat():
    rng = make_rng(4)
    x = 1 / rng.exponential(size=20000)
    t = pair_theta_hat(x, x)
    assert t.value == pytest.approx(1.0, rel=0.03)
    t = pair_theta_hat(x, 1 / rng.exponential(size=20000))
    assert abs(t.value - 2) < 3 * t.error


def test_sigma1_series():
    s = sigma1_sq(BOX, LAG, 1.0)
    assert s.value > 0 and s.tail <= 0.01 * s.value
    assert s.partial_sums == sorted(s.partial_sums)
    indep = ModelSpec.moving_maximum('indicator-box', 0.4, dim=2)
    s = sigma1_sq(indep, LAG, 1.0)
    assert s.value == pytest.approx(math.expm1(2.0) + 2 * math.expm1(1.0), rel=1e-9)
    br = sigma1_sq(BR, LAG, 2.0, Theta4Provider(BR, LAG, n_draws=5000))
    assert br.value > 0


def test_optimal_threshold():
    provider = Theta4Provider(BOX, LAG)
    y = optimal_y(BOX, LAG, provider)
    f = sigma1_sq(BOX, LAG, y, provider).value
    assert f <= sigma1_sq(BOX, LAG, y / 2, provider).value
    assert f <= sigma1_sq(BOX, LAG, 2 * y, provider).value
    profile = sigma1_profile(BOX, LAG, np.geomspace(y / 8, 8 * y, 25), provider)
    assert profile['interior']
    assert abs(math.log(profile['y_min'] / y)) < math.log(8) / 12 + 1e-9


def test_madogram_limits():
    r = theta_hat3(iid_sample(64, seed=5), LAG)
    assert abs(r.extra['nu'] - 1 / 6) < 0.01  # independent pairs
    assert abs(r.estimate - 2) < 4 * r.se
    base = LatticeWindow.box(16, 2)
    window = base.cover(LAG)
    columns = 1 / make_rng(6).exponential(size=17)
    r = theta_hat3(FieldSample(window, columns[window.sites[:, 1]], base=base), LAG)  # eta(t) = eta(t + h)
    assert r.extra['nu'] == 0 and r.estimate == 1.0


def test_threshold_interval_coverage():
    indep = ModelSpec.moving_maximum('indicator-box', 0.4, dim=2)
    variance = sigma1_sq(indep, LAG, 1.0).value
    hits = [theta_hat1(iid_sample(32, seed=s), LAG, 1.0, indep, variance=variance).ci for s in range(200)]
    coverage = np.mean([lo <= 2 <= hi for lo, hi in hits])
    assert 0.88 <= coverage <= 0.99


def test_root_n_consistency():
    sides = 16, 32, 64
    sd = [np.std([theta_hat2(iid_sample(n, seed=100 * n + s), LAG).estimate for s in range(150)]) for n in sides]
    slope = np.polyfit(np.log(np.square(sides)), np.log(sd), 1)[0]
    assert -0.6 <= slope <= -0.4


def test_signed_series_terms():
    theta = theta_pair(BOX, LAG).value

    def shifted(t):  # four-point coefficients slightly above 2 theta(h) away from t = 0
        return theta if not np.any(t) else 2 * theta + 0.01

    s = sigma1_sq(BOX, LAG, 1.0, shifted)
    assert s.value == pytest.approx(math.expm1(theta) + (s.terms - 1) * math.expm1(-0.01), rel=1e-9)
    assert s.value < math.expm1(theta)


def test_optimal_threshold_log_search():
    provider = Theta4Provider(BOX, LAG)
    y = optimal_y(BOX, LAG, provider)
    for y0 in (1e-2, 10.0):
        y_far = optimal_y(BOX, LAG, provider, y0=y0)
        assert abs(math.log(y_far / y)) < 0.05
        assert sigma1_sq(BOX, LAG, y_far, provider).value == pytest.approx(sigma1_sq(BOX, LAG, y, provider).value,
                                                                         rel=1e-4)


def test_optimal_threshold_draw_stability():
    ys = [optimal_y(BR, LAG, Theta4Provider(BR, LAG, n_draws=n, seed=n)) for n in (5000, 10000)]
    assert abs(math.log(ys[1] / ys[0])) < 0.1
