# maxmix 📈, AGPL-3.0 license

import math

import pytest

from maxmix.extremes.mixing import (beta_bound_compact, beta_bound_countable, beta_bound_family, bolthausen_alpha_bound,
                                    bolthausen_conditions, bounds_ladder, clt_condition_check, gamma_bound, set_gap)
from maxmix.fields.models import ModelSpec
from maxmix.utils.errors import ContractError
from maxmix.utils.rng import make_rng

BR_V4 = ModelSpec.brown_resnick(0.25, 1.0, dim=2)  # V((1, 0)) = 4
GAP_V4 = 2 - 1.6826894921370859
BOX = ModelSpec.moving_maximum('indicator-box', 1.5, dim=2)


def test_countable_bound():
    r = beta_bound_countable(BR_V4, [[0, 0]], [[1, 0]])
    assert r.beta == pytest.approx(4 * GAP_V4, rel=1e-12)  # 1.26924
    assert r.alpha == pytest.approx(r.beta / 2)
    assert r.family == 'cor2-countable'
    r = beta_bound_countable(BOX, [[0, 0], [0, 1]], [[3, 0], [3, 1]])
    assert r.beta == 0.0  # disjoint kernel supports
    with pytest.raises(ContractError):
        beta_bound_countable(BOX, [[0, 0]], [[0, 0], [1, 0]])


def test_gamma_bound():
    assert gamma_bound(BR_V4, [1, 0]) == pytest.approx(2 * GAP_V4, rel=1e-12)  # 0.63462


def test_compact_bound():
    r = beta_bound_compact(BR_V4, [[0, 0]], [[1, 0]], rng=make_rng(0, 'bounds'))
    assert r.beta == pytest.approx(4 * GAP_V4, rel=1e-12)  # C = 1 for singletons
    S1, S2 = [[0, 0], [0, 1]], [[2, 0], [2, 1]]
    r = beta_bound_compact(BOX, S1, S2, n_draws=2000, rng=make_rng(1, 'bounds'))
    gap, err = set_gap(BOX, S1, S2)
    assert err == 0.0 and gap == pytest.approx((1 * 4) / 9)  # overlap [0.5, 1.5] x [-1.5, 2.5]
    assert r.beta == pytest.approx(2 * (r.components['C1']['value'] + r.components['C2']['value']) * gap)
    assert r.beta <= 2 * 3.0 * gap + 3 * r.error  # C(S) <= 1 / int min f = 3 / 2


def test_brown_resnick_set_gap():
    spec = ModelSpec.brown_resnick(1.0, 1.0, dim=2)
    pair = [[0, 0], [1, 0]]
    gap, err = set_gap(spec, pair, [[60, 0], [61, 0]], n_draws=20000, rng=make_rng(3, 'bounds'))
    assert 0 <= gap < 3 * err + 1e-3  # far sets are close to independent
    gap, err = set_gap(spec, pair, [[0, 1], [1, 1]], n_draws=20000, rng=make_rng(4, 'bounds'))
    assert 0 < gap <= 2 and err < 0.02
    # theta(S1) + theta(S2) - theta(S1 u S2) with theta(S1) = theta(S2) for the two shifted pairs
    union = spec.theta_set(pair + [[0, 1], [1, 1]], n_draws=20000, rng=make_rng(5, 'bounds'))
    assert abs(gap - (2 * spec.theta_pair([1, 0]).value - union.value)) < 3 * math.hypot(err, union.error)


def test_family_bound():
    r = beta_bound_family(BR_V4, [[[0, 0]], [[0, 1]]], [[[3, 0]]], rng=make_rng(2, 'bounds'))
    pairs = beta_bound_countable(BR_V4, [[0, 0], [0, 1]], [[3, 0]])
    assert r.beta == pytest.approx(pairs.beta, rel=1e-9)  # singleton families reduce to the pairwise bound
    assert len(r.components['terms']) == 2


def test_bounds_ladder():
    rows = bounds_ladder(BR_V4, [1, 2, 4, 8], n_draws=100, rng=make_rng(3, 'bounds'))
    assert [r['distance'] for r in rows] == [1, 2, 4, 8]
    betas = [r['beta_pairwise'] for r in rows]
    assert betas == sorted(betas, reverse=True)
    assert rows[0]['beta_pairwise'] == pytest.approx(4 * GAP_V4)


@pytest.mark.parametrize('delta', [0.1, 1.0, 10.0])
def test_clt_condition_super_polynomial(delta):
    spec = ModelSpec.brown_resnick(1.0, 1.0, dim=2)
    r = clt_condition_check(spec, delta)
    assert r.passed and r.b > r.threshold
    assert 'PASS' in r.verdict


def test_clt_condition_power_laws():
    # d = 2, delta = 1 -> threshold 2 * max(2, 3) = 6
    slow = clt_condition_check(lambda m: m ** -5.0, 1.0, d=2)
    assert not slow.passed and slow.b == pytest.approx(5.0, rel=1e-6)
    assert slow.threshold == 6.0
    fast = clt_condition_check(lambda m: m ** -7.0, 1.0, d=2)
    assert fast.passed and fast.b == pytest.approx(7.0, rel=1e-6)
    trivial = clt_condition_check(BOX, 1.0)
    assert trivial.passed and trivial.trivial
    with pytest.raises(ContractError):
        clt_condition_check(BOX, 0.0)
    with pytest.raises(ContractError):
        clt_condition_check(BOX, 1.0, fit_range=[8, 16])


@pytest.mark.parametrize('spec', [
    ModelSpec.brown_resnick(0.01, 1.0, dim=2),  # gamma underflows to 0 well inside the fit range
    ModelSpec.moving_maximum('gaussian', 0.05, dim=2)])
def test_clt_condition_gaussian_tails(spec):
    r = clt_condition_check(spec, 1.0)
    assert r.passed and not r.trivial
    assert math.isinf(r.b)


def test_bolthausen_bounds():
    a = bolthausen_alpha_bound(BR_V4, 1, 1, 3)
    assert a == pytest.approx(gamma_bound(BR_V4, [3, 0]))
    assert bolthausen_alpha_bound(BR_V4, 2, 2, 3) == pytest.approx(4 * a)
    assert bolthausen_alpha_bound(BR_V4, 1, None, 3) >= a
    assert bolthausen_alpha_bound(BR_V4, 1, 1, 4, lag=[1, 0]) == pytest.approx(4 * a)  # alpha_{2,2}(3)
    with pytest.raises(ContractError):
        bolthausen_alpha_bound(BR_V4, 1, 1, 1, lag=[1, 0])
    assert bolthausen_alpha_bound(BOX, 1, math.inf, 3) == 0.0


def test_bolthausen_conditions():
    r = bolthausen_conditions(ModelSpec.moving_maximum('compact-gaussian', 1.0, dim=2), 1.0, [8, 16, 32], lag=[1, 0])
    assert r.passed and r['conditions'] == [True, True, True]
    assert r['radii'] == [8, 16, 32]
