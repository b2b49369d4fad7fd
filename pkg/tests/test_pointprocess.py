# maxmix 📈, AGPL-3.0 license

import math

import numpy as np
import pytest

from maxmix.engine.results import FieldSample
from maxmix.extremes.pointprocess import (build_coupling, classify_extremal, conditional_law_check,
                                          mc_shared_extremal_prob, slyvniak_integral)
from maxmix.fields.lattice import LatticeWindow
from maxmix.fields.models import ModelSpec
from maxmix.fields.simulate import simulate_brown_resnick, simulate_moving_maximum
from maxmix.utils.errors import ContractError
from maxmix.utils.rng import make_rng

BOX = ModelSpec.moving_maximum('indicator-box', 1.5, dim=2)
CGAUSS = ModelSpec.moving_maximum('compact-gaussian', 0.8, dim=2)
WINDOW = LatticeWindow.box(5, 2)
S1 = [[2, 2], [2, 3]]


def test_classify_extremal():
    for g in make_rng(0).spawn(20):
        field, pp = simulate_moving_maximum(CGAUSS, WINDOW, g)
        dec = classify_extremal(pp, field, S1)
        assert 1 <= len(dec.extremal) <= len(S1)
        assert len(dec.extremal) + len(dec.subextremal) == len(pp)
        assert np.array_equal(pp.select(dec.extremal).field(S1), field.at(S1))
    bad = FieldSample(WINDOW, field.values * 2)
    with pytest.raises(ContractError):
        classify_extremal(pp, bad, S1)


def test_classify_brown_resnick():
    spec = ModelSpec.brown_resnick(1.0, 1.0, dim=2)
    field = simulate_brown_resnick(spec, WINDOW, make_rng(1), retain=True)
    dec = classify_extremal(field.process, field, S1)
    assert 1 <= len(dec.extremal) <= len(S1)


def test_coupling_exact():
    for g in make_rng(2).spawn(50):
        g_phi, g_tilde = g.spawn(2)
        field, pp = simulate_moving_maximum(CGAUSS, WINDOW, g_phi)
        _, pp_tilde = simulate_moving_maximum(CGAUSS, WINDOW, g_tilde)
        cp = build_coupling(pp, pp_tilde, S1)
        assert cp.exact
        assert np.array_equal(cp.field[WINDOW.index_of(S1)], field.at(S1))  # bit-exact on S1
        assert cp.n_phi == len(classify_extremal(pp, field, S1).extremal)
        assert np.all(np.diff(cp.process.z) <= 0)


def test_coupling_errors():
    _, pp = simulate_moving_maximum(BOX, WINDOW, make_rng(3))
    _, other = simulate_moving_maximum(BOX, LatticeWindow.box(4, 2), make_rng(4))
    with pytest.raises(ContractError):
        build_coupling(pp, other, S1)
    with pytest.raises(ContractError):
        build_coupling(pp, pp, [[9, 9]])
    spec = ModelSpec.brown_resnick(1.0, 1.0, dim=2)
    with pytest.raises(ContractError):
        slyvniak_integral(spec, [[0, 0]], [[1, 0]])


def test_shared_extremal_bounded_by_slivnyak():
    A, B = [[0, 0]], [[2, 0]]
    mc = mc_shared_extremal_prob(BOX, A, B, 2000, make_rng(5, 'lab'))
    integral = slyvniak_integral(BOX, A, B, grid=32, inner=200, rng=make_rng(6, 'lab'))
    assert mc.value <= integral['value'] + 3 * math.hypot(mc.error, integral['error'])
    assert integral['grid_error'] < 0.25 * integral['value']
    far = slyvniak_integral(BOX, A, [[4, 0]], grid=16, inner=50, rng=make_rng(7, 'lab'))
    assert far['value'] == 0.0  # disjoint kernel supports


def test_shared_extremal_full_dependence():
    spec = ModelSpec.moving_maximum('indicator-box', 20.0, dim=1)  # theta(1) = 1.025
    mc = mc_shared_extremal_prob(spec, [[0]], [[1]], 500, make_rng(8, 'lab'))
    assert mc.value > 0.9


def test_conditional_law():
    r = conditional_law_check(BOX, [[1, 1]], 1000, make_rng(9, 'lab'), window=LatticeWindow.box(3, 2))
    assert r['inexact'] == 0
    assert r['marginal_ks_max'] < 0.1 and max(r['count_ks']) < 0.1
    assert r['theta_discrepancy_se'] < 4


def test_slivnyak_grid_independence():
    A, B = [[0, 0]], [[1, 0]]
    coarse, fine = (slyvniak_integral(BOX, A, B, grid=g, inner=50, rng=make_rng(9, 'lab')) for g in (8, 64))
    assert coarse['value'] == fine['value'] > 0  # indicator-box cells are integrated exactly
    assert coarse['grid'] == 'exact' and coarse['grid_error'] == 0.0
    smooth = [slyvniak_integral(CGAUSS, A, B, grid=g, inner=50, rng=make_rng(10, 'lab'))['value'] for g in (32, 64)]
    assert abs(smooth[1] - smooth[0]) < 0.05 * smooth[1]
