# maxmix 📈, AGPL-3.0 license

import math

import numpy as np
import pytest

from maxmix import MaxStableModel
from maxmix.fields.lattice import LatticeWindow
from maxmix.utils.errors import ConfigError

BR = {'scale': 0.25, 'exponent': 1.0, 'verbose': False}  # V((1, 0)) = 4
MM = {'kernel': 'indicator-box', 'bandwidth': 1.5, 'verbose': False}


def test_model_theta():
    model = MaxStableModel('brown-resnick', **BR)
    assert model.theta([1, 0]).value == pytest.approx(1.6826894921370859, abs=1e-12)
    assert 'brown-resnick' in repr(model)
    box = MaxStableModel(**MM)
    assert box.theta([1, 0]).value == pytest.approx(4 / 3)
    assert box.theta_set([[0, 0], [1, 0], [0, 1], [1, 1]]).value == pytest.approx(16 / 9)


def test_model_sample():
    model = MaxStableModel(**MM, seed=5)
    a, b = model.sample(8), model.sample(LatticeWindow.box(8, 2))
    assert len(a) == 64 and np.array_equal(a.values, b.values)  # same (seed, index) stream
    assert not np.array_equal(a.values, model.sample(8, index=1).values)
    assert np.all(a.values > 0)


def test_model_errors():
    with pytest.raises(ConfigError):
        MaxStableModel('gaussian-process')
    with pytest.raises(ConfigError):
        MaxStableModel(kernl='gaussian')


def test_simulate(tmp_path):
    model = MaxStableModel(**MM)
    report = model.simulate(window=6, replicates=4, out=str(tmp_path))
    assert model.save_dir == tmp_path
    assert report['replicates'] == 4 and (tmp_path / 'samples/00003.csv').is_file()


def test_estimate(tmp_path):
    report = MaxStableModel(**MM).estimate(window=16, replicates=3, estimators=['theta2'], out=str(tmp_path))
    assert report.name == 'estimate' and (tmp_path / 'aggregate.csv').is_file()


def test_clt_verify(tmp_path):
    report = MaxStableModel(**MM).clt_verify(window=16, replicates=10, estimators=['theta2'], out=str(tmp_path))
    assert report.passed in (True, False)
    assert (tmp_path / 'errors_theta2_1_0.csv').is_file() and (tmp_path / 'conditions.json').is_file()


def test_bounds(tmp_path):
    report = MaxStableModel('brown-resnick', **BR).bounds(distances=[1, 2, 3], mc_draws=200, out=str(tmp_path))
    assert report['monotone']
    assert report['ladder'][0]['beta_pairwise'] == pytest.approx(4 * (2 - 1.6826894921370859))


def test_coupling(tmp_path):
    model = MaxStableModel(**MM)
    report = model.coupling(window=4, replicates=20, grid=8, out=str(tmp_path))
    assert report.passed
    assert (tmp_path / 'replicates.csv').is_file() and (tmp_path / 'report.json').is_file()
    with pytest.raises(ConfigError):
        MaxStableModel('brown-resnick', **BR).coupling(out=str(tmp_path / 'br'))


def test_variance_opt(tmp_path):
    report = MaxStableModel(**MM).variance_opt(out=str(tmp_path))
    row = report['rows'][0]
    assert report.passed is None
    assert row['y_opt'] > 0 and math.isfinite(row['sigma1_sq'])
    assert row['sigma1_sq'] <= row['sigma1_sq_at_y0'] * (1 + 1e-9)
    assert (tmp_path / 'profile_1_0.csv').is_file()


def test_callbacks(tmp_path):
    seen = []
    model = MaxStableModel(**MM)
    model.add_callback('on_save', lambda runner: seen.append(runner.mode))
    model.simulate(window=4, replicates=2, out=str(tmp_path / 'a'))
    model.bounds(distances=[1, 2], mc_draws=100, out=str(tmp_path / 'b'))
    assert seen == ['simulate', 'bounds']
