# maxmix 📈, AGPL-3.0 license

import math

import numpy as np
import pytest

from maxmix.utils.errors import ContractError
from maxmix.utils.rng import make_rng
from maxmix.utils.stats import (frechet_cdf, ks_critical, ks_test, mean_se, normal_quantile, two_sample_ks,
                                two_sample_test)


def test_normal_quantile():
    assert normal_quantile(0.5) == 0.0
    assert normal_quantile(0.975) == pytest.approx(1.959963984540054)
    assert normal_quantile(np.array([0.025, 0.975])).tolist() == pytest.approx([-1.959963984540054, 1.959963984540054])
    for p in (0.0, 1.0, float('nan')):
        with pytest.raises(ContractError):
            normal_quantile(p)


def test_frechet_ks():
    assert frechet_cdf(-1.0) == 0.0 and frechet_cdf(1.0) == pytest.approx(math.exp(-1))
    n = 5000
    x = 1 / make_rng(0).exponential(size=n)
    d, p = ks_test(x, frechet_cdf)
    assert d < ks_critical(n) and p > 0.01
    assert ks_critical(n) * math.sqrt(n) == pytest.approx(1.6276, abs=1e-3)


def test_two_sample():
    x = make_rng(1).normal(size=500)
    assert two_sample_ks(x, x) == 0.0
    d, p = two_sample_test(x, x + 10)
    assert d == 1.0 and p < 1e-10
    with pytest.raises(ContractError):
        two_sample_ks([], x)


def test_mean_se():
    m, se = mean_se([1.0, 2.0, 3.0])
    assert m == 2.0 and se == pytest.approx(1 / math.sqrt(3))
    assert math.isinf(mean_se([5.0])[1])
