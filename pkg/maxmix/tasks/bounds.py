# maxmix 📈, AGPL-3.0 license
"""
Mixing-coefficient bounds along a distance ladder, plus the CLT decay and summability conditions of the model.

Usage:
    $ maxmix bounds model=brown-resnick scale=1 exponent=1 distances="[1, 2, 4, 8, 16]"
    $ maxmix bounds set1="[[0, 0], [0, 1]]" set2="[[5, 0], [5, 1]]"
"""

import numpy as np

from maxmix.engine.results import Report
from maxmix.engine.runner import BaseRunner
from maxmix.extremes.mixing import (beta_bound_compact, beta_bound_countable, bolthausen_conditions, bounds_ladder,
                                    clt_condition_check)
from maxmix.utils import DEFAULT_CFG, LOGGER
from maxmix.utils.checks import check_lags
from maxmix.utils.rng import make_rng


class BoundsRunner(BaseRunner):
    """
    Runner of the 'bounds' mode.

    bounds.csv holds one row per distance m with S2 = S1 shifted by m along the first axis; bound.json the pairwise and
    set bounds of an explicit (set1, set2) pair; conditions.json the decay-exponent check and the three summability
    conditions of the alpha-mixing coefficients.
    """
    mode = 'bounds'
    operations = ('maxmix.extremes.mixing.beta_bound_countable', 'maxmix.extremes.mixing.beta_bound_compact',
                  'maxmix.extremes.mixing.gamma_bound', 'maxmix.extremes.mixing.clt_condition_check',
                  'maxmix.extremes.mixing.bolthausen_conditions')

    def __init__(self, cfg=DEFAULT_CFG, overrides=None, _callbacks=None):
        super().__init__(cfg, overrides, _callbacks)
        self.set1 = check_lags(self.args.set1, self.args.dim, 'set1')
        self.set2 = None if self.args.set2 is None else check_lags(self.args.set2, self.args.dim, 'set2')

    def run(self):
        rng = make_rng(self.args.seed, self.mode)
        ladder_rng, pair_rng = rng.spawn(2)
        rows = bounds_ladder(self.spec, sorted(self.args.distances), self.set1, self.args.mc_draws, ladder_rng,
                             self.args.theta4_draws)
        self.write_csv('bounds.csv', rows)
        betas = [r['beta_pairwise'] for r in rows]
        monotone = bool(all(b <= a for a, b in zip(betas, betas[1:])))
        if not monotone:
            LOGGER.warning('WARNING ⚠️ pairwise bound is not nonincreasing along the distance ladder')
        data = {'ladder': rows, 'monotone': monotone}

        if self.set2 is not None:
            pair = beta_bound_countable(self.spec, self.set1, self.set2)
            comp = beta_bound_compact(self.spec, self.set1, self.set2, self.args.mc_draws, pair_rng,
                                      self.args.theta4_draws)
            data['pair'] = {'countable': pair.to_dict(), 'compact': comp.to_dict()}
            self.write_json('bound.json', data['pair'])

        check = clt_condition_check(self.spec, self.args.delta, self.args.dim, self.args.fit_range)
        lag = np.asarray(self.args.lags[0]).tolist()
        conditions = bolthausen_conditions(self.spec, self.args.delta, self.args.fit_range, lag)
        data['conditions'] = {'decay': check.to_dict(), 'summability': conditions.to_dict()}
        self.write_json('conditions.json', data['conditions'])
        LOGGER.info(check.verdict)
        LOGGER.info(f"summability conditions {conditions['conditions']} -> {'PASS' if conditions.passed else 'FAIL'}")
        return Report('bounds', data)


def run(cfg=DEFAULT_CFG):
    """Run the 'bounds' mode from a configuration."""
    return BoundsRunner(cfg)()


if __name__ == '__main__':
    run()
