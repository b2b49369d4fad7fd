# maxmix 📈, AGPL-3.0 license
"""
Verify the asymptotic normality of the estimators over replicate windows.

Usage:
    $ maxmix clt-verify model=moving-maximum kernel=indicator-box window=200 replicates=500 workers=8

Each verdict compares the normalized errors sqrt(|window|) (theta_hat - theta) with N(0, sigma^2): the empirical to
target variance ratio must lie in `variance_band` and the KS test must not reject at `ks_level`. The target is the
series variance sigma1^2 for theta1 and the plug-in variance pooled over the first replicates for theta2 and theta3.
"""

import math

import numpy as np

from maxmix.engine.results import CltVerdict, Report
from maxmix.engine.runner import BaseRunner
from maxmix.extremes.estimators import estimate, sigma1_sq, sigma23_plugin
from maxmix.extremes.mixing import clt_condition_check
from maxmix.extremes.theta import theta4_provider, theta_pair
from maxmix.fields.lattice import LatticeWindow
from maxmix.fields.simulate import simulate
from maxmix.utils import DEFAULT_CFG, LOGGER, colorstr
from maxmix.utils.checks import check_lags
from maxmix.utils.errors import MaxMixError, ReplicationError
from maxmix.utils.stats import ks_test, norm_cdf

PLUGIN_REPLICATES = 64  # replicates pooled into the plug-in target variance of theta2 and theta3


class CltRunner(BaseRunner):
    """
    Runner of the 'clt-verify' mode.

    Writes errors_<estimator>_<lag>.csv with the raw normalized errors, verdicts.csv / verdicts.json and
    conditions.json with the decay-condition check of the model. `passed` is True when every verdict passes.
    """
    mode = 'clt-verify'
    operations = ('maxmix.fields.simulate.simulate', 'maxmix.extremes.estimators.estimate',
                  'maxmix.extremes.estimators.sigma1_sq', 'maxmix.extremes.estimators.sigma23_plugin',
                  'maxmix.extremes.theta.theta_pair', 'maxmix.extremes.mixing.clt_condition_check',
                  'maxmix.utils.stats.ks_test')

    def __init__(self, cfg=DEFAULT_CFG, overrides=None, _callbacks=None):
        super().__init__(cfg, overrides, _callbacks)
        self.lags = check_lags(self.args.lags, self.args.dim)
        self.window = LatticeWindow.box(self.args.window, self.args.dim)
        self.cover = self.window.cover(self.lags)
        self.providers = {i: theta4_provider(self.spec, h, self.args) for i, h in enumerate(self.lags)}
        self.ys = {}  # lag index -> theta1 threshold, the first of `thresholds` or the optimal y*
        self.keys = [(est, i) for est in self.args.estimators for i in range(len(self.lags))]
        self.theta = {i: theta_pair(self.spec, h).value for i, h in enumerate(self.lags)}
        self.sigma1 = {}
        if self.args.replicates < 200:
            LOGGER.warning(f"WARNING ⚠️ 'replicates={self.args.replicates}' is below the 200 recommended for "
                           f'normality verdicts')

    def replicate(self, index, streams):
        sample = simulate(self.spec, self.cover, streams.field, self.trunc)
        if sample.truncated:
            return None, None
        out = {}
        for est, i in self.keys:
            h = self.lags[i]
            try:
                r = estimate(sample, h, est, self.ys.get(i) if est == 'theta1' else None, None, None, self.args.level,
                             self.window)
                out[est, i] = r.estimate
            except MaxMixError as e:
                LOGGER.debug(f'replicate {index} {est} lag {h.tolist()}: {e}')
                out[est, i] = None
        return out, sample if index < PLUGIN_REPLICATES else None

    def target_variance(self, est, i, samples):
        """sigma1^2 from the lattice series for theta1, pooled plug-in variance otherwise."""
        h = self.lags[i]
        if est == 'theta1':
            return sigma1_sq(self.spec, h, self.ys[i], self.providers[i]).value
        return sigma23_plugin(samples, h, est, self.args.bandwidth_L, base=self.window)['variance']

    def run(self):
        if 'theta1' in self.args.estimators:
            self.ys = {i: self.thresholds(h, self.providers[i])[0] for i, h in enumerate(self.lags)}
        results = self.map_replicates()
        flagged = sum(r is None for r, _ in results)
        samples = [s for _, s in results if s is not None]
        size = len(self.window)
        verdicts, rows = [], []
        for est, i in self.keys:
            values = [r[est, i] for r, _ in results if r is not None]
            errors = np.array([math.sqrt(size) * (v - self.theta[i]) for v in values if v is not None])
            excluded = self.args.replicates - len(errors)
            if len(errors) < self.args.min_valid * self.args.replicates:
                raise ReplicationError(f'{est} at lag {self.lags[i].tolist()}: only {len(errors)} of '
                                       f"{self.args.replicates} usable replicates, 'min_valid={self.args.min_valid}' "
                                       f'requires {math.ceil(self.args.min_valid * self.args.replicates)} '
                                       f'({flagged} truncation-flagged)')
            target = self.target_variance(est, i, samples)
            sd = math.sqrt(target) if target > 0 else math.inf
            stat, p = ks_test(errors, lambda x, sd=sd: norm_cdf(np.asarray(x) / sd))
            v = CltVerdict(est, self.lags[i], errors, target, stat, p, self.args.variance_band, self.args.ks_level,
                           excluded)
            verdicts.append(v)
            lag = '_'.join(map(str, self.lags[i]))
            self.write_csv(f'errors_{est}_{lag}.csv', [{'error': e} for e in errors])
            y = self.ys.get(i) if est == 'theta1' else None
            rows.append({**v.to_dict(), 'lag': ' '.join(map(str, self.lags[i])), 'y': y, 'variance_band': None})
            LOGGER.info(f"{colorstr('bold', est)} lag {self.lags[i].tolist()}: variance ratio {v.variance_ratio:.3f}, "
                        f"KS p={p:.3g} -> {'PASS' if v.passed else 'FAIL'}")

        conditions = clt_condition_check(self.spec, self.args.delta, self.args.dim, self.args.fit_range)
        LOGGER.info(conditions.verdict)
        self.write_csv('verdicts.csv', [{k: v for k, v in r.items() if k != 'variance_band'} for r in rows])
        self.write_json('verdicts.json', [v.to_dict() for v in verdicts])
        self.write_json('conditions.json', conditions.to_dict())
        self.manifest['flagged'] = flagged
        passed = all(v.passed for v in verdicts)
        return Report('clt-verify', {'verdicts': verdicts, 'conditions': conditions}, passed=passed)


def run(cfg=DEFAULT_CFG):
    """Run the 'clt-verify' mode from a configuration."""
    return CltRunner(cfg)()


if __name__ == '__main__':
    run()
