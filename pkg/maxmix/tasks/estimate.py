# maxmix 📈, AGPL-3.0 license
"""
Estimate pair extremal coefficients on replicate fields with the three estimators.

Usage:
    $ maxmix estimate window=64 lags="[[1, 0], [2, 0]]" thresholds="[0.5, 1.0]" replicates=50
    $ maxmix estimate window=64 replicates=50                    # theta1 at the optimal threshold y* per lag
    $ maxmix estimate windows="[32, 64, 128]" replicates=100     # consistency slopes
"""

import math

import numpy as np
import pandas as pd
from scipy import stats

from maxmix.engine.results import Report
from maxmix.engine.runner import BaseRunner
from maxmix.extremes.estimators import estimate, sigma1_sq
from maxmix.extremes.theta import theta4_provider, theta_pair
from maxmix.fields.lattice import LatticeWindow
from maxmix.fields.simulate import simulate
from maxmix.utils import DEFAULT_CFG, LOGGER
from maxmix.utils.checks import check_lags
from maxmix.utils.errors import MaxMixError

COLUMNS = ('window', 'replicate', 'estimator', 'lag', 'y', 'estimate', 'variance', 'variance_method', 'size', 'level',
           'ci_low', 'ci_high', 'flags', 'error')
CONSISTENCY_BAND = -0.6, -0.4  # log-RMSE vs log-|window| slopes of root-n consistent estimators


class EstimateRunner(BaseRunner):
    """
    Runner of the 'estimate' mode.

    One row per (replicate, estimator, lag, threshold) in estimates.csv, estimator failures kept as rows with their
    error string; aggregate.csv with mean, standard error, RMSE and the z-score against the model's theta per
    combination; with several `windows`, consistency.csv with the log-RMSE vs log-|window| slopes.
    """
    mode = 'estimate'
    operations = ('maxmix.fields.simulate.simulate', 'maxmix.extremes.estimators.estimate',
                  'maxmix.extremes.estimators.sigma1_sq', 'maxmix.extremes.theta.theta_pair')

    def __init__(self, cfg=DEFAULT_CFG, overrides=None, _callbacks=None):
        super().__init__(cfg, overrides, _callbacks)
        self.lags = check_lags(self.args.lags, self.args.dim)
        self.window = self.cover = None
        self.theta = {i: theta_pair(self.spec, h).value for i, h in enumerate(self.lags)}
        self.providers = {i: theta4_provider(self.spec, h, self.args) for i, h in enumerate(self.lags)}
        self.sigma1 = {}
        self.ys = {}  # lag index -> theta1 thresholds, resolved in run()

    def set_window(self, side):
        """Select the estimation window and its lag cover."""
        self.window = LatticeWindow.box(side, self.args.dim)
        self.cover = self.window.cover(self.lags)

    def series_variance(self, i, y):
        """sigma1^2 of lag i at threshold y, None when the series fails so theta1 falls back to the plug-in."""
        key = i, y
        if key not in self.sigma1:
            try:
                self.sigma1[key] = sigma1_sq(self.spec, self.lags[i], y, self.providers[i]).value
            except MaxMixError as e:
                LOGGER.warning(f'WARNING ⚠️ sigma1^2 unavailable at lag {self.lags[i].tolist()} y={y:g}: {e}, '
                               f'theta1 uses the plug-in variance')
                self.sigma1[key] = None
        return self.sigma1[key]

    def combinations(self):
        """(estimator, lag index, threshold) triples in output order."""
        for est in self.args.estimators:
            for i in range(len(self.lags)):
                for y in (self.ys[i] if est == 'theta1' else [None]):
                    yield est, i, y

    def replicate(self, index, streams):
        sample = simulate(self.spec, self.cover, streams.field, self.trunc)
        rows = []
        for est, i, y in self.combinations():
            h = self.lags[i]
            base = {'window': len(self.window), 'replicate': index, 'estimator': est, 'lag': ' '.join(map(str, h)),
                    'y': y}
            variance = self.series_variance(i, y) if est == 'theta1' else None
            try:
                r = estimate(sample, h, est, y, self.spec if variance is not None else None, self.providers[i],
                             self.args.level, self.window, variance)
                rows.append({**base, **r.rows()[0], 'error': ''})
            except MaxMixError as e:
                rows.append({**base, 'error': f'{type(e).__name__}: {e}'})
        return rows, sample.truncated

    def run(self):
        sides = self.args.windows or [self.args.window]
        if 'theta1' in self.args.estimators:
            self.ys = {i: self.thresholds(h, self.providers[i]) for i, h in enumerate(self.lags)}
        for est, i, y in self.combinations():  # shared series variances, computed once before the replicates
            if est == 'theta1':
                self.series_variance(i, y)
        rows, flagged = [], 0
        for k, side in enumerate(sides):
            self.set_window(side)
            for r, truncated in self.map_replicates(desc=f'estimate window {side}', start=k * self.args.replicates):
                rows.extend(r)
                flagged += truncated
        df = pd.DataFrame(rows, columns=COLUMNS)
        self.write_csv('estimates.csv', df)
        agg = self.aggregate(df)
        self.write_csv('aggregate.csv', agg)
        data = {'aggregate': agg.to_dict('records'), 'flagged': flagged, 'errors': int((df.error != '').sum())}
        if len(sides) > 1:
            slopes = self.consistency(agg)
            self.write_csv('consistency.csv', slopes)
            data['consistency'] = slopes.to_dict('records')
        self.manifest['flagged'] = flagged
        report = Report('estimate', data)
        self.write_json('report.json', report.to_dict())
        return report

    def aggregate(self, df):
        """Mean, standard error, RMSE and z-score against theta per (window, estimator, lag, y)."""
        theta = {' '.join(map(str, h)): self.theta[i] for i, h in enumerate(self.lags)}
        out = []
        for (window, est, lag, y), g in df.groupby(['window', 'estimator', 'lag', 'y'], dropna=False, sort=False):
            ok = g.estimate[g.error == ''].to_numpy(dtype=np.float64)
            n = len(ok)
            mean = float(ok.mean()) if n else math.nan
            se = float(ok.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
            out.append({
                'window': window,
                'estimator': est,
                'lag': lag,
                'y': y,
                'n': n,
                'errors': len(g) - n,
                'theta': theta[lag],
                'mean': mean,
                'se': se,
                'rmse': float(np.sqrt(np.mean((ok - theta[lag]) ** 2))) if n else math.nan,
                'z': (mean - theta[lag]) / se if n > 1 and se > 0 else math.nan})
        return pd.DataFrame(out)

    @staticmethod
    def consistency(agg):
        """Least-squares slope of log RMSE against log |window| per (estimator, lag, y)."""
        out = []
        for (est, lag, y), g in agg.groupby(['estimator', 'lag', 'y'], dropna=False, sort=False):
            g = g[np.isfinite(g.rmse) & (g.rmse > 0)]
            if len(g) < 2:
                continue
            fit = stats.linregress(np.log(g.window.to_numpy(dtype=np.float64)), np.log(g.rmse.to_numpy()))
            lo, hi = CONSISTENCY_BAND
            out.append({
                'estimator': est,
                'lag': lag,
                'y': y,
                'slope': fit.slope,
                'slope_se': fit.stderr,
                'in_band': bool(lo <= fit.slope <= hi)})
        return pd.DataFrame(out, columns=['estimator', 'lag', 'y', 'slope', 'slope_se', 'in_band'])


def run(cfg=DEFAULT_CFG):
    """Run the 'estimate' mode from a configuration."""
    return EstimateRunner(cfg)()


if __name__ == '__main__':
    run()
