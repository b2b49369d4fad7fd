# maxmix 📈, AGPL-3.0 license
"""
Optimal threshold of the theta1 estimator: minimise the series variance sigma1^2(y) per lag.

Usage:
    $ maxmix variance-opt model=brown-resnick scale=1 exponent=1 lags="[[1, 0], [0, 1]]"
"""

import numpy as np

from maxmix.engine.results import Report
from maxmix.engine.runner import BaseRunner
from maxmix.extremes.estimators import optimal_y, sigma1_profile, sigma1_sq
from maxmix.extremes.theta import theta4_provider
from maxmix.utils import DEFAULT_CFG, LOGGER, colorstr
from maxmix.utils.checks import check_lags
from maxmix.utils.errors import BracketError

PROFILE_POINTS = 25
PROFILE_SPAN = 8.0  # profile grid covers [y* / span, y* * span]
STABILITY_RTOL = 0.05  # y* may move this much when the theta4 Monte Carlo draws are doubled


class VarianceRunner(BaseRunner):
    """
    Runner of the 'variance-opt' mode.

    For each lag the minimiser y* of sigma1^2, the profile on a geometric grid around it with second differences
    (profile_<lag>.csv) and a rerun with twice the theta4 draws as a stability check. variance.csv and report.json
    carry one row per lag. The mode is diagnostic, its result has no pass/fail verdict.
    """
    mode = 'variance-opt'
    operations = ('maxmix.extremes.estimators.optimal_y', 'maxmix.extremes.estimators.sigma1_profile',
                  'maxmix.extremes.estimators.sigma1_sq', 'maxmix.extremes.theta.Theta4Provider')

    def __init__(self, cfg=DEFAULT_CFG, overrides=None, _callbacks=None):
        super().__init__(cfg, overrides, _callbacks)
        self.lags = check_lags(self.args.lags, self.args.dim)
        self.y0 = self.args.thresholds[0] if self.args.thresholds else 1.0  # bracket start

    def optimize(self, h):
        """Return one result row for lag h, writing its profile."""
        lag = ' '.join(map(str, h))
        name = f"profile_{'_'.join(map(str, h))}.csv"
        provider = theta4_provider(self.spec, h, self.args)
        try:
            y = optimal_y(self.spec, h, provider, self.y0)
        except BracketError as e:
            LOGGER.warning(f'WARNING ⚠️ lag {h.tolist()}: {e}')
            self.write_csv(name, [{'y': k, 'sigma1_sq': v} for k, v in e.profile.items()])
            return {'lag': lag, 'y_opt': None, 'error': f'{type(e).__name__}: {e}'}

        profile = sigma1_profile(self.spec, h, np.geomspace(y / PROFILE_SPAN, y * PROFILE_SPAN, PROFILE_POINTS),
                                 provider)
        d2 = np.concatenate([[np.nan], profile['second_differences'], [np.nan]])
        self.write_csv(name, [{
            'y': a,
            'sigma1_sq': b,
            'second_difference': c} for a, b, c in zip(profile['y'], profile['sigma1_sq'], d2)])

        if self.spec.is_brown_resnick or provider.method == 'monte-carlo':
            finer = theta4_provider(self.spec, h, self.args, n_draws=2 * self.args.theta4_draws)
            rerun = optimal_y(self.spec, h, finer, self.y0)
        else:
            rerun = y  # deterministic theta4 coefficients
        change = abs(rerun - y) / y
        if change >= STABILITY_RTOL:
            LOGGER.warning(f'WARNING ⚠️ lag {h.tolist()}: y* moved by {change:.1%} with doubled theta4 draws, '
                           f"increase 'theta4_draws'")
        sigma = sigma1_sq(self.spec, h, y, provider)
        return {
            'lag': lag,
            'y_opt': y,
            'sigma1_sq': sigma.value,
            'sigma1_sq_at_y0': sigma1_sq(self.spec, h, self.y0, provider).value,
            'y_opt_rerun': rerun,
            'relative_change': change,
            'stable': change < STABILITY_RTOL,
            'convex': profile['convex'],
            'interior': profile['interior'],
            'series_radius': sigma.radius,
            'error': ''}

    def run(self):
        rows = []
        for h in self.lags:
            row = self.optimize(h)
            rows.append(row)
            if row['y_opt'] is not None:
                LOGGER.info(f"{colorstr('bold', 'lag')} {h.tolist()}: y*={row['y_opt']:.5g} "
                            f"sigma1^2={row['sigma1_sq']:.5g} (y={self.y0:g}: {row['sigma1_sq_at_y0']:.5g}), "
                            f"convex {row['convex']}, stable {row['stable']}")
        columns = ['lag', 'y_opt', 'sigma1_sq', 'sigma1_sq_at_y0', 'y_opt_rerun', 'relative_change', 'stable',
                   'convex', 'interior', 'series_radius', 'error']
        self.write_csv('variance.csv', rows, columns)
        report = Report('variance-opt', {'rows': rows, 'y0': self.y0})
        self.write_json('report.json', report.to_dict())
        return report


def run(cfg=DEFAULT_CFG):
    """Run the 'variance-opt' mode from a configuration."""
    return VarianceRunner(cfg)()


if __name__ == '__main__':
    run()
