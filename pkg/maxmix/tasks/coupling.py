# maxmix 📈, AGPL-3.0 license
"""
Point-process lab: the coupled process of each replicate, its exactness on S1, the shared-extremal-atom frequency of
(S1, S2) and the Slivnyak integral that bounds it.

Usage:
    $ maxmix coupling model=moving-maximum kernel=indicator-box bandwidth=1.5 window=8 set1="[[2, 2]]" replicates=1000
"""

import math
from dataclasses import replace

import numpy as np

from maxmix.engine.results import FieldSample, Report
from maxmix.engine.runner import BaseRunner
from maxmix.extremes.estimators import pair_theta_hat
from maxmix.extremes.pointprocess import build_coupling, classify_extremal, slyvniak_integral
from maxmix.fields.lattice import LatticeWindow
from maxmix.fields.simulate import simulate_moving_maximum
from maxmix.utils import DEFAULT_CFG, LOGGER, TryExcept, colorstr
from maxmix.utils.checks import check_lags
from maxmix.utils.errors import ConfigError, ContractError
from maxmix.utils.rng import make_rng
from maxmix.utils.stats import two_sample_test

COLUMNS = ('replicate', 'truncated', 'n_phi', 'n_tilde', 'extended', 'exact', 'decomposition', 'shared')


class CouplingRunner(BaseRunner):
    """
    Runner of the 'coupling' mode.

    Per replicate, eta and an independent copy on the window give the coupled process on S1, checked bit for bit
    against eta on S1 and for its S1-extremal atoms being exactly those of eta. A third, direct process serves the
    distributional comparisons (field marginals off S1, atom counts, pair coefficient). `passed` requires exactness on
    every replicate and mc_shared <= slivnyak + 3 combined standard errors.
    """
    mode = 'coupling'
    operations = ('maxmix.fields.simulate.simulate_moving_maximum', 'maxmix.extremes.pointprocess.build_coupling',
                  'maxmix.extremes.pointprocess.classify_extremal', 'maxmix.extremes.pointprocess.slyvniak_integral',
                  'maxmix.utils.stats.two_sample_test')

    def __init__(self, cfg=DEFAULT_CFG, overrides=None, _callbacks=None):
        super().__init__(cfg, overrides, _callbacks)
        if self.spec.is_brown_resnick:
            raise ConfigError("'coupling' needs exact atom sets, use 'model=moving-maximum'")
        self.window = LatticeWindow.box(self.args.window, self.args.dim)
        self.set1 = check_lags(self.args.set1, self.args.dim, 'set1')
        if self.args.set2 is not None:
            self.set2 = check_lags(self.args.set2, self.args.dim, 'set2')
        else:
            shift = self.args.distances[0] + int(np.ptp(self.set1[:, 0]))
            self.set2 = self.set1 + np.eye(self.args.dim, dtype=np.int64)[0] * shift
        for name, S in (('set1', self.set1), ('set2', self.set2)):
            if (self.window.index_of(S) < 0).any():
                raise ConfigError(f"'{name}={S.tolist()}' is not inside the window {self.window}")
        self.trunc = replace(self.trunc, min_gamma=float(max(self.args.count_levels)))
        self.off = np.flatnonzero(~np.isin(np.arange(len(self.window)), self.window.index_of(self.set1)))

    def counts(self, pp):
        """Atoms with Gamma <= k in the standard scale for each count level k."""
        return [int((pp.z >= pp.scale / k).sum()) for k in self.args.count_levels]

    def replicate(self, index, streams):
        field, pp = simulate_moving_maximum(self.spec, self.window, streams.field, self.trunc)
        _, pp_tilde = simulate_moving_maximum(self.spec, self.window, streams.tilde, self.trunc)
        direct, pp_direct = simulate_moving_maximum(self.spec, self.window, streams.direct, self.trunc)
        truncated = pp.truncated or pp_tilde.truncated or pp_direct.truncated
        cp = build_coupling(pp, pp_tilde, self.set1, self.trunc)
        phi_plus = classify_extremal(pp, field, self.set1)
        hat_plus = classify_extremal(cp.process, FieldSample(self.window, cp.field), self.set1)
        same = np.array_equal(np.sort(pp.z[phi_plus.extremal]), np.sort(cp.process.z[hat_plus.extremal])) and bool(
            np.all(cp.source[hat_plus.subextremal] == 'tilde'))
        shared = len(np.intersect1d(phi_plus.extremal, classify_extremal(pp, field, self.set2).extremal)) > 0
        if self.args.save_atoms:
            with TryExcept(f'atom dump of replicate {index} failed'):
                cp.process.to_csv(self.save_dir / f'atoms/{index:05d}.csv')
        return {
            'row': {
                'replicate': index,
                'truncated': truncated,
                'n_phi': cp.n_phi,
                'n_tilde': cp.n_tilde,
                'extended': cp.extended,
                'exact': cp.exact,
                'decomposition': same,
                'shared': shared},
            'coupled': cp.field,
            'direct': direct.values,
            'coupled_counts': self.counts(cp.process),
            'direct_counts': self.counts(pp_direct)}

    def run(self):
        results = self.map_replicates()
        rows = [r['row'] for r in results]
        self.write_csv('replicates.csv', rows, list(COLUMNS))
        if self.args.save_atoms:
            self.files.extend(f'atoms/{i:05d}.csv' for i in range(len(rows))
                              if (self.save_dir / f'atoms/{i:05d}.csv').exists())
        valid = [r for r in results if not r['row']['truncated']]
        flagged = len(results) - len(valid)
        if len(valid) < 2:
            raise ContractError(f'{flagged} of {len(results)} replicates were truncation-flagged')

        coupled = np.array([r['coupled'] for r in valid])
        direct = np.array([r['direct'] for r in valid])
        cc = np.array([r['coupled_counts'] for r in valid])
        dc = np.array([r['direct_counts'] for r in valid])
        marginals = [two_sample_test(coupled[:, j], direct[:, j]) for j in self.off]
        counts = [two_sample_test(cc[:, j], dc[:, j]) for j in range(cc.shape[1])]
        j0, j1 = 0, int(self.window.index_of(self.window.sites[0] + np.eye(self.args.dim, dtype=np.int64)[0])[0])
        t_hat, t_direct = pair_theta_hat(coupled[:, j0], coupled[:, j1]), pair_theta_hat(direct[:, j0], direct[:, j1])

        n = len(valid)
        p = float(np.mean([r['row']['shared'] for r in valid]))
        shared = {'value': p, 'error': math.sqrt(p * (1 - p) / n), 'n': n, 'flagged': flagged}
        slyv = slyvniak_integral(self.spec, self.set1, self.set2, self.args.grid, max(self.args.replicates, 2),
                                 make_rng(self.args.seed, 'lab'), self.trunc)
        margin = 3 * math.hypot(shared['error'], slyv['error'])
        ordering = shared['value'] <= slyv['value'] + margin
        exact = all(r['row']['exact'] for r in valid)
        decomposition = all(r['row']['decomposition'] for r in valid)

        data = {
            'replicates': n,
            'flagged': flagged,
            'set1': self.set1,
            'set2': self.set2,
            'exact': exact,
            'decomposition': decomposition,
            'shared_extremal': shared,
            'slyvniak': slyv.data,
            'ordering': ordering,
            'marginal_ks_max': max((d for d, _ in marginals), default=0.0),
            'marginal_pvalue_min': min((q for _, q in marginals), default=1.0),
            'count_levels': self.args.count_levels,
            'count_ks': [d for d, _ in counts],
            'count_pvalues': [q for _, q in counts],
            'theta_coupled': t_hat.to_dict(),
            'theta_direct': t_direct.to_dict(),
            'empty_thinning_freq': float(np.mean([r['row']['n_tilde'] == 0 for r in valid]))}
        self.manifest['flagged'] = flagged
        self.write_json('report.json', data)
        LOGGER.info(f"{colorstr('bold', 'coupling')}: exact {exact}, decomposition {decomposition}, "
                    f"shared {p:.4f} ± {shared['error']:.4f} <= slivnyak {slyv['value']:.4f} ± {slyv['error']:.4f}: "
                    f"{ordering}")
        return Report('coupling', data, passed=bool(exact and decomposition and ordering))


def run(cfg=DEFAULT_CFG):
    """Run the 'coupling' mode from a configuration."""
    return CouplingRunner(cfg)()


if __name__ == '__main__':
    run()
