# maxmix 📈, AGPL-3.0 license
"""
Result objects returned by simulation, estimation, bounds and point-process routines.

Every result is a SimpleClass (readable printing, helpful attribute errors) that serialises with to_dict() and
to_json(); tabular results also write CSV with to_csv().
"""

import math

import numpy as np

from maxmix.utils import SimpleClass
from maxmix.utils.errors import ContractError
from maxmix.utils.files import csv_dump, json_dump
from maxmix.utils.stats import normal_quantile


class BaseResult(SimpleClass):
    """Base result with dict/JSON/CSV export over the attribute names listed in `_fields`."""
    _fields = ()

    def to_dict(self):
        """Return the result as a plain dictionary."""
        out = {}
        for k in self._fields:
            v = getattr(self, k)
            out[k] = v.to_dict() if hasattr(v, 'to_dict') else v
        return out

    def to_json(self, file=None):
        """Serialise to_dict() to JSON, writing `file` when given."""
        return json_dump(self.to_dict(), file)

    def rows(self):
        """Table rows of to_csv(), one row of scalar fields by default."""
        return [{k: v for k, v in self.to_dict().items() if not isinstance(v, (dict, list, tuple, np.ndarray))}]

    def to_csv(self, file=None):
        return csv_dump(self.rows(), file)


class ThetaValue(BaseResult):
    """
    Extremal coefficient with the method that produced it.

    Attributes:
        value (float): Coefficient value.
        method (str): 'closed-form', 'quadrature' or 'monte-carlo'.
        error (float): Nonnegative error estimate, 0 for closed forms.
        converged (bool): False when quadrature stopped at its point limit.
    """
    _fields = 'value', 'method', 'error', 'converged', 'n'

    def __init__(self, value, method='closed-form', error=0.0, converged=True, n=None):
        self.value = float(value)
        self.method = method
        self.error = float(error)
        self.converged = converged
        self.n = n

    def __float__(self):
        return self.value


class MonteCarloValue(BaseResult):
    """Monte Carlo mean with standard error; `flagged` counts draws excluded for truncation."""
    _fields = 'value', 'error', 'n', 'flagged'

    def __init__(self, value, error=0.0, n=0, flagged=0):
        self.value = float(value)
        self.error = float(error)
        self.n = int(n)
        self.flagged = int(flagged)

    def __float__(self):
        return self.value


class SeriesValue(BaseResult):
    """Truncated lattice series: value, truncation radius, tail bound and the partial sums per shell."""
    _fields = 'value', 'radius', 'tail', 'terms', 'partial_sums', 'decay'

    def __init__(self, value, radius, tail, terms, partial_sums=(), decay=None):
        self.value = float(value)
        self.radius = int(radius)
        self.tail = float(tail)
        self.terms = int(terms)
        self.partial_sums = list(partial_sums)
        self.decay = decay

    def __float__(self):
        return self.value


class FieldSample(BaseResult):
    """
    One realisation of a max-stable field on a lattice window.

    Attributes:
        window (LatticeWindow): Sites the field was simulated on.
        values (np.ndarray): Field values aligned with window.sites, read-only.
        base (LatticeWindow): Estimation window inside `window`, the window itself unless it was inflated for lags.
        seed (list): Stream triple [seed, tag, index] or None.
        atoms_used (int): Poisson atoms generated.
        truncated (bool): True when the atom cap was hit without a stopping certificate.
        diagnostic (float): Residual bias ratio at the stop, below 1 certifies the stop.
        model (str): Model description.
        process (PointProcessSample): Retained atoms when requested, else None.
    """
    _fields = 'model', 'seed', 'atoms_used', 'truncated', 'diagnostic', 'window'

    def __init__(self, window, values, base=None, seed=None, atoms_used=0, truncated=False, diagnostic=0.0, model='',
                 process=None):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (len(window), ):
            raise ContractError(f'{values.shape} values do not match a window of {len(window)} sites')
        values.flags.writeable = False
        self.window = window
        self.values = values
        self.base = base or window
        self.seed = seed
        self.atoms_used = int(atoms_used)
        self.truncated = bool(truncated)
        self.diagnostic = float(diagnostic)
        self.model = model
        self.process = process

    def __len__(self):
        return len(self.values)

    def at(self, points):
        """Values at `points`, raising ContractError listing the sites missing from the sample."""
        idx = self.window.index_of(points)
        if (idx < 0).any():
            missing = np.asarray(points).reshape(-1, self.window.dim)[idx < 0]
            raise ContractError(f'{len(missing)} sites missing from the sample: {missing[:10].tolist()}'
                                f"{' ...' if len(missing) > 10 else ''}. Simulate on window.cover(lags).")
        return self.values[idx]

    def to_dict(self):
        return {**super().to_dict(), 'sites': self.window.sites, 'values': self.values}

    def rows(self):
        cols = [f'x{i}' for i in range(self.window.dim)]
        return [dict(zip(cols, s), value=v) for s, v in zip(self.window.sites.tolist(), self.values.tolist())]


class PointProcessSample(BaseResult):
    """
    Poisson atoms (z_i, spectral datum) of one simulation, z strictly decreasing.

    Moving-maximum atoms carry locations u_i, Brown-Resnick atoms the Gaussian paths W_i on the window sites.

    Attributes:
        spec (ModelSpec): Model the atoms belong to.
        z (np.ndarray): Scales z_i = scale / Gamma_i.
        gamma (np.ndarray): Partial sums Gamma_i.
        locations (np.ndarray): (n, d) atom locations (moving maximum).
        paths (np.ndarray): (n, |window|) Gaussian paths (Brown-Resnick).
        window (LatticeWindow): Sites the paths live on.
        box (tuple): (lo, hi) location box of the moving maximum.
        state (dict): Bit generator state after the last batch, used to extend the process.
        truncated (bool): Atom cap hit without a certificate.
    """
    _fields = 'kind', 'n_atoms', 'gamma_last', 'truncated', 'stopped_by'

    def __init__(self, spec, z, gamma, locations=None, paths=None, window=None, box=None, state=None, truncated=False,
                 stopped_by='certificate'):
        self.spec = spec
        self.kind = spec.kind
        self.z = np.asarray(z, dtype=np.float64)
        self.gamma = np.asarray(gamma, dtype=np.float64)
        self.locations = None if locations is None else np.asarray(locations, dtype=np.float64)
        self.paths = None if paths is None else np.asarray(paths, dtype=np.float64)
        self.window = window
        self.box = box
        self.state = state
        self.truncated = truncated
        self.stopped_by = stopped_by

    def __len__(self):
        return len(self.z)

    @property
    def n_atoms(self):
        return len(self.z)

    @property
    def gamma_last(self):
        return float(self.gamma[-1]) if len(self.gamma) else 0.0

    @property
    def scale(self):
        """Scale of the Frechet points, z_i * Gamma_i."""
        return float(self.z[0] * self.gamma[0]) if len(self.z) else 1.0

    def contributions(self, sites):
        """(n_atoms, n_sites) matrix of z_i * f_i(s), computed exactly as during simulation."""
        sites = np.asarray(sites, dtype=np.int64).reshape(-1, self.spec.dim)
        if self.kind == 'moving-maximum':
            return self.z[:, None] * self.spec.kernel.pdf(sites[None, :, :] - self.locations[:, None, :])
        idx = self.window.index_of(sites)
        if (idx < 0).any():
            raise ContractError('Brown-Resnick atoms are only known on the simulation window')
        half_v = 0.5 * self.spec.variogram(self.window.sites[idx])
        return self.z[:, None] * np.exp(self.paths[:, idx] - half_v)

    def field(self, sites):
        """Pointwise maximum of the atoms at `sites`, 0 where there are no atoms."""
        c = self.contributions(sites)
        return c.max(0) if len(c) else np.zeros(len(np.asarray(sites).reshape(-1, self.spec.dim)))

    def select(self, mask):
        """A new sample holding the atoms selected by the boolean or index `mask`."""
        return PointProcessSample(self.spec,
                                  self.z[mask],
                                  self.gamma[mask],
                                  None if self.locations is None else self.locations[mask],
                                  None if self.paths is None else self.paths[mask],
                                  self.window,
                                  self.box,
                                  None,
                                  self.truncated,
                                  'selection')

    def rows(self):
        rows = []
        for i in range(len(self)):
            row = {'z': self.z[i], 'gamma': self.gamma[i]}
            if self.locations is not None:
                row.update({f'u{k}': self.locations[i, k] for k in range(self.locations.shape[1])})
            rows.append(row)
        return rows


class ExtremalDecomposition(BaseResult):
    """Partition of the atoms into S-extremal (Phi+_S) and S-subextremal (Phi-_S) index lists."""
    _fields = 'sites', 'extremal', 'subextremal', 'ties'

    def __init__(self, sites, extremal, subextremal, ties=0):
        self.sites = np.asarray(sites)
        self.extremal = np.asarray(extremal, dtype=np.int64)
        self.subextremal = np.asarray(subextremal, dtype=np.int64)
        self.ties = int(ties)


class CoupledProcess(BaseResult):
    """
    Coupled process built from the S1-extremal atoms of a process and the atoms of an independent copy lying strictly
    below the field on S1.

    Attributes:
        process (PointProcessSample): Atoms of the coupled process.
        source (np.ndarray): 'phi' or 'tilde' per atom.
        field (np.ndarray): Coupled field values on the window sites.
        exact (bool): True when the coupled field equals the original field on S1 bit for bit.
    """
    _fields = 'n_phi', 'n_tilde', 'exact', 'extended'

    def __init__(self, process, source, field, exact, extended=0):
        self.process = process
        self.source = np.asarray(source)
        self.field = np.asarray(field)
        self.exact = bool(exact)
        self.extended = int(extended)

    @property
    def n_phi(self):
        return int((self.source == 'phi').sum())

    @property
    def n_tilde(self):
        return int((self.source == 'tilde').sum())


class EstimateReport(BaseResult):
    """
    Point estimate of a pair extremal coefficient with its asymptotic variance and confidence interval.

    The interval is estimate +/- z_level * sqrt(variance / size). Estimates outside [1, 2] keep their raw value and set
    the 'out-of-range' flag.
    """
    _fields = ('estimator', 'lag', 'estimate', 'variance', 'variance_method', 'size', 'level', 'ci', 'y', 'flags',
               'extra')

    def __init__(self, estimator, lag, estimate, variance=None, variance_method=None, size=1, level=0.95, y=None,
                 flags=(), extra=None):
        self.estimator = estimator
        self.lag = [int(x) for x in np.atleast_1d(lag)]
        self.estimate = float(estimate)
        self.variance = None if variance is None else float(variance)
        self.variance_method = variance_method
        self.size = int(size)
        self.level = level
        self.y = y
        self.flags = list(flags)
        self.extra = extra or {}
        if not 1 <= self.estimate <= 2 and 'out-of-range' not in self.flags:
            self.flags.append('out-of-range')

    @property
    def ci(self):
        if self.variance is None:
            return [math.nan, math.nan]
        half = normal_quantile(0.5 + self.level / 2) * math.sqrt(self.variance / self.size)
        return [self.estimate - half, self.estimate + half]

    @property
    def se(self):
        return math.nan if self.variance is None else math.sqrt(self.variance / self.size)

    def rows(self):
        d = self.to_dict()
        lo, hi = d.pop('ci')
        return [{
            **{k: v for k, v in d.items() if k not in ('lag', 'flags', 'extra')},
            'lag': ' '.join(map(str, self.lag)),
            'ci_low': lo,
            'ci_high': hi,
            'flags': ';'.join(self.flags)}]


class MixingBoundReport(BaseResult):
    """
    Upper bound on beta(S1, S2) with alpha = beta / 2 and the components it was computed from.

    Attributes:
        family (str): 'cor2-countable', 'thm2-compact', 'thm2-family' or 'alpha-kl'.
        beta (float): Bound on the beta-mixing coefficient.
        alpha (float): Bound on the alpha-mixing coefficient, beta / 2.
        error (float): Propagated Monte Carlo / quadrature error of `beta`.
        components (dict): C(S) and theta values with their errors.
        flags (list): i.e. 'mc-error' when `error` exceeds 10% of `beta`.
    """
    _fields = 'family', 'set1', 'set2', 'beta', 'alpha', 'error', 'components', 'flags'

    def __init__(self, family, set1, set2, beta, error=0.0, components=None, flags=()):
        self.family = family
        self.set1 = np.asarray(set1).tolist()
        self.set2 = np.asarray(set2).tolist()
        self.beta = float(beta)
        self.alpha = self.beta / 2
        self.error = float(error)
        self.components = components or {}
        self.flags = list(flags)


class CltConditionReport(BaseResult):
    """Decay-exponent fit of the gamma bound and the summability diagnostics of the CLT conditions."""
    _fields = ('passed', 'trivial', 'b', 'b_se', 'threshold', 'delta', 'dim', 'lags', 'gamma', 'tail_sums',
               'moment_sums', 'verdict')

    def __init__(self, passed, b, b_se, threshold, delta, dim, lags, gamma, tail_sums=(), moment_sums=(),
                 trivial=False):
        self.passed = bool(passed)
        self.b = float(b)
        self.b_se = float(b_se)
        self.threshold = float(threshold)
        self.delta = float(delta)
        self.dim = int(dim)
        self.lags = list(lags)
        self.gamma = list(gamma)
        self.tail_sums = list(tail_sums)
        self.moment_sums = list(moment_sums)
        self.trivial = bool(trivial)

    @property
    def verdict(self):
        status = 'PASS' if self.passed else 'FAIL'
        if self.trivial:
            return f'{status}: gamma bound vanishes beyond a finite radius, conditions trivially satisfied'
        return f'{status}: fitted decay exponent b={self.b:.4g} (se {self.b_se:.2g}) vs required > {self.threshold:.4g}'

    def __str__(self):
        lines = [self.verdict, f'  d={self.dim} delta={self.delta:g}']
        lines += [f'  |h|={m:<6} gamma<={g:.6g}' for m, g in zip(self.lags, self.gamma)]
        return '\n'.join(lines)


class CltVerdict(BaseResult):
    """
    Normality verdict of one estimator: normalized errors sqrt(|window|) * (estimate - theta), their variance against
    the target variance, and a KS test against N(0, target).
    """
    _fields = ('estimator', 'lag', 'replicates', 'excluded', 'empirical_variance', 'target_variance',
               'variance_ratio', 'ks_statistic', 'ks_pvalue', 'variance_band', 'ks_level', 'passed')

    def __init__(self, estimator, lag, errors, target_variance, ks_statistic, ks_pvalue, variance_band=(0.8, 1.25),
                 ks_level=0.01, excluded=0):
        self.estimator = estimator
        self.lag = [int(x) for x in np.atleast_1d(lag)]
        self.errors = np.asarray(errors, dtype=np.float64)
        self.replicates = len(self.errors)
        self.excluded = int(excluded)
        self.empirical_variance = float(np.var(self.errors, ddof=1)) if len(self.errors) > 1 else math.nan
        self.target_variance = float(target_variance)
        self.ks_statistic = float(ks_statistic)
        self.ks_pvalue = float(ks_pvalue)
        self.variance_band = list(variance_band)
        self.ks_level = ks_level

    @property
    def variance_ratio(self):
        return self.empirical_variance / self.target_variance if self.target_variance > 0 else math.inf

    @property
    def passed(self):
        lo, hi = self.variance_band
        return bool(lo <= self.variance_ratio <= hi and self.ks_pvalue >= self.ks_level)


class Report(BaseResult):
    """Generic named report: a data dictionary and an optional pass/fail verdict."""
    _fields = 'name', 'passed', 'data'

    def __init__(self, name, data=None, passed=None):
        self.name = name
        self.data = data or {}
        self.passed = passed

    def __getitem__(self, key):
        return self.data[key]

    def rows(self):
        return self.data.get('rows', super().rows())
