# maxmix 📈, AGPL-3.0 license
"""
Model specifications of the two spectral families: Brown-Resnick fields driven by a variogram and moving maxima driven
by a kernel density.

Usage:
    from maxmix.fields.models import ModelSpec

    spec = ModelSpec.brown_resnick(scale=2.0, exponent=1.0, dim=2)
    spec.theta_pair([1, 0])
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from maxmix.utils.errors import ConfigError

VARIOGRAMS = 'power', 'fractional'
KERNELS = 'gaussian', 'compact-gaussian', 'indicator-box'
GAUSSIAN_TAIL = 1e-8  # kernel mass left outside the effective support radius of the gaussian kernel


def _sq_norm(x):
    # summed per axis in a fixed order so equal differences give bit-equal values whatever the array shape
    x = np.asarray(x, dtype=np.float64)
    s = np.zeros(x.shape[:-1])
    for k in range(x.shape[-1]):
        s = s + x[..., k] * x[..., k]
    return s


@dataclass(frozen=True)
class VariogramSpec:
    """
    Power variogram V(h) = (|h|_2 / scale) ** exponent of a Gaussian field with stationary increments.

    `family` is a label: 'fractional' (fractional Brownian motion, exponent < 2) or 'power' (exponent in (0, 2]).
    scale=inf gives V = 0, the fully dependent field.
    """
    family: str = 'power'
    scale: float = 1.0
    exponent: float = 1.0

    def __post_init__(self):
        if self.family not in VARIOGRAMS:
            raise ConfigError(f"Invalid variogram family '{self.family}', valid families are {VARIOGRAMS}")
        if not self.scale > 0:
            raise ConfigError(f"Invalid variogram 'scale={self.scale}', must be positive")
        top = 2.0 if self.family == 'power' else math.nextafter(2.0, 0)
        if not 0 < self.exponent <= top:
            raise ConfigError(f"Invalid 'exponent={self.exponent}' for a '{self.family}' variogram")

    def __call__(self, h):
        """V(h) for an (..., d) array of lags; a single lag (scalar or (d,) vector) gives a length-1 array."""
        h = np.asarray(h, dtype=np.float64)
        r = np.sqrt(_sq_norm(h.reshape(1, -1) if h.ndim < 2 else h))
        if math.isinf(self.scale):
            return np.zeros_like(r)
        return (r / self.scale) ** self.exponent

    def covariance(self, s, t):
        """Cov(W(s), W(t)) = (V(s) + V(t) - V(s - t)) / 2 of the field pinned at W(0) = 0, as an (|s|, |t|) matrix."""
        s, t = np.atleast_2d(s).astype(np.float64), np.atleast_2d(t).astype(np.float64)
        return 0.5 * (self(s)[:, None] + self(t)[None, :] - self(s[:, None, :] - t[None, :, :]))


@dataclass(frozen=True)
class KernelSpec:
    """
    Kernel density f on R^d of a moving-maximum field.

    Families:
        gaussian: N(0, bandwidth^2 I) cut at the effective support radius R where the tail mass drops below 1e-8;
            closed forms ignore the cut.
        compact-gaussian: c * (exp(-|x|^2 / 2 bandwidth^2) - exp(-R^2 / 2 bandwidth^2)) on the ball |x|_2 < R,
            continuous, R defaults to 3 * bandwidth.
        indicator-box: uniform density on the sup-norm box |x| <= bandwidth, R = bandwidth.
    """
    family: str = 'indicator-box'
    bandwidth: float = 2.0
    dim: int = 2
    radius: float = None
    norm: float = field(init=False)  # normalisation constant c
    f_max: float = field(init=False)  # sup_x f(x)

    def __post_init__(self):
        if self.family not in KERNELS:
            raise ConfigError(f"Invalid kernel family '{self.family}', valid families are {KERNELS}")
        s, d = self.bandwidth, self.dim
        if not s > 0 or math.isinf(s):
            raise ConfigError(f"Invalid kernel 'bandwidth={s}', must be positive and finite")
        if self.family == 'gaussian':
            radius = s * math.sqrt(stats.chi2.ppf(1 - GAUSSIAN_TAIL, d))
            norm = (2 * math.pi * s * s) ** (-d / 2)
            f_max = norm
        elif self.family == 'compact-gaussian':
            radius = self.radius or 3 * s
            if not radius > 0:
                raise ConfigError(f"Invalid kernel 'radius={self.radius}'")
            floor = math.exp(-radius ** 2 / (2 * s * s))
            ball = math.pi ** (d / 2) * radius ** d / math.gamma(d / 2 + 1)
            norm = 1 / ((2 * math.pi * s * s) ** (d / 2) * stats.chi2.cdf(radius ** 2 / s ** 2, d) - floor * ball)
            f_max = norm * (1 - floor)
        else:
            radius = s
            norm = (2 * s) ** (-d)
            f_max = norm
        object.__setattr__(self, 'radius', float(radius))
        object.__setattr__(self, 'norm', float(norm))
        object.__setattr__(self, 'f_max', float(f_max))

    @property
    def is_compact(self):
        return self.family != 'gaussian'

    @property
    def diameter(self):
        """Sup-norm size beyond which two shifted supports no longer overlap."""
        return 2 * self.radius

    def pdf(self, x):
        """f(x) for an (..., d) array of points."""
        x = np.asarray(x, dtype=np.float64)
        if self.family == 'indicator-box':
            return np.where(np.abs(x).max(-1) <= self.radius, self.norm, 0.0)
        q = _sq_norm(x) / (2 * self.bandwidth ** 2)
        floor = self.radius ** 2 / (2 * self.bandwidth ** 2)
        if self.family == 'gaussian':
            # cut at the effective radius so atoms never reach beyond the sites they are deposited on
            return np.where(q <= floor, self.norm * np.exp(-q), 0.0)
        return np.where(q < floor, self.norm * (np.exp(-q) - math.exp(-floor)), 0.0)

    def sample(self, rng, size):
        """Draw `size` points from the density f."""
        d, s = self.dim, self.bandwidth
        if self.family == 'indicator-box':
            return rng.uniform(-self.radius, self.radius, (size, d))
        if self.family == 'gaussian':
            return s * rng.standard_normal((size, d))
        floor = self.radius ** 2 / (2 * s * s)
        out = np.empty((0, d))
        while len(out) < size:  # gaussian proposal inside the ball, accepted with prob 1 - exp(q - floor)
            x = s * rng.standard_normal((2 * (size - len(out)) + 16, d))
            q = _sq_norm(x) / (2 * s * s)
            ok = (q < floor) & (rng.random(len(x)) < 1 - np.exp(np.minimum(q - floor, 0)))
            out = np.concatenate([out, x[ok]])
        return out[:size]

    def disjoint(self, h):
        """True when f and f(. - h) have disjoint supports (up to a null set)."""
        h = np.asarray(h, dtype=np.float64)
        if self.family == 'indicator-box':
            return bool(np.abs(h).max() >= self.diameter)
        if self.family == 'compact-gaussian':
            return bool(math.sqrt(_sq_norm(h)) >= self.diameter)
        return False


@dataclass(frozen=True)
class TruncationPolicy:
    """
    Stopping controls of the series simulation.

    Attributes:
        max_atoms (int): Hard cap on atoms per sample, hitting it sets the truncation flag.
        bias_tol (float): Brown-Resnick residual bias tolerance epsilon.
        pilot_draws (int): Gaussian draws of the pilot run estimating the spectral quantile.
        pilot_quantile (float): Quantile q of max_t exp(W(t) - V(t) / 2).
        pilot_seed (int): Seed of the pilot stream.
        min_gamma (float): Keep generating moving-maximum atoms at least until Gamma_i >= min_gamma.
    """
    max_atoms: int = 100_000
    bias_tol: float = 0.01
    pilot_draws: int = 2000
    pilot_quantile: float = 0.9999
    pilot_seed: int = 0
    min_gamma: float = 0.0

    def __post_init__(self):
        if self.max_atoms < 1 or not self.bias_tol > 0:
            raise ConfigError(f'Invalid truncation policy {self}, max_atoms >= 1 and bias_tol > 0 are required')

    @classmethod
    def from_cfg(cls, args, **kwargs):
        return cls(max_atoms=args.max_atoms,
                   bias_tol=args.bias_tol,
                   pilot_draws=args.pilot_draws,
                   pilot_quantile=args.pilot_quantile,
                   pilot_seed=args.seed,
                   **kwargs)


@dataclass(frozen=True)
class ModelSpec:
    """
    A simple max-stable model: Brown-Resnick (variogram) or moving maximum (kernel) on Z^d.

    Extremal coefficients are answered through maxmix.extremes.theta.
    """
    kind: str
    dim: int = 2
    variogram: VariogramSpec = None
    kernel: KernelSpec = None

    def __post_init__(self):
        if self.kind == 'brown-resnick' and self.variogram is None:
            raise ConfigError('a brown-resnick model needs a VariogramSpec')
        if self.kind == 'moving-maximum' and (self.kernel is None or self.kernel.dim != self.dim):
            raise ConfigError(f'a moving-maximum model needs a KernelSpec of dimension {self.dim}')
        if self.kind not in ('brown-resnick', 'moving-maximum'):
            raise ConfigError(f"Invalid model '{self.kind}', valid models are brown-resnick and moving-maximum")

    @classmethod
    def brown_resnick(cls, scale=1.0, exponent=1.0, dim=2, family='power'):
        return cls('brown-resnick', dim, variogram=VariogramSpec(family, scale, exponent))

    @classmethod
    def moving_maximum(cls, family='indicator-box', bandwidth=2.0, dim=2, radius=None):
        return cls('moving-maximum', dim, kernel=KernelSpec(family, bandwidth, dim, radius))

    @classmethod
    def from_cfg(cls, args):
        """Build the model of a resolved configuration namespace."""
        if args.model == 'brown-resnick':
            return cls.brown_resnick(args.scale, args.exponent, args.dim, args.variogram)
        return cls.moving_maximum(args.kernel, args.bandwidth, args.dim, args.radius)

    @property
    def is_brown_resnick(self):
        return self.kind == 'brown-resnick'

    @property
    def is_compact(self):
        """True when the spectral functions have compact support, making the simulation exact."""
        return not self.is_brown_resnick and self.kernel.is_compact

    def describe(self):
        if self.is_brown_resnick:
            v = self.variogram
            return f'brown-resnick d={self.dim} V(h)=(|h|/{v.scale:g})^{v.exponent:g} ({v.family})'
        k = self.kernel
        return f'moving-maximum d={self.dim} {k.family} kernel bandwidth={k.bandwidth:g} R={k.radius:.4g}'

    def to_dict(self):
        out = {'kind': self.kind, 'dim': self.dim}
        if self.is_brown_resnick:
            out['variogram'] = asdict(self.variogram)
        else:
            out['kernel'] = asdict(self.kernel)
        return out

    def theta_pair(self, h):
        """Pair extremal coefficient theta(h) as a ThetaValue."""
        from maxmix.extremes.theta import theta_pair
        return theta_pair(self, h)

    def theta_gap(self, h):
        """2 - theta(h), evaluated without cancellation."""
        from maxmix.extremes.theta import theta_gap
        return theta_gap(self, h)

    def theta_set(self, sites, **kwargs):
        """Set extremal coefficient theta(S) as a ThetaValue."""
        from maxmix.extremes.theta import theta_set
        return theta_set(self, sites, **kwargs)

    def gap_bound(self, h):
        """Cheap upper bound of 2 - theta(h): exact for closed forms, 1 inside the kernel diameter otherwise."""
        from maxmix.extremes.theta import gap_bounds
        return float(gap_bounds(self, h)[0])

