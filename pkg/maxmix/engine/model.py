# maxmix 📈, AGPL-3.0 license

from maxmix import tasks
from maxmix.cfg import get_cfg
from maxmix.extremes.theta import theta_pair, theta_set
from maxmix.fields.lattice import LatticeWindow
from maxmix.fields.models import ModelSpec, TruncationPolicy
from maxmix.fields.simulate import simulate
from maxmix.utils import DEFAULT_CFG, LOGGER, callbacks
from maxmix.utils.rng import make_streams

# Map mode to runner class
TASK_MAP = {
    'simulate': tasks.SimulateRunner,
    'estimate': tasks.EstimateRunner,
    'clt-verify': tasks.CltRunner,
    'bounds': tasks.BoundsRunner,
    'coupling': tasks.CouplingRunner,
    'variance-opt': tasks.VarianceRunner}


class MaxStableModel:
    """
    A max-stable random field on Z^d and the experiments run on it.

    Args:
        model (str): 'moving-maximum' or 'brown-resnick'.
        **overrides: Configuration arguments fixed for every call, i.e. kernel='gaussian', bandwidth=1.5, seed=3.

    Attributes:
        overrides (dict): Arguments shared by all modes.
        args (IterableSimpleNamespace): Resolved arguments.
        spec (ModelSpec): The model.
        callbacks (defaultdict): Callbacks handed to every runner.
        runner (BaseRunner): Runner of the last mode called.
        save_dir (Path): Run directory of the last mode called.

    Methods:
        simulate(**kwargs), estimate(**kwargs), clt_verify(**kwargs), bounds(**kwargs), coupling(**kwargs),
        variance_opt(**kwargs):
            Run a mode with additional argument overrides and return its result.
        theta(h), theta_set(S):
            Extremal coefficients of the model.
        sample(window=None, seed=None, index=0):
            One field sample without writing any file.
    """

    def __init__(self, model='moving-maximum', **overrides) -> None:
        self.overrides = {'model': model, **overrides}
        self.overrides.pop('mode', None)
        self.args = get_cfg(DEFAULT_CFG, self.overrides)
        self.spec = ModelSpec.from_cfg(self.args)
        self.callbacks = callbacks.get_default_callbacks()
        self.runner = None
        self.save_dir = None

    def __repr__(self):
        return f'{self.__class__.__name__}({self.spec.describe()})'

    def _run(self, mode, **kwargs):
        self.runner = TASK_MAP[mode](overrides={**self.overrides, **kwargs}, _callbacks=self.callbacks)
        self.save_dir = self.runner.save_dir
        return self.runner()

    def simulate(self, **kwargs):
        """Simulate replicate fields, see maxmix.tasks.simulate."""
        return self._run('simulate', **kwargs)

    def estimate(self, **kwargs):
        """Estimate pair extremal coefficients, see maxmix.tasks.estimate."""
        return self._run('estimate', **kwargs)

    def clt_verify(self, **kwargs):
        """Verify the normality of the estimators, see maxmix.tasks.clt."""
        return self._run('clt-verify', **kwargs)

    def bounds(self, **kwargs):
        """Mixing-coefficient bounds and CLT conditions, see maxmix.tasks.bounds."""
        return self._run('bounds', **kwargs)

    def coupling(self, **kwargs):
        """Coupling and shared-extremal-atom experiments, see maxmix.tasks.coupling."""
        return self._run('coupling', **kwargs)

    def variance_opt(self, **kwargs):
        """Optimal theta1 threshold, see maxmix.tasks.variance."""
        return self._run('variance-opt', **kwargs)

    def theta(self, h):
        """Pair extremal coefficient theta(h)."""
        return theta_pair(self.spec, h, self.args.quad_rtol, self.args.quad_max_points)

    def theta_set(self, S, **kwargs):
        """Set extremal coefficient theta(S)."""
        kwargs = {'n_draws': self.args.theta4_draws, 'rtol': self.args.quad_rtol, **kwargs}
        return theta_set(self.spec, S, **kwargs)

    def sample(self, window=None, seed=None, index=0):
        """
        Simulate one field on `window` (a LatticeWindow or a box side) from the stream (seed, 'simulate', index).

        Returns:
            (FieldSample): The sample.
        """
        if not isinstance(window, LatticeWindow):
            window = LatticeWindow.box(window or self.args.window, self.spec.dim)
        seed = self.args.seed if seed is None else seed
        sample = simulate(self.spec, window, make_streams(seed, 'simulate', index).field,
                          TruncationPolicy.from_cfg(self.args))
        if sample.truncated:
            LOGGER.warning(f'WARNING ⚠️ sample {index} hit the atom cap, its values may be biased')
        return sample

    def add_callback(self, event: str, func):
        """Add a callback to every runner started from this model."""
        self.callbacks[event].append(func)
