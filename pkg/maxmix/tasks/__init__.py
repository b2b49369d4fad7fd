# maxmix 📈, AGPL-3.0 license

from maxmix.tasks.bounds import BoundsRunner
from maxmix.tasks.clt import CltRunner
from maxmix.tasks.coupling import CouplingRunner
from maxmix.tasks.estimate import EstimateRunner
from maxmix.tasks.simulate import SimulateRunner
from maxmix.tasks.variance import VarianceRunner

__all__ = 'SimulateRunner', 'EstimateRunner', 'CltRunner', 'BoundsRunner', 'CouplingRunner', 'VarianceRunner'
