# maxmix 📈, AGPL-3.0 license

from .lattice import LatticeWindow, set_distance, shell, sup_norm
from .models import KernelSpec, ModelSpec, TruncationPolicy, VariogramSpec
from .simulate import (extend_process, frechet_points, gaussian_increments_sample, max_stability_check, simulate,
                       simulate_brown_resnick, simulate_moving_maximum)

__all__ = ('LatticeWindow', 'set_distance', 'shell', 'sup_norm', 'KernelSpec', 'ModelSpec', 'TruncationPolicy',
           'VariogramSpec', 'extend_process', 'frechet_points', 'gaussian_increments_sample', 'max_stability_check',
           'simulate', 'simulate_brown_resnick', 'simulate_moving_maximum')
