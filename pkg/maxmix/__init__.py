# maxmix 📈, AGPL-3.0 license

__version__ = '0.3.0'

from maxmix.engine.model import MaxStableModel
from maxmix.fields.models import KernelSpec, ModelSpec, VariogramSpec
from maxmix.utils.checks import check_maxmix as checks

__all__ = '__version__', 'MaxStableModel', 'ModelSpec', 'VariogramSpec', 'KernelSpec', 'checks'  # allow simpler import
