# maxmix 📈, AGPL-3.0 license
"""
Base callbacks
"""

from collections import defaultdict
from copy import deepcopy

# Runner callbacks -----------------------------------------------------------------------------------------------------


def on_run_start(runner):
    """Called after the run directory and arguments are set up, before any replicate runs."""
    pass


def on_replicate_end(runner):
    """Called in the main thread after each replicate result is collected, in replicate order."""
    pass


def on_run_end(runner):
    """Called when all replicates finished and the summary is computed."""
    pass


def on_save(runner):
    """Called after the data files and the manifest are written."""
    pass


default_callbacks = {
    'on_run_start': [on_run_start],
    'on_replicate_end': [on_replicate_end],
    'on_run_end': [on_run_end],
    'on_save': [on_save]}


def get_default_callbacks():
    """
    Return a copy of the default_callbacks dictionary with lists as default values.

    Returns:
        (defaultdict): A defaultdict with keys from default_callbacks and empty lists as default values.
    """
    return defaultdict(list, deepcopy(default_callbacks))


def add_integration_callbacks(instance):
    """
    Add the logging callbacks every runner carries.

    Args:
        instance (BaseRunner): An object with a 'callbacks' attribute that is a dictionary of callback lists.
    """
    from .logger import callbacks as logger_callbacks

    for k, v in logger_callbacks.items():
        if v not in instance.callbacks[k]:  # prevent duplicate callbacks addition
            instance.callbacks[k].append(v)  # callback[name].append(func)
