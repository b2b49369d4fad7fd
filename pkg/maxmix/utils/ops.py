# maxmix 📈, AGPL-3.0 license

import contextlib
import time


class Profile(contextlib.ContextDecorator):
    """
    maxmix Profile class.
    Usage: as a decorator with @Profile() or as a context manager with 'with Profile():'
    """

    def __init__(self, t=0.0):
        """
        Initialize the Profile class.

        Args:
            t (float): Initial time. Defaults to 0.0.
        """
        self.t = t

    def __enter__(self):
        """
        Start timing.
        """
        self.start = time.perf_counter()
        return self

    def __exit__(self, type, value, traceback):
        """
        Stop timing.
        """
        self.dt = time.perf_counter() - self.start  # delta-time
        self.t += self.dt  # accumulate dt
