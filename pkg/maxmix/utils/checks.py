# maxmix 📈, AGPL-3.0 license
import platform

import numpy as np
import pkg_resources as pkg
import scipy

from maxmix.utils import LOGGER, colorstr, emojis
from maxmix.utils.errors import ConfigError

ESTIMATORS = 'theta1', 'theta2', 'theta3'


def check_version(current: str = '0.0.0',
                  minimum: str = '0.0.0',
                  name: str = 'version ',
                  pinned: bool = False,
                  hard: bool = False,
                  verbose: bool = False) -> bool:
    """
    Check current version against the required minimum version.

    Args:
        current (str): Current version.
        minimum (str): Required minimum version.
        name (str): Name to be used in warning message.
        pinned (bool): If True, versions must match exactly. If False, minimum version must be satisfied.
        hard (bool): If True, raise a ConfigError if the minimum version is not met.
        verbose (bool): If True, print warning message if minimum version is not met.

    Returns:
        (bool): True if minimum version is met, False otherwise.
    """
    current, minimum = (pkg.parse_version(x) for x in (current, minimum))
    result = (current == minimum) if pinned else (current >= minimum)  # bool
    warning_message = f'WARNING ⚠️ {name}{minimum} is required by maxmix, but {name}{current} is currently installed'
    if hard and not result:
        raise ConfigError(emojis(warning_message))  # min requirements not met
    if verbose and not result:
        LOGGER.warning(warning_message)
    return result


def check_maxmix(verbose=True):
    """Log a human-readable maxmix software summary."""
    from maxmix import __version__
    check_version(np.__version__, '1.25.0', 'numpy ', hard=False, verbose=True)  # Generator.spawn
    s = (f'maxmix {__version__} 🚀 Python-{platform.python_version()} numpy-{np.__version__} '
         f'scipy-{scipy.__version__}')
    if verbose:
        LOGGER.info(f'Setup complete ✅ {s}')
    return s


def check_extents(window, dim):
    """
    Resolve a window descriptor to per-axis box extents.

    Args:
        window (int | list): Box side n of the n x ... x n window, or per-axis extents.
        dim (int): Lattice dimension d.

    Returns:
        (tuple): Positive integer extents of length d.
    """
    extents = [window] * dim if isinstance(window, int) and not isinstance(window, bool) else list(window)
    if len(extents) != dim or not all(isinstance(n, int) and not isinstance(n, bool) and n > 0 for n in extents):
        raise ConfigError(f"Invalid 'window={window}'. Valid windows are a positive int or {dim} positive ints.")
    return tuple(extents)


def box_boundary_ratio(extents):
    """Return |boundary| / |window| of a box with the given extents, boundary sites having a neighbour outside."""
    extents = np.asarray(extents, dtype=np.int64)
    size = int(np.prod(extents))
    interior = int(np.prod(np.clip(extents - 2, 0, None)))
    return (size - interior) / size


def check_window_family(windows, dim, bound):
    """
    Reject window families whose boundary ratio does not decrease or stays above `bound`.

    A growing family of windows only satisfies the normality theory when |boundary| / |window| tends to 0. Box
    families do, thin strips such as [n, 1] do not.

    Returns:
        (list): Boundary ratios of the family, in order.
    """
    ratios = [box_boundary_ratio(check_extents(w, dim)) for w in windows]
    sizes = [int(np.prod(check_extents(w, dim))) for w in windows]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ConfigError(f"Invalid 'windows={windows}'. Window sizes must increase.")
    if any(b > a for a, b in zip(ratios, ratios[1:])) or ratios[-1] > bound:
        raise ConfigError(f"Invalid 'windows={windows}'. Boundary ratios {[round(r, 4) for r in ratios]} do not "
                          f"decrease below 'boundary_ratio={bound}', the window family does not grow regularly.")
    return ratios


def check_lags(lags, dim, name='lags'):
    """Return lags (or a site list `name`) as an (n, d) integer array, raising ConfigError on malformed input."""
    try:
        arr = np.asarray(lags)
        if arr.ndim == 1 and dim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[1] != dim or arr.shape[0] == 0 or not np.all(arr == np.round(arr)):
            raise ValueError
    except (ValueError, TypeError) as e:
        raise ConfigError(f"Invalid '{name}={lags}'. Expected a list of integer {dim}-vectors, "
                          f"i.e. '{name}={[[1] + [0] * (dim - 1)]}'") from e
    return arr.astype(np.int64)


def check_run_args(args):
    """
    Run-level validation of a resolved configuration namespace, beyond the per-key type checks of get_cfg().

    Args:
        args (IterableSimpleNamespace): Resolved run arguments.
    """
    check_extents(args.window, args.dim)
    if args.windows:
        check_window_family(args.windows, args.dim, args.boundary_ratio)
    check_lags(args.lags, args.dim)
    if args.thresholds is not None and (not args.thresholds or
                                        any(isinstance(y, bool) or not isinstance(y, (int, float)) or y <= 0
                                            for y in args.thresholds)):
        raise ConfigError(f"Invalid 'thresholds={args.thresholds}'. Thresholds y must be positive.")
    unknown = [e for e in args.estimators if e not in ESTIMATORS]
    if unknown or not args.estimators:
        raise ConfigError(f"Invalid 'estimators={args.estimators}'. Valid estimators are {ESTIMATORS}.")
    lo, hi = args.variance_band
    if not 0 < lo < 1 < hi:
        raise ConfigError(f"Invalid 'variance_band={args.variance_band}'. Expected [low, high], 0 < low < 1 < high.")
    if any(not isinstance(k, int) or k <= 0 for k in args.count_levels):
        raise ConfigError(f"Invalid 'count_levels={args.count_levels}'. Levels must be positive ints.")
    if any(not isinstance(m, int) or m <= 0 for m in args.distances):
        raise ConfigError(f"Invalid 'distances={args.distances}'. Distances must be positive ints.")
    if args.exponent > 2 or (args.variogram == 'fractional' and args.exponent >= 2):
        raise ConfigError(f"Invalid 'exponent={args.exponent}' for '{args.variogram}' variograms, "
                          f"valid exponents are in (0, 2{')' if args.variogram == 'fractional' else ']'}.")
    LOGGER.debug(f"{colorstr('checks:')} run arguments valid")
