# maxmix 📈, AGPL-3.0 license

from dataclasses import dataclass

import numpy as np

from maxmix.utils import LOGGER


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    converged: bool
    points: int  # points per axis of the last rule


def midpoint_rule(func, lo, hi, m, chunk=1 << 18):
    """
    Tensor midpoint rule with `m` points per axis over the box [lo, hi].

    Args:
        func (callable): Vectorised integrand mapping an (n, d) array of points to n values.
        lo, hi (array-like): Box corners.
        m (int): Points per axis.
        chunk (int): Points evaluated per call of `func`.

    Returns:
        (float): Rule value.
    """
    lo, hi = np.asarray(lo, dtype=np.float64), np.asarray(hi, dtype=np.float64)
    d = lo.size
    step = (hi - lo) / m
    total, n = 0.0, m ** d
    for start in range(0, n, chunk):
        idx = np.stack(np.unravel_index(np.arange(start, min(start + chunk, n)), (m,) * d), axis=1)
        total += float(np.sum(func(lo + (idx + 0.5) * step)))
    return total * float(np.prod(step))


def nested_midpoint(func, lo, hi, rtol=1e-6, atol=1e-12, max_points=1 << 22, m0=16, chunk=1 << 18):
    """
    Midpoint quadrature refined by doubling the points per axis until the Richardson error estimate |Q_2m - Q_m| / 3
    falls below rtol * |Q_2m| + atol.

    The rule is robust for continuous integrands that are only piecewise smooth, such as pointwise maxima of kernels.
    When the grid would exceed `max_points` points the best value is returned with converged=False and the raw
    difference |Q_2m - Q_m| as its error.
    """
    lo, hi = np.atleast_1d(np.asarray(lo, dtype=np.float64)), np.atleast_1d(np.asarray(hi, dtype=np.float64))
    d = lo.size
    m = m0
    q, prev = midpoint_rule(func, lo, hi, m, chunk), None
    while (2 * m) ** d <= max_points:
        m *= 2
        q2 = midpoint_rule(func, lo, hi, m, chunk)
        err = abs(q2 - q) / 3
        if err <= rtol * abs(q2) + atol:
            return QuadratureResult(q2, err, True, m)
        q, prev = q2, q
    err = abs(q - prev) if prev is not None else abs(q)  # no refinement fits, error as large as the value
    LOGGER.warning(f'WARNING ⚠️ quadrature did not reach rtol={rtol} with {m}^{d} points, '
                   f'returning {q:.8g} with error estimate {err:.3g}')
    return QuadratureResult(q, max(err, atol), False, m)
