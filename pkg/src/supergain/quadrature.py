"""Gauss-Legendre quadrature with order doubling, and compensated sums."""
from functools import lru_cache

import numpy as np

from .errors import NumericalError

DEFAULT_RTOL = 1e-11
DEFAULT_START = 64
DEFAULT_CAP = 4096


@lru_cache(maxsize=32)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_nodes(a, b, n):
    """Nodes and weights of the ``n``-point Gauss-Legendre rule on ``[a, b]``."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def fixed_gauss(func, a, b, n):
    """Apply the ``n``-point rule to a vectorised ``func``.

    ``func`` may return an array with trailing axis over nodes; the result
    then has the leading shape of that array.
    """
    x, w = gauss_nodes(a, b, n)
    return np.asarray(func(x)) @ w


def adaptive_gauss(func, a, b, rtol=DEFAULT_RTOL, start=DEFAULT_START,
                   cap=DEFAULT_CAP, atol=0.0):
    """Integrate ``func`` over ``[a, b]`` by doubling the Gauss order.

    The order starts at ``start`` and doubles until two successive results
    agree to ``rtol`` (relative) or ``atol`` (absolute). ``func`` may be
    vector valued: nodes run along its last axis and every component must
    converge.

    Raises
    ------
    NumericalError
        If the cap is reached without agreement.
    """
    n = start
    prev = fixed_gauss(func, a, b, n)
    while True:
        n *= 2
        if n > cap:
            raise NumericalError(
                f"Gauss-Legendre failed to converge on [{a}, {b}] by order {cap}",
                order=n // 2, estimate=prev)
        cur = fixed_gauss(func, a, b, n)
        diff = np.abs(cur - prev)
        if np.all(diff <= np.maximum(rtol * np.abs(cur), atol)):
            return cur
        prev = cur


def neumaier_sum(terms, axis=-1):
    """Compensated (Kahan-Neumaier) sum of ``terms`` along ``axis``.

    Short axes (32 terms or fewer) fall back to plain summation. Complex
    input is summed component-wise.
    """
    terms = np.asarray(terms)
    if np.iscomplexobj(terms):
        return (neumaier_sum(terms.real, axis)
                + 1j * neumaier_sum(terms.imag, axis))
    terms = np.moveaxis(terms, axis, 0)
    if terms.shape[0] <= 32:
        return terms.sum(axis=0)
    total = np.zeros(terms.shape[1:], dtype=float)
    comp = np.zeros_like(total)
    for t in terms:
        s = total + t
        big = np.abs(total) >= np.abs(t)
        comp += np.where(big, (total - s) + t, (t - s) + total)
        total = s
    return total + comp
