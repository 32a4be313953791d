"""Closed forms for vanishing spacing at fixed array size.

As ``d -> 0`` the DPSS spectra on ``[-d, d]`` approach Legendre
polynomials in ``y = f / d``, which yields finite sums for the supergain
and simple endfire expansions for small and large ``rho N``.
"""
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError

SMALL_RHO_N = 0.1
LARGE_RHO_N = 10.0


class Regime(str, Enum):
    SMALL_RHO_N = "small_rho_N"
    LARGE_RHO_N = "large_rho_N"
    EXACT_SUM = "exact_sum"


@dataclass(frozen=True)
class LegendreRegimeResult:
    """Asymptotic supergain with the regime it was derived for.

    ``in_window`` is False when ``rho N`` lies outside the validity window
    of the expansion; the value is still returned.
    """

    value: float
    regime: Regime
    error_order: str
    in_window: bool = True


def legendre_values(nmax, y):
    """``P_0(y) .. P_{nmax-1}(y)`` by the three-term recurrence.

    Returns an array of shape ``(nmax,) + y.shape``.
    """
    y = np.asarray(y, dtype=float)
    out = np.empty((nmax,) + y.shape)
    if nmax == 0:
        return out
    out[0] = 1.0
    if nmax > 1:
        out[1] = y
    for n in range(1, nmax - 1):
        out[n + 1] = ((2 * n + 1) * y * out[n] - n * out[n - 1]) / (n + 1)
    return out


def legendre_eigenvalue_limit(k, rho):
    """Limiting lossy coupling eigenvalue ``rho + 1/(2k+1)``."""
    if k < 0 or rho < 0:
        raise DomainError("k and rho must be non-negative")
    return rho + 1.0 / (2 * k + 1)


def _check_N(N):
    if isinstance(N, bool) or int(N) != N or N < 1:
        raise DomainError(f"N must be a positive integer, got {N!r}")


def supergain_smallspacing(N, rho, y):
    """Legendre-sum supergain ``(1/N) sum_k (2k+1)/(2 rho k+1) P_k(y)^2``.

    ``y = f'/d`` must lie in ``[-1, 1]``.
    """
    _check_N(N)
    if rho < 0:
        raise DomainError("rho must be non-negative")
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) > 1) or np.any(np.isnan(y)):
        raise DomainError("y must lie in [-1, 1]")
    k = np.arange(N)
    w = (2 * k + 1) / (2 * rho * k + 1)
    P = legendre_values(N, y)
    out = np.tensordot(w, P ** 2, axes=(0, 0)) / N
    return out if out.ndim else float(out)


def endfire_smallrho(N, rho):
    """Endfire supergain expansion ``N - (rho/3)(N-1)(4N+1)`` for small ``rho N``."""
    _check_N(N)
    value = N - rho / 3.0 * (N - 1) * (4 * N + 1)
    return LegendreRegimeResult(value, Regime.SMALL_RHO_N, "O((rho N)^2)",
                                rho * N < SMALL_RHO_N)


def endfire_largerho(N, rho):
    """Endfire saturation ``1/rho - ((1-rho)/(2 rho^2)) ln(N)/N`` for large ``rho N``."""
    _check_N(N)
    if rho <= 0:
        raise DomainError("rho must be positive for the saturated regime")
    value = 1.0 / rho - (1.0 - rho) / (2 * rho ** 2) * math.log(N) / N
    return LegendreRegimeResult(value, Regime.LARGE_RHO_N, "O(1/N)",
                                rho * N > LARGE_RHO_N)


def _p2n_at_zero_sq(nmax):
    # P_{2n}(0)^2 = ((2n)! / (4^n n!^2))^2 via the ratio (2n-1)/(2n)
    out = np.empty(nmax)
    val = 1.0
    for n in range(nmax):
        if n:
            val *= (2 * n - 1) / (2 * n)
        out[n] = val * val
    return out


def broadside_smallspacing(N, rho):
    """Broadside supergain ``(1/N) sum_n (4n+1)/(4 rho n+1) P_{2n}(0)^2``.

    Tends to ``2/pi`` for large lossless arrays.
    """
    _check_N(N)
    if rho < 0:
        raise DomainError("rho must be non-negative")
    n = np.arange((N - 1) // 2 + 1)
    terms = (4 * n + 1) / (4 * rho * n + 1) * _p2n_at_zero_sq(n.size)
    value = math.fsum(terms) / N
    return LegendreRegimeResult(value, Regime.EXACT_SUM, "O(d)")
