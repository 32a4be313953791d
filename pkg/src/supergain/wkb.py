"""Wide-aperture (large ``N``, fixed ``d``) asymptotics of the endfire
supergain.

A WKB treatment of the DPSS eigenproblem gives four positive integrals
``L1' .. L4'`` over ``phi in (0, pi/2)`` that depend on ``d`` and on a
parameter ``B in (-A, 1)``, ``A = cos(2 pi d)``. ``B`` is tied to the
normalised mode index ``x3p`` through ``L1'(d, B) = pi (1 - 2d)(1 - x3p)``.
From these follow a lower bound on the endfire supergain, its lossless
slope ``tau(d)`` and an ``N``-independent gap to the upper bound.

Kernels are evaluated in forms where every factor is a sum of positive
terms, and the ``phi`` integrals use a quintic smoothstep substitution that
clusters Gauss nodes at both ends, where the kernels become nearly
singular as ``B`` approaches the ends of its bracket.
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .errors import DivergentGap, DomainError, NumericalError
from .quadrature import adaptive_gauss, gauss_nodes

L_RTOL = 1e-10
B_RESIDUAL_TOL = 1e-11
OUTER_RTOL = 1e-8
PREFACTORS = ("appendix", "main")
CHUNK = 2048
# |log-loss| beyond this saturates the logistic factor to below 1e-17 relative
SATURATION = 40.0


def _check_d(d):
    if not (0.0 < d < 0.5):
        raise DomainError(f"spacing d must lie in (0, 1/2), got {d!r}")


def _consts(d):
    # A, 1 + A and 1 - A without cancellation
    return (math.cos(2 * math.pi * d), 2 * math.cos(math.pi * d) ** 2,
            2 * math.sin(math.pi * d) ** 2)


def _smoothstep(u):
    return u ** 3 * (10 - 15 * u + 6 * u * u)


def _kernels(d, p, q, s, c):
    """Kernels from ``p = A + B``, ``q = 1 - B``, ``s = sin^2``, ``c = cos^2``."""
    _, one_pa, one_ma = _consts(d)
    r12 = np.sqrt((p * s + one_pa * c) * (2 * c + (2 - q) * s))
    r34 = np.sqrt(((2 - q) * c + one_ma * s) * (q + p * s))
    return 2 * q * c / r12, 2 / r12, 2 * p * s / r34, 2 / r34


def _check_B(d, B):
    A = math.cos(2 * math.pi * d)
    B = np.asarray(B, dtype=float)
    if np.any(B <= -A) or np.any(B >= 1) or np.any(np.isnan(B)):
        raise DomainError(f"B must lie in (-A, 1) = ({-A:.6g}, 1)")
    return A, B


def kernel_ell(i, d, B, phi):
    """Kernel ``l_i'(phi)`` for ``i`` in 1..4."""
    _check_d(d)
    A, B = _check_B(d, B)
    if i not in (1, 2, 3, 4):
        raise DomainError("kernel index must be 1, 2, 3 or 4")
    phi = np.asarray(phi, dtype=float)
    s = np.sin(phi) ** 2
    c = np.cos(phi) ** 2
    out = _kernels(d, A + B, 1 - B, s, c)[i - 1]
    return out if np.ndim(out) else float(out)


def _l_from_pq(d, p, q, rtol=L_RTOL, which=slice(None)):
    p = np.asarray(p, dtype=float)[..., None]
    q = np.asarray(q, dtype=float)[..., None]

    def integrand(u):
        s = np.sin(0.5 * np.pi * _smoothstep(u)) ** 2
        c = np.sin(0.5 * np.pi * _smoothstep(1 - u)) ** 2
        jac = 15 * np.pi * u ** 2 * (1 - u) ** 2
        return np.stack(_kernels(d, p, q, s, c)[which]) * jac

    return adaptive_gauss(integrand, 0.0, 1.0, rtol=rtol)


def l_integrals(d, B, rtol=L_RTOL):
    """The four integrals ``(L1', L2', L3', L4')`` for each ``B``.

    Raises
    ------
    NumericalError
        If the Gauss order cap is hit before ``rtol`` agreement.
    """
    _check_d(d)
    A, B = _check_B(d, B)
    out = _l_from_pq(d, A + B, 1 - B, rtol)
    return tuple(o if o.ndim else float(o) for o in out)


def _solve_p(d, x3p):
    """Solve the index constraint for ``p = A + B`` by Illinois false position."""
    A, one_pa, _ = _consts(d)
    eps = 1e-12 * (1 + abs(A))
    shape = np.shape(x3p)
    x3p = np.atleast_1d(np.asarray(x3p, dtype=float)).ravel()
    target = math.pi * (1 - 2 * d) * (1 - x3p)
    # near x3p = 0 only the small distance pi (1 - 2d) x3p to the end value
    # carries p, so the residual tolerance shrinks with it
    tol = np.minimum(B_RESIDUAL_TOL, 1e-9 * math.pi * (1 - 2 * d) * x3p)
    lo = np.full(x3p.shape, eps)
    hi = np.full(x3p.shape, one_pa - eps)
    # end values follow from L1'(-A) = pi (1 - 2d) and L1'(1) = 0
    flo = math.pi * (1 - 2 * d) - target
    fhi = -target
    p = 0.5 * (lo + hi)
    todo = np.ones(x3p.shape, dtype=bool)
    side = np.zeros(x3p.shape, dtype=int)
    for it in range(300):
        idx = np.flatnonzero(todo)
        if idx.size == 0:
            return p.reshape(shape)
        a, b, fa, fb = lo[idx], hi[idx], flo[idx], fhi[idx]
        cand = b - fb * (b - a) / (fb - fa)
        # fall back to bisection every fourth step or when out of range
        bad = ~((cand > a) & (cand < b)) | (it % 4 == 3)
        cand = np.where(bad, 0.5 * (a + b), cand)
        fc = _l_from_pq(d, cand, one_pa - cand, rtol=1e-13, which=slice(0, 1))[0] - target[idx]
        p[idx] = cand
        done = (np.abs(fc) <= tol[idx]) | (b - a <= 4 * np.spacing(b))
        pos = fc > 0
        # root lies above cand when the residual is still positive
        lo[idx] = np.where(pos, cand, a)
        flo[idx] = np.where(pos, fc, np.where(side[idx] == -1, 0.5 * fa, fa))
        hi[idx] = np.where(pos, b, cand)
        fhi[idx] = np.where(pos, np.where(side[idx] == 1, 0.5 * fb, fb), fc)
        side[idx] = np.where(pos, 1, -1)
        todo[idx] = ~done
    raise NumericalError("B constraint solve did not converge",
                         unresolved=int(todo.sum()))


def _check_x3p(x3p):
    x3p = np.asarray(x3p, dtype=float)
    if np.any(x3p <= 0) or np.any(x3p >= 1) or np.any(np.isnan(x3p)):
        raise DomainError("x3p must lie in the open interval (0, 1)")
    return x3p


def solve_B(d, x3p):
    """Solve ``L1'(d, B) = pi (1 - 2d)(1 - x3p)`` for ``B``.

    ``B`` increases with ``x3p`` from ``-A`` towards 1.
    """
    _check_d(d)
    x3p = _check_x3p(x3p)
    A = math.cos(2 * math.pi * d)
    B = _solve_p(d, x3p) - A
    return B if B.ndim else float(B)


@lru_cache(maxsize=512)
def _wkb_table(d, x3p_bytes):
    x3p = np.frombuffer(x3p_bytes, dtype=float)
    A, one_pa, _ = _consts(d)
    p = _solve_p(d, x3p)
    L = _l_from_pq(d, p, one_pa - p)
    for arr in (p, L):
        arr.flags.writeable = False
    return p - A, L


def _wkb_at(d, x3p):
    # chunked so the inner quadrature never holds more than CHUNK abscissae
    x3p = np.asarray(x3p, dtype=float)
    flat = np.ascontiguousarray(x3p.ravel())
    if flat.size == 0:
        return np.empty(x3p.shape), np.empty((4,) + x3p.shape)
    parts = [_wkb_table(float(d), flat[i:i + CHUNK].tobytes())
             for i in range(0, flat.size, CHUNK)]
    if len(parts) == 1:
        B, L = parts[0]
    else:
        B = np.concatenate([b for b, _ in parts])
        L = np.concatenate([l for _, l in parts], axis=1)
    return B.reshape(x3p.shape), L.reshape((4,) + x3p.shape)


def _parity(d, x3p, N):
    t = (1 - 2 * d) * N * (1 - np.asarray(x3p))
    return np.where(np.floor(t) % 2 == 0, 1.0, -1.0), t


def _bracket(d, x3p, N, parity=None):
    # the constraint fixes (N/2) L1' = pi t / 2 with t = (1 - 2d) N (1 - x3p)
    sign, t = _parity(d, x3p, N)
    if parity is not None:
        sign = np.full(np.shape(t), float(parity))
    return np.mod(0.5 * np.pi * t + (2 + sign) * np.pi / 4, 2 * np.pi)


def _phase_from(d, x3p, N, L2, parity=None):
    return 4.0 / L2 * _bracket(d, x3p, N, parity)


def phase_C(d, x3p, N, parity=None):
    """Phase term ``C = (4/L2') [(N/2) L1' + (2 + (-1)^floor(t)) pi/4 mod 2 pi]``.

    ``t = (1 - 2d) N (1 - x3p)``. Lies in ``[0, 8 pi / L2']``. ``parity``
    forces the sign of the ``(-1)^floor(t)`` term.
    """
    _check_d(d)
    x3p = _check_x3p(x3p)
    _, L = _wkb_at(d, np.atleast_1d(x3p))
    out = _phase_from(d, np.atleast_1d(x3p), N, L[1], parity).reshape(x3p.shape)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class WkbPoint:
    d: float
    x3p: float
    B: float
    L1p: float
    L2p: float
    L3p: float
    L4p: float
    N: int
    C_phase: float


def wkb_point(d, x3p, N):
    """Solved ``B``, the four integrals and the phase for one ``(d, x3p, N)``."""
    _check_d(d)
    x3p = float(_check_x3p(x3p))
    B, L = _wkb_at(d, np.array([x3p]))
    C = _phase_from(d, np.array([x3p]), N, L[1])
    return WkbPoint(d, x3p, float(B[0]), *(float(v[0]) for v in L), int(N), float(C[0]))


def prefactor(d, convention="appendix"):
    """Outer-integral prefactor.

    ``"appendix"`` gives ``pi (1 - 2d) / sinc(2d)``, ``"main"`` gives
    ``2 pi d / sinc(2d)``, with ``sinc(x) = sin(pi x)/(pi x)``.
    """
    if convention == "appendix":
        return math.pi * (1 - 2 * d) / np.sinc(2 * d)
    if convention == "main":
        return 2 * math.pi * d / np.sinc(2 * d)
    raise DomainError(f"unknown prefactor convention {convention!r}")


def _tau_integral(d, rtol):
    # the reciprocal of L2' vanishes like 1/log at x3p = 0; x3p = u^4 tames it
    def integrand(u):
        x = u ** 4
        _, L = _wkb_at(d, x)
        return 4 * u ** 3 / L[1]

    return float(adaptive_gauss(integrand, 0.0, 1.0, rtol=rtol))


def tau(d, convention="appendix", rtol=OUTER_RTOL):
    """Lossless slope ``prefactor(d) * int_0^1 dx3p / L2'(d, x3p)``."""
    _check_d(d)
    return prefactor(d, convention) * _tau_integral(float(d), rtol)


def _log_loss(d, rho, N, C, L3, L4):
    with np.errstate(divide="ignore"):
        return np.log(2 * d * rho) + C * L4 / 2 + L3 * N


def _panels(d, N, smooth, x_lo=0.0, x_hi=1.0):
    # jumps in t: parity flips at integers, wraps at 2.5 and 3.5 mod 4;
    # only those inside the unsaturated window (x_lo, x_hi) matter
    T = (1 - 2 * d) * N
    t_lo, t_hi = T * (1 - x_hi), T * (1 - x_lo)
    brk = set() if smooth else set(np.arange(max(1, math.ceil(t_lo)), math.ceil(t_hi)).tolist())
    for off in (2.5, 3.5):
        first = off + 4 * max(0, math.floor((t_lo - off) / 4))
        brk.update(np.arange(first, t_hi, 4.0).tolist())
    t = np.array(sorted(b for b in brk if t_lo < b < t_hi and 0 < b < T))
    x = np.concatenate(([0.0, x_lo], 1 - t / T, [x_hi]))
    x = np.unique(x)
    if x.size == 2:
        # an interior edge lets both end panels be graded
        x = np.array([0.0, 0.5 * x_hi, x_hi])
    return x


def _loss_window(d, N, rho):
    """``(x_lo, x_hi)`` outside which the logistic loss factor is saturated.

    Below ``x_lo`` the log-loss is under ``-SATURATION`` for either phase
    parity, so the factor is 1. Above ``x_hi`` it exceeds its value at
    ``x3p = 0`` (or 0) by ``SATURATION`` and the remaining tail is dropped. Both bounds on the log-loss are
    non-decreasing in ``x3p``.
    """
    lrho = math.log(2 * d * rho)

    def lossmin(x):
        _, L = _wkb_at(d, np.array([x]))
        return lrho + L[2, 0] * N

    def lossmax(x):
        _, L = _wkb_at(d, np.array([x]))
        return lrho + L[2, 0] * N + 4 * math.pi * L[3, 0] / L[1, 0]

    a, b = 1e-15, 1 - 1e-12
    # for 2 d rho > 1 the whole integrand is already damped by 1/(2 d rho),
    # so the cut is taken relative to that level
    cut = max(lrho, 0.0) + SATURATION
    x_hi = 1.0
    if lossmin(b) > cut:
        x_hi = brentq(lambda x: lossmin(x) - cut, a, b, xtol=1e-15, rtol=1e-13)
    x_lo = 0.0
    if lossmax(a) < -SATURATION:
        if lossmax(b) < -SATURATION:
            x_lo = 1.0
        else:
            x_lo = brentq(lambda x: lossmax(x) + SATURATION, a, b, xtol=1e-15, rtol=1e-13)
    return min(x_lo, x_hi), x_hi


def _panel_rule(edges, n):
    # the end panels are graded: 1/L2' has a 1/log end at x3p = 0 and
    # L4' grows like a log at x3p = 1
    xs, ws = [], []
    u, wu = gauss_nodes(0.0, 1.0, n)
    for a, b in zip(edges[:-1], edges[1:]):
        if a == 0.0:
            xs.append(a + (b - a) * u ** 4)
            ws.append((b - a) * 4 * u ** 3 * wu)
        elif b == 1.0:
            xs.append(b - (b - a) * u ** 4)
            ws.append((b - a) * 4 * u ** 3 * wu)
        else:
            x, w = gauss_nodes(a, b, n)
            xs.append(x)
            ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def lower_bound_supergain(N, d, rho, convention="appendix", smooth_phase=False,
                          rtol=OUTER_RTOL):
    """Asymptotic lower bound on the endfire supergain times ``N``.

    Integrates ``prefactor / L2' * 1 / (1 + 2 d rho exp(C L4'/2 + L3' N))``
    over ``x3p in (0, 1)``, with the loss term formed in log space. The
    integrand jumps where the phase term wraps or changes parity, so the
    range is split into panels at those points. For ``rho = 0`` the
    result is ``tau(d) * N``.

    Parameters
    ----------
    N : int
    d : float
        Spacing in ``(0, 1/2)``.
    rho : float
        Loss factor, ``>= 0``.
    convention : {"appendix", "main"}
        Prefactor choice, see :func:`prefactor`.
    smooth_phase : bool
        Average the integrand over both parities of the phase term.
    rtol : float
        Relative tolerance for the outer integral.
    """
    _check_d(d)
    if N < 1 or int(N) != N:
        raise DomainError("N must be a positive integer")
    if not rho >= 0:
        raise DomainError("rho must be non-negative")
    N = int(N)
    if rho == 0:
        return N * tau(d, convention, rtol)
    pref = prefactor(d, convention)
    x_lo, x_hi = _loss_window(d, N, rho)
    edges = _panels(d, N, smooth_phase, x_lo, x_hi)

    def total(n):
        x, w = _panel_rule(edges, n)
        _, L = _wkb_at(d, x)
        if smooth_phase:
            fac = 0.0
            for par in (1.0, -1.0):
                C = _phase_from(d, x, N, L[1], par)
                fac = fac + 0.5 * expit(-_log_loss(d, rho, N, C, L[2], L[3]))
        else:
            C = _phase_from(d, x, N, L[1])
            fac = expit(-_log_loss(d, rho, N, C, L[2], L[3]))
        return float(np.sum(w * fac / L[1]))

    n = 8
    prev = total(n)
    while True:
        n *= 2
        if n > 512:
            raise NumericalError("outer x3p integral did not converge",
                                 N=N, d=d, rho=rho, estimate=prev)
        cur = total(n)
        if abs(cur - prev) <= rtol * abs(cur) or cur == 0.0:
            return pref * N * cur
        prev = cur


def gap_delta(d, rho):
    """``N``-independent gap ``12 d ln(1 + 1/(2 d rho))`` between the bounds."""
    if not (0.0 < d <= 0.5):
        raise DomainError(f"spacing d must lie in (0, 1/2], got {d!r}")
    if rho == 0:
        raise DivergentGap("the bound gap diverges for lossless arrays (rho = 0)")
    if not rho > 0:
        raise DomainError("rho must be positive")
    return 12 * d * math.log1p(1 / (2 * d * rho))


def upper_bound_supergain(N, d, rho, convention="appendix", smooth_phase=False,
                          rtol=OUTER_RTOL):
    """Lower bound plus the gap."""
    return (lower_bound_supergain(N, d, rho, convention, smooth_phase, rtol)
            + gap_delta(d, rho))


@dataclass(frozen=True)
class RegimeMargin:
    """``margin < 0`` means the mode is in the supergain regime.

    ``threshold_exponent`` is the small-``d`` companion exponent
    ``N sqrt(2(1+B)) + (4/pi) Theta - 1`` with ``Theta`` the reduced
    phase bracket.
    """

    margin: float
    threshold_exponent: float


def regime_margin(N, d, rho, x3p):
    """Log-scale loss margin ``log(2 d rho) + C L4'/2 + L3' N`` at one mode."""
    _check_d(d)
    if not rho >= 0:
        raise DomainError("rho must be non-negative")
    pt = wkb_point(d, x3p, N)
    margin = float(_log_loss(d, rho, N, pt.C_phase, pt.L3p, pt.L4p))
    theta = float(_bracket(d, np.array([pt.x3p]), N)[0])
    thr = N * math.sqrt(2 * (1 + pt.B)) + 4 / math.pi * theta - 1
    return RegimeMargin(margin, thr)
