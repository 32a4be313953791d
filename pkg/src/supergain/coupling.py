"""Prolate and coupling matrices and their discrete prolate spheroidal
sequence (DPSS) eigenstructure.

The prolate matrix has entries ``sin(2 pi d (n-m)) / (pi (n-m))`` and equals
``2 d`` times the lossless coupling matrix, so its eigenvalues ``mu_k`` are
the visible-region concentrations and ``lambda_k = mu_k / (2 d)``.
Eigenvectors come from the tridiagonal matrix that commutes with it,
whose spectrum stays well separated when ``mu_k`` clusters near 0 or 1.
"""
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np
from scipy.linalg import eigh_tridiagonal

from .array_model import ArrayConfig, positions
from .errors import DomainError

# concentrations below this are not resolved by v^T Omega v in doubles
MU_FLOOR = 1e-15


def _check_nd(N, d, allow_half=True):
    if isinstance(N, bool) or int(N) != N or N < 1:
        raise DomainError(f"N must be a positive integer, got {N!r}")
    hi_ok = d <= 0.5 if allow_half else d < 0.5
    if not (0.0 < d and hi_ok):
        raise DomainError(f"spacing d out of range: {d!r}")


def build_prolate(N, d):
    """Prolate matrix ``Omega`` with diagonal ``2 d``."""
    _check_nd(N, d)
    k = np.arange(N)
    diff = k[:, None] - k[None, :]
    return 2 * d * np.sinc(2 * d * diff)


def _tridiagonal(N, d):
    n = np.arange(N)
    diag = ((N - 1 - 2 * n) / 2.0) ** 2 * np.cos(2 * np.pi * d)
    off = (n[:-1] + 1) * (N - 1 - n[:-1]) / 2.0
    return diag, off


def _normalize_signs(V):
    # first entry clearly away from zero is made positive
    for k in range(V.shape[1]):
        col = V[:, k]
        big = np.abs(col) > 1e-10 * np.abs(col).max()
        if col[np.argmax(big)] < 0:
            V[:, k] = -col
    return V


@dataclass(frozen=True)
class CouplingSpectrum:
    """DPSS decomposition for one ``(N, d)``.

    Attributes
    ----------
    mu : ndarray
        Concentrations, decreasing, clamped to the open unit interval.
    lam : ndarray
        Lossless coupling eigenvalues ``mu / (2 d)``.
    vectors : ndarray
        Orthonormal DPSS as columns, ``vectors[:, k]``.
    theta_order : ndarray
        Tridiagonal eigenvalues used for the ordering.
    floor_limited : ndarray of bool
        Modes whose concentration is below the resolvable floor.
    degenerate : bool
        True at ``d = 1/2``, where any orthonormal basis diagonalises the
        identity; the canonical basis is returned and spectra are complex.
    dps : int or None
        Working precision of the extended-precision path, if used.
    """

    N: int
    d: float
    mu: np.ndarray
    lam: np.ndarray
    vectors: np.ndarray
    theta_order: np.ndarray
    floor_limited: np.ndarray
    degenerate: bool = False
    dps: int = None
    mp_mu: tuple = field(default=None, repr=False)
    mp_vectors: object = field(default=None, repr=False)

    def lossy(self, rho):
        """Lossy coupling eigenvalues ``lambda_k + rho``."""
        return self.lam + rho

    @property
    def parity(self):
        """``epsilon_k``: 1 for even ``k`` and ``1j`` for odd ``k``."""
        if self.degenerate:
            return np.ones(self.N, dtype=complex)
        return np.where(np.arange(self.N) % 2 == 0, 1.0 + 0j, 1j)


def _freeze(*arrays):
    for a in arrays:
        a.flags.writeable = False


def _decompose_double(N, d):
    if d == 0.5:
        V = np.eye(N)
        mu = np.ones(N)
        theta = np.zeros(N)
        flags = np.zeros(N, dtype=bool)
        _freeze(V, mu, theta, flags)
        return CouplingSpectrum(N, d, mu, mu / (2 * d), V, theta, flags,
                                degenerate=True)
    if N == 1:
        V = np.ones((1, 1))
        mu = np.array([2 * d])
        theta = np.zeros(1)
        flags = np.zeros(1, dtype=bool)
        _freeze(V, mu, theta, flags)
        return CouplingSpectrum(N, d, mu, mu / (2 * d), V, theta, flags)
    diag, off = _tridiagonal(N, d)
    w, V = eigh_tridiagonal(diag, off, lapack_driver="stebz")
    order = np.argsort(w)[::-1]
    w = w[order]
    V = _normalize_signs(np.ascontiguousarray(V[:, order]))
    omega = build_prolate(N, d)
    mu_raw = np.einsum("nk,nm,mk->k", V, omega, V)
    flags = mu_raw < MU_FLOOR
    mu = np.clip(mu_raw, np.finfo(float).tiny, np.nextafter(1.0, 0.0))
    lam = mu / (2 * d)
    _freeze(V, mu, lam, w, flags)
    return CouplingSpectrum(N, d, mu, lam, V, w, flags)


def _decompose_mp(N, d, dps):
    with mpmath.workdps(dps):
        dm = mpmath.mpf(d)
        if d == 0.5 or N == 1:
            base = _decompose_double(N, d)
            vecs = mpmath.matrix(base.vectors.tolist())
            mus = tuple(mpmath.mpf(m) for m in base.mu)
            return CouplingSpectrum(N, d, base.mu, base.lam, base.vectors,
                                    base.theta_order, base.floor_limited,
                                    base.degenerate, dps, mus, vecs)
        c = mpmath.cos(2 * mpmath.pi * dm)
        T = mpmath.zeros(N, N)
        for n in range(N):
            T[n, n] = (mpmath.mpf(N - 1 - 2 * n) / 2) ** 2 * c
            if n < N - 1:
                T[n, n + 1] = T[n + 1, n] = mpmath.mpf((n + 1) * (N - 1 - n)) / 2
        w, Q = mpmath.eigsy(T)
        order = sorted(range(N), key=lambda i: w[i], reverse=True)
        omega = mpmath.zeros(N, N)
        for n in range(N):
            for m in range(N):
                k = n - m
                omega[n, m] = (2 * dm if k == 0
                               else mpmath.sin(2 * mpmath.pi * dm * k) / (mpmath.pi * k))
        vecs = mpmath.zeros(N, N)
        mus = []
        for col, i in enumerate(order):
            v = Q[:, i]
            scale = max(abs(x) for x in v)
            first = next(x for x in v if abs(x) > scale * mpmath.mpf(10) ** (-10))
            if first < 0:
                v = -v
            for n in range(N):
                vecs[n, col] = v[n]
            mus.append((v.T * omega * v)[0, 0])
        floor = mpmath.mpf(10) ** (8 - dps)
        mu = np.array([float(m) for m in mus])
        V = np.array([[float(vecs[n, k]) for k in range(N)] for n in range(N)])
        theta = np.array([float(w[i]) for i in order])
        flags = np.array([m < floor for m in mus])
        mu = np.clip(mu, np.finfo(float).tiny, np.nextafter(1.0, 0.0))
        lam = mu / (2 * d)
        _freeze(V, mu, lam, theta, flags)
        return CouplingSpectrum(N, d, mu, lam, V, theta, flags, False, dps,
                                tuple(mus), vecs)


@lru_cache(maxsize=256)
def _decompose_cached(N, d, dps):
    if dps is None:
        return _decompose_double(N, d)
    return _decompose_mp(N, d, dps)


def decompose(N, d, dps=None):
    """Compute the DPSS eigenstructure of the prolate matrix.

    Parameters
    ----------
    N : int
        Number of elements.
    d : float
        Spacing in ``(0, 1/2]``.
    dps : int, optional
        Decimal digits for an extended-precision solve with mpmath. Needed
        when concentrations fall far below double precision, as happens
        for small ``d``.

    Returns
    -------
    CouplingSpectrum
    """
    _check_nd(N, d)
    if dps is not None and int(dps) < 16:
        raise DomainError("dps must be at least 16")
    return _decompose_cached(int(N), float(d), None if dps is None else int(dps))


def _spectrum_terms(spec, f):
    f = np.asarray(f, dtype=float)
    return f, positions(spec.N)


def dpswf_value(spec, k, f):
    """Band-concentrated spectrum ``U_k(f)`` of the ``k``-th DPSS.

    Real valued: a cosine sum for even ``k`` and a sine sum for odd ``k``.
    In the degenerate ``d = 1/2`` case the complex exponential spectrum of
    the ``k``-th canonical vector is returned.
    """
    if not (0 <= k < spec.N):
        raise DomainError(f"mode index {k} out of range for N={spec.N}")
    f, n = _spectrum_terms(spec, f)
    v = spec.vectors[:, k]
    arg = 2 * np.pi * f[..., None] * n
    if spec.degenerate:
        out = np.exp(-1j * arg) @ v
    elif k % 2 == 0:
        out = np.cos(arg) @ v
    else:
        out = np.sin(arg) @ v
    return out if np.ndim(out) else out.item()


def dpswf_matrix(spec, f):
    """All spectra at once, shape ``f.shape + (N,)``."""
    f, n = _spectrum_terms(spec, f)
    arg = 2 * np.pi * f[..., None] * n
    if spec.degenerate:
        return np.exp(-1j * arg) @ spec.vectors
    even = np.cos(arg) @ spec.vectors
    odd = np.sin(arg) @ spec.vectors
    return np.where(np.arange(spec.N) % 2 == 0, even, odd)


def concentration(spec, k):
    """Visible-region concentration ``mu_k``."""
    if not (0 <= k < spec.N):
        raise DomainError(f"mode index {k} out of range for N={spec.N}")
    return float(spec.mu[k])


def dof(cfg):
    """Spatial degrees of freedom ``2 d N``."""
    return cfg.N0


def lossy_eigenvalues(cfg, dps=None):
    """``lambda_k + rho`` for the configuration, in decreasing order."""
    return decompose(cfg.N, cfg.d, dps).lossy(cfg.rho)


__all__ = [
    "ArrayConfig", "CouplingSpectrum", "build_prolate", "decompose",
    "dpswf_value", "dpswf_matrix", "concentration", "dof",
    "lossy_eigenvalues", "MU_FLOOR",
]
