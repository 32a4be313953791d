"""Uniform linear array primitives: geometry, current spectra and the
gain, directivity and Q functionals of an arbitrary excitation.

Antenna ``n`` of an ``N`` element array sits at ``n - (N-1)/2`` spacings
from the array centre. Spatial frequencies are ``f = d sin(theta)`` with
``d`` the spacing in wavelengths.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .quadrature import neumaier_sum

NORM_TOL = 1e-9


@dataclass(frozen=True)
class ArrayConfig:
    """Array size ``N``, spacing ``d`` (wavelengths) and loss factor ``rho``.

    ``rho`` is the ratio of loss to radiation resistance of one element.
    """

    N: int
    d: float
    rho: float = 0.0

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N!r}")
        d = float(self.d)
        rho = float(self.rho)
        if not (0.0 < d <= 0.5):
            raise DomainError(f"spacing d must lie in (0, 1/2], got {d!r}")
        if not (rho >= 0.0) or not np.isfinite(rho):
            raise DomainError(f"loss factor rho must be finite and >= 0, got {rho!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "rho", rho)

    @property
    def L(self):
        """Aperture in wavelengths."""
        return (self.N - 1) * self.d

    @property
    def N0(self):
        """Number of spatial degrees of freedom, ``2 d N``."""
        return 2 * self.d * self.N

    @property
    def efficiency(self):
        return 1.0 / (1.0 + self.rho)

    def lossless(self):
        return ArrayConfig(self.N, self.d, 0.0)


def positions(N):
    """Element positions ``n - (N-1)/2`` in units of the spacing."""
    return np.arange(N) - 0.5 * (N - 1)


def spatial_frequency(theta, d):
    """Map the angle ``theta`` (radians from broadside) to ``d sin(theta)``."""
    theta = np.asarray(theta, dtype=float)
    if not (0.0 < d <= 0.5):
        raise DomainError(f"spacing d must lie in (0, 1/2], got {d!r}")
    if np.any(np.abs(theta) > np.pi / 2 + 1e-15) or np.any(np.isnan(theta)):
        raise DomainError("theta must lie in [-pi/2, pi/2]")
    out = d * np.sin(np.clip(theta, -np.pi / 2, np.pi / 2))
    return out if out.ndim else float(out)


def steering_vector(N, f):
    """Unit-norm steering vector ``exp(i 2 pi f n) / sqrt(N)``.

    For array ``f`` the result has shape ``f.shape + (N,)``.
    """
    f = np.asarray(f, dtype=float)
    return np.exp(2j * np.pi * f[..., None] * positions(N)) / np.sqrt(N)


def unit_current(j):
    """Return ``j`` as a complex vector scaled to unit 2-norm."""
    j = np.asarray(j, dtype=complex).ravel()
    nrm = np.linalg.norm(j)
    if j.size == 0 or nrm == 0 or not np.isfinite(nrm):
        raise DomainError("current vector must be nonzero and finite")
    return j / nrm


def _check_unit(j):
    j = np.asarray(j, dtype=complex).ravel()
    if abs(np.vdot(j, j).real - 1.0) > NORM_TOL:
        raise DomainError("current vector must have unit 2-norm")
    return j


def current_spectrum(j, f):
    """Current spectrum ``J(f) = sum_n j_n exp(-i 2 pi f n)``.

    ``f`` may be a scalar or an array. Arrays of more than 32 elements
    are summed with compensation.
    """
    j = np.asarray(j, dtype=complex).ravel()
    f = np.asarray(f, dtype=float)
    terms = j * np.exp(-2j * np.pi * f[..., None] * positions(j.size))
    out = neumaier_sum(terms, axis=-1)
    return out if np.ndim(out) else complex(out)


def dirichlet_kernel(N, f):
    """``sin(pi N f) / sin(pi f)``, equal to ``N`` (up to sign) at integer ``f``."""
    f = np.asarray(f, dtype=float)
    s = np.sin(np.pi * f)
    near = np.abs(s) < 1e-12
    safe = np.where(near, 1.0, s)
    out = np.sin(np.pi * N * f) / safe
    # removable point: limit is N cos(pi N m) / cos(pi m) at f = m
    m = np.round(f)
    lim = N * np.cos(np.pi * N * m) / np.cos(np.pi * m)
    out = np.where(near, lim, out)
    return out if out.ndim else float(out)


def coupling_matrix(cfg):
    """Lossy coupling matrix ``C + rho I`` with ``C[n, m] = sinc(2 d (n - m))``.

    Entries are the closed-form visible-region integrals
    ``(1/2d) int_{-d}^{d} exp(i 2 pi f (n - m)) df``.
    """
    k = np.arange(cfg.N)
    diff = k[:, None] - k[None, :]
    C = np.sinc(2 * cfg.d * diff)
    return C + cfg.rho * np.eye(cfg.N)


def radiated_power(cfg, j):
    """Quadratic form ``j^H C j`` (lossless part of the accepted power)."""
    j = np.asarray(j, dtype=complex).ravel()
    return float(np.vdot(j, coupling_matrix(cfg.lossless()) @ j).real)


def gain_for_current(cfg, j, f):
    """Array gain of the unit current ``j`` towards spatial frequency ``f``.

    Computes ``|J(f)|^2 / ((1/2d) int_{-d}^{d} |J|^2 + rho)`` with the band
    integral in closed form.
    """
    j = _check_unit(j)
    if j.size != cfg.N:
        raise DomainError(f"current has {j.size} entries, expected {cfg.N}")
    num = np.abs(current_spectrum(j, f)) ** 2
    den = radiated_power(cfg, j) + cfg.rho
    return num / den


def directivity_for_current(cfg, j, f):
    """Directivity, the gain with losses removed."""
    return gain_for_current(cfg.lossless(), j, f)


def q_factor_for_current(cfg, j):
    """Q factor ``1 / (j^H (C + rho I) j)`` of a unit current."""
    j = _check_unit(j)
    if j.size != cfg.N:
        raise DomainError(f"current has {j.size} entries, expected {cfg.N}")
    return 1.0 / (radiated_power(cfg, j) + cfg.rho)


class SpectrumGrid(NamedTuple):
    freqs: np.ndarray
    values: np.ndarray

    def energy(self):
        """Trapezoid integral of ``|J|^2`` over the sampled range."""
        return float(np.trapezoid(np.abs(self.values) ** 2, self.freqs))


def sample_spectrum(j, n_points=1025, lo=-0.5, hi=0.5):
    """Sample ``J(f)`` on an even grid of ``n_points`` over ``[lo, hi]``."""
    freqs = np.linspace(lo, hi, n_points)
    return SpectrumGrid(freqs, np.asarray(current_spectrum(j, freqs)))
