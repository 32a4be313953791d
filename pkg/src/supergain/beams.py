"""Maximum-gain beamforming through the DPSS eigenbasis.

Every application of the inverse lossy coupling matrix is expanded over
the DPSS modes, ``C_bar^{-1} a = sum_k v_k (v_k^T a) / (lambda_k + rho)``,
so ill-conditioning is isolated per mode and the floor policy can act on
individual modes.
"""
from dataclasses import dataclass

import mpmath
import numpy as np

from .array_model import ArrayConfig, positions, spatial_frequency, steering_vector
from .coupling import decompose
from .errors import DomainError, IllConditioned

# lossy eigenvalues below this are not trusted in double precision
LAMBDA_FLOOR = 1e-13


def precision_floor(dps=None):
    """Smallest lossy eigenvalue kept at the given working precision."""
    return LAMBDA_FLOOR if dps is None else 10.0 ** (8 - dps)


@dataclass(frozen=True)
class BeamSolution:
    """Optimal excitation for one steering frequency.

    ``gain`` is the array gain ``N * supergain``. ``coefficients`` are the
    DPSS expansion coefficients of ``current``. ``n_truncated`` modes fell
    below the precision floor and were dropped, in which case
    ``floor_limited`` is set.
    """

    f_prime: float
    current: np.ndarray
    supergain: float
    gain: float
    q_factor: float
    coefficients: np.ndarray
    floor_limited: bool = False
    n_truncated: int = 0


@dataclass(frozen=True)
class EllipsoidDiagnostics:
    """Extremes of the gain ellipsoid ``sum_k |c_k|^2 / lambda_bar_k``."""

    kappa: float
    g_max: float
    g_min: float
    sensitivity: float


def _check_steer(cfg, f_prime):
    f = np.asarray(f_prime, dtype=float)
    if np.any(np.isnan(f)) or np.any(np.abs(f) > cfg.d * (1 + 1e-12)):
        raise DomainError(f"steering frequency must lie in [-d, d] with d={cfg.d}")
    return np.clip(f, -cfg.d, cfg.d)


def _select_modes(cfg, lam_bar, strict, dps):
    floor = precision_floor(dps)
    bad = np.asarray([lb < floor for lb in lam_bar])
    if bad.any() and strict:
        smallest = float(min(lam_bar))
        raise IllConditioned(
            f"lambda_min + rho = {smallest:.3e} is below the floor {floor:.0e}; "
            "raise rho, use extended precision (dps) or pass strict=False",
            smallest=smallest, floor=floor)
    return ~bad


class _Modal:
    """Projections ``c_k = v_k^T a(f')`` and lossy eigenvalues, in double
    or in extended precision."""

    def __init__(self, cfg, f_prime, strict, dps):
        self.cfg = cfg
        self.dps = dps
        self.spec = decompose(cfg.N, cfg.d, dps)
        self.f = _check_steer(cfg, f_prime)
        if dps is None:
            self.lam_bar = self.spec.lam + cfg.rho
            self.c = steering_vector(cfg.N, self.f) @ self.spec.vectors
        else:
            with mpmath.workdps(dps):
                two_d = 2 * mpmath.mpf(cfg.d)
                self.lam_bar = [m / two_d + mpmath.mpf(cfg.rho) for m in self.spec.mp_mu]
                self.c = [self._mp_proj(fv) for fv in np.atleast_1d(self.f).ravel()]
        self.active = _select_modes(cfg, self.lam_bar, strict, dps)
        self.n_truncated = int((~self.active).sum())

    def _mp_proj(self, f):
        N = self.cfg.N
        pos = positions(N)
        phase = [mpmath.expj(2 * mpmath.pi * mpmath.mpf(f) * mpmath.mpf(p)) for p in pos]
        root = mpmath.sqrt(N)
        V = self.spec.mp_vectors
        return [mpmath.fsum(V[n, k] * phase[n] for n in range(N)) / root
                for k in range(N)]

    def _reshape(self, vals):
        out = np.asarray(vals, dtype=float).reshape(np.shape(self.f))
        return out if out.ndim else float(out)

    def moments(self):
        """``(sum |c|^2/lb, sum |c|^2/lb^2)`` over the kept modes."""
        if self.dps is None:
            w = np.abs(self.c[..., self.active]) ** 2
            lb = self.lam_bar[self.active]
            return w @ (1 / lb), w @ (1 / lb ** 2)
        keep = np.flatnonzero(self.active)
        m1, m2 = [], []
        with mpmath.workdps(self.dps):
            for c in self.c:
                w = [abs(c[k]) ** 2 for k in keep]
                m1.append(mpmath.fsum(wk / self.lam_bar[k] for wk, k in zip(w, keep)))
                m2.append(mpmath.fsum(wk / self.lam_bar[k] ** 2 for wk, k in zip(w, keep)))
        return (self._reshape([float(x) for x in m1]),
                self._reshape([float(x) for x in m2]))

    def weighted_current(self):
        """Unnormalised ``C_bar^{-1} a`` for a scalar steering frequency."""
        keep = self.active
        if self.dps is None:
            return self.spec.vectors[:, keep] @ (self.c[keep] / self.lam_bar[keep])
        with mpmath.workdps(self.dps):
            c = self.c[0]
            V = self.spec.mp_vectors
            idx = np.flatnonzero(keep)
            out = [mpmath.fsum(V[n, k] * c[k] / self.lam_bar[k] for k in idx)
                   for n in range(self.cfg.N)]
            return np.array([complex(x) for x in out])


def supergain(cfg, f_prime, strict=True, dps=None):
    """Supergain factor: maximum gain towards ``f_prime`` divided by ``N``.

    Evaluates ``sum_k |v_k^T a(f')|^2 / (lambda_k + rho)``, which equals
    ``(1/N) sum_k U_k(f')^2 / (lambda_k + rho)``.

    Parameters
    ----------
    cfg : ArrayConfig
    f_prime : float or array_like
        Steering frequency in ``[-d, d]``.
    strict : bool
        Raise :class:`IllConditioned` if any lossy eigenvalue is below the
        precision floor. Otherwise drop those modes.
    dps : int, optional
        Use mpmath with this many digits.
    """
    m1, _ = _Modal(cfg, f_prime, strict, dps).moments()
    return m1


def supergain_flagged(cfg, f_prime, dps=None):
    """Supergain with floor truncation and the number of dropped modes."""
    modal = _Modal(cfg, f_prime, False, dps)
    return modal.moments()[0], modal.n_truncated


def q_factor_opt(cfg, f_prime, strict=True, dps=None):
    """Q factor of the optimal current, ``||C_bar^{-1} a||^2 / (a^H C_bar^{-1} a)``."""
    m1, m2 = _Modal(cfg, f_prime, strict, dps).moments()
    return m2 / m1


def optimal_current(cfg, f_prime, strict=True, dps=None):
    """Unit-norm current maximising the gain towards ``f_prime``."""
    if np.ndim(f_prime):
        raise DomainError("optimal_current takes a scalar steering frequency")
    j = _Modal(cfg, f_prime, strict, dps).weighted_current()
    return j / np.linalg.norm(j)


def expansion_coefficients(cfg, j, dps=None):
    """DPSS expansion coefficients ``J_k`` with ``J(f) = sum_k J_k U_k(f)``.

    ``J_k = conj(eps_k) v_k^T j``. The result is real when the current
    has the symmetry of an optimal current and complex otherwise.
    """
    spec = decompose(cfg.N, cfg.d, dps)
    j = np.asarray(j, dtype=complex).ravel()
    if j.size != cfg.N:
        raise DomainError(f"current has {j.size} entries, expected {cfg.N}")
    coef = np.conj(spec.parity) * (spec.vectors.T @ j)
    if np.all(np.abs(coef.imag) <= 1e-12 * max(np.abs(coef).max(), 1e-300)):
        return coef.real
    return coef


def solve_beam(cfg, f_prime, strict=True, dps=None):
    """Optimal current, supergain, Q factor and coefficients for ``f_prime``."""
    modal = _Modal(cfg, float(f_prime), strict, dps)
    m1, m2 = modal.moments()
    j = modal.weighted_current()
    j = j / np.linalg.norm(j)
    return BeamSolution(
        f_prime=float(modal.f), current=j, supergain=float(m1),
        gain=float(cfg.N * m1), q_factor=float(m2 / m1),
        coefficients=expansion_coefficients(cfg, j, dps),
        floor_limited=modal.n_truncated > 0, n_truncated=modal.n_truncated)


def supergain_profile(cfg, thetas, strict=True, dps=None):
    """List of ``(theta, supergain)`` over angles from broadside (radians)."""
    thetas = np.asarray(thetas, dtype=float)
    g = np.atleast_1d(supergain(cfg, spatial_frequency(thetas, cfg.d), strict, dps))
    return list(zip(thetas.ravel().tolist(), g.ravel().tolist()))


def ellipsoid_diagnostics(cfg, f_prime, strict=True, dps=None):
    """Condition number and gain extremes of the lossy coupling matrix."""
    modal = _Modal(cfg, float(f_prime), strict, dps)
    lb = np.array([float(x) for x in modal.lam_bar])[modal.active]
    _, m2 = modal.moments()
    g_max = 1.0 / lb.min()
    g_min = 1.0 / lb.max()
    return EllipsoidDiagnostics(kappa=float(lb.max() / lb.min()), g_max=float(g_max),
                                g_min=float(g_min), sensitivity=float(m2))


__all__ = [
    "ArrayConfig", "BeamSolution", "EllipsoidDiagnostics", "LAMBDA_FLOOR",
    "precision_floor", "supergain", "supergain_flagged", "q_factor_opt",
    "optimal_current", "expansion_coefficients", "solve_beam",
    "supergain_profile", "ellipsoid_diagnostics",
]
