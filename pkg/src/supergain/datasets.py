"""Builders for the plot-ready tables and their CSV/JSON serialisation.

Each builder returns a :class:`FigureDataset` whose provenance block
echoes every parameter, so a file can be regenerated from its header.
Sweep points run in a thread pool; results are merged in grid order, so
output never depends on scheduling.
"""
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .array_model import ArrayConfig
from .beams import LAMBDA_FLOOR, supergain_flagged
from .coupling import MU_FLOOR, decompose
from .wkb import gap_delta, lower_bound_supergain, solve_B, tau

FLOAT_FMT = "%.12e"
# floor-limited profile runs are moved up to this loss factor
PROFILE_RHO_FLOOR = 1e-12


def thread_count():
    """Worker count, capped by ``SUPERGAIN_THREADS`` when set."""
    default = min(8, os.cpu_count() or 1)
    raw = os.environ.get("SUPERGAIN_THREADS")
    if raw is None or raw.strip() == "":
        return default
    try:
        n = int(raw)
    except ValueError:
        return default
    return max(1, n)


def ordered_map(func, items):
    """``map`` over a thread pool, returning results in input order."""
    items = list(items)
    workers = min(thread_count(), max(1, len(items)))
    if workers == 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(func, items))


@dataclass
class FigureDataset:
    name: str
    columns: list
    rows: list
    provenance: dict = field(default_factory=dict)
    int_columns: tuple = ()

    def __post_init__(self):
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError(f"row width {len(r)} != {len(self.columns)} columns")

    def _cell(self, col, v):
        if v is None or (isinstance(v, float) and math.isnan(v)):
            return ""
        if col in self.int_columns or col.endswith("_flag"):
            return "%d" % int(v)
        return FLOAT_FMT % float(v)

    def to_csv(self):
        lines = [f"# {self.name}", f"# supergain-lab {__version__}"]
        lines += [f"# {k}: {v}" for k, v in self.provenance.items()]
        lines.append(",".join(self.columns))
        for r in self.rows:
            lines.append(",".join(self._cell(c, v) for c, v in zip(self.columns, r)))
        return "\n".join(lines) + "\n"

    def to_json(self):
        def val(c, v):
            if v is None or (isinstance(v, float) and math.isnan(v)):
                return None
            return int(v) if (c in self.int_columns or c.endswith("_flag")) else float(v)

        doc = {
            "name": self.name,
            "version": __version__,
            "provenance": {k: str(v) for k, v in self.provenance.items()},
            "columns": list(self.columns),
            "rows": [[val(c, v) for c, v in zip(self.columns, r)] for r in self.rows],
        }
        return json.dumps(doc, indent=1) + "\n"

    def write(self, path, fmt="csv"):
        text = self.to_csv() if fmt == "csv" else self.to_json()
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def _fmt_list(xs):
    return " ".join(repr(float(x)) if not isinstance(x, int) else str(x) for x in xs)


def _d_label(d):
    return "%03d" % round(100 * d)


def profile_dataset(N=6, ds=(0.25, 1 / 3), rho=1e-16, theta_steps=181,
                    substitute=True):
    """Supergain versus angle, one ``dir_*`` column per spacing.

    With ``substitute`` set, a ``rho`` that would push some lossy
    eigenvalue below the precision floor is raised to
    ``PROFILE_RHO_FLOOR``; otherwise such modes are dropped and counted in
    the flag columns.
    """
    below = any(decompose(N, d).lam.min() + rho < LAMBDA_FLOOR for d in ds if d < 0.5)
    rho_used = max(rho, PROFILE_RHO_FLOOR) if (substitute and below) else rho
    thetas = np.linspace(-90.0, 90.0, theta_steps)
    f_rad = np.deg2rad(thetas)
    cols = ["theta"] + [f"dir_{_d_label(d)}" for d in ds] + [f"dir_{_d_label(d)}_flag" for d in ds]

    def column(d):
        cfg = ArrayConfig(N, d, rho_used)
        g, ntrunc = supergain_flagged(cfg, d * np.sin(f_rad))
        return np.atleast_1d(g), ntrunc

    res = ordered_map(column, ds)
    rows = []
    for i, th in enumerate(thetas):
        rows.append([th] + [r[0][i] for r in res] + [r[1] for r in res])
    prov = {"command": "profile", "N": N, "d": _fmt_list(ds), "rho_requested": repr(rho),
            "rho_used": repr(rho_used), "theta_steps": theta_steps,
            "floor": f"modes with lambda+rho < {LAMBDA_FLOOR:.0e} are dropped; flag = dropped count"}
    if rho_used != rho:
        prov["substitution"] = (f"rho={rho!r} is below the double-precision floor; "
                                f"evaluated at rho={rho_used!r}")
    return FigureDataset("supergain_theta_data", cols, rows, prov)


def _l_label(N, d):
    L = (N - 1) * d
    return str(int(round(L))) if abs(L - round(L)) < 1e-9 else ("%g" % L).replace(".", "p")


def eigs_dataset(d=0.125, rho=1e-16, Ns=(41, 81, 241)):
    """Normalised lossy eigenvalues ``2 d (lambda_k + rho)`` against ``k / N0``."""
    labels = [_l_label(N, d) for N in Ns]
    cols = []
    for lab in labels:
        cols += [f"k_{lab}", f"eig_{lab}"]
    cols += [f"eig_{lab}_flag" for lab in labels]

    def series(N):
        spec = decompose(N, d)
        k = np.arange(N)
        return k / (2 * d * N), spec.mu + 2 * d * rho, spec.floor_limited.astype(int)

    res = ordered_map(series, Ns)
    nrows = max(Ns)
    rows = []
    for i in range(nrows):
        row = []
        for kk, ee, _ in res:
            row += [kk[i], ee[i]] if i < len(kk) else [None, None]
        row += [ff[i] if i < len(ff) else None for _, _, ff in res]
        rows.append(row)
    prov = {"command": "eigs", "d": repr(d), "rho": repr(rho), "N": _fmt_list(Ns),
            "floor": f"concentrations below {MU_FLOOR:.0e} are not resolved; flag = 1"}
    return FigureDataset("spectral_concentration_data", cols, rows, prov)


def default_d_grid(lo=0.01, hi=0.49, step=0.01):
    n = int(round((hi - lo) / step)) + 1
    return [round(lo + i * step, 10) for i in range(n)]


def bmap_dataset(ds=None, x3ps=(0.0, 0.25, 0.5, 0.75, 1.0)):
    """Solved ``B(d, x3p)``; end points ``x3p = 0, 1`` give the limits ``-A`` and 1."""
    ds = default_d_grid() if ds is None else list(ds)
    cols = ["d", "limit_B"] + [f"B_x_{i + 1}" for i in range(len(x3ps))]
    inner = [x for x in x3ps if 0 < x < 1]

    def row(d):
        A = math.cos(2 * math.pi * d)
        solved = iter(np.atleast_1d(solve_B(d, inner)).tolist() if inner else [])
        vals = [-A if x <= 0 else 1.0 if x >= 1 else next(solved) for x in x3ps]
        return [d, -A] + vals

    rows = ordered_map(row, ds)
    prov = {"command": "bmap", "d": _fmt_list(ds), "x3p": _fmt_list(x3ps),
            "endpoints": "x3p=0 -> -A, x3p=1 -> 1 (limits)"}
    return FigureDataset("B_d_data", cols, rows, prov)


def default_n_grid(lo=20, hi=200, step=10):
    return list(range(lo, hi + 1, step))


def _bound_kwargs(prefactor, smooth_phase, tol):
    kw = {"convention": prefactor, "smooth_phase": smooth_phase}
    if tol is not None:
        kw["rtol"] = tol
    return kw


def bounds_n_dataset(d=0.45, rhos=(1e-8, 1e-12, 1e-16), Ns=None, prefactor="appendix",
                     smooth_phase=False, tol=None):
    """Lower bound against ``N`` with the lossless line ``D = tau(d) N``."""
    Ns = default_n_grid() if Ns is None else list(Ns)
    kw = _bound_kwargs(prefactor, smooth_phase, tol)
    t = tau(d, prefactor, **({"rtol": tol} if tol else {}))
    cols = ["N", "D"] + [f"G_rho{i + 1}" for i in range(len(rhos))]
    jobs = [(N, r) for N in Ns for r in rhos]
    vals = ordered_map(lambda job: lower_bound_supergain(job[0], d, job[1], **kw), jobs)
    rows = []
    for i, N in enumerate(Ns):
        rows.append([N, t * N] + vals[i * len(rhos):(i + 1) * len(rhos)])
    prov = {"command": "bounds-n", "d": repr(d), "rho": _fmt_list(rhos), "N": _fmt_list(Ns),
            "prefactor": prefactor, "smooth_phase": smooth_phase, "tol": tol}
    return FigureDataset("G_N_data", cols, rows, prov, int_columns=("N",))


def bounds_loss_dataset(d=0.45, rhos=(1e-1, 1e-2, 1e-3), Ns=None, prefactor="appendix",
                        smooth_phase=False, tol=None):
    """Upper bound (lower bound plus gap) against ``N``, and the gap itself."""
    Ns = default_n_grid() if Ns is None else list(Ns)
    kw = _bound_kwargs(prefactor, smooth_phase, tol)
    gaps = [gap_delta(d, r) for r in rhos]
    cols = (["N"] + [f"Delta_rho{i + 1}" for i in range(len(rhos))]
            + [f"G_rho{i + 1}" for i in range(len(rhos))])
    jobs = [(N, r) for N in Ns for r in rhos]
    vals = ordered_map(lambda job: lower_bound_supergain(job[0], d, job[1], **kw), jobs)
    rows = []
    for i, N in enumerate(Ns):
        lows = vals[i * len(rhos):(i + 1) * len(rhos)]
        rows.append([N] + gaps + [lo + g for lo, g in zip(lows, gaps)])
    prov = {"command": "bounds-loss", "d": repr(d), "rho": _fmt_list(rhos), "N": _fmt_list(Ns),
            "prefactor": prefactor, "smooth_phase": smooth_phase, "tol": tol}
    return FigureDataset("G_N_loss_data", cols, rows, prov, int_columns=("N",))


def tau_dataset(N=41, ds=None, rhos=(1e-8, 1e-16, 1e-24), prefactor="appendix",
                smooth_phase=False, tol=None):
    """Lossless slope ``tau(d)`` and lossy lower bounds divided by ``N``."""
    ds = default_d_grid() if ds is None else list(ds)
    kw = _bound_kwargs(prefactor, smooth_phase, tol)
    cols = ["d", "tau"] + [f"tau_rho{i + 1}" for i in range(len(rhos))]

    def row(d):
        t = tau(d, prefactor, **({"rtol": tol} if tol else {}))
        return [d, t] + [lower_bound_supergain(N, d, r, **kw) / N for r in rhos]

    rows = ordered_map(row, ds)
    prov = {"command": "tau-sweep", "N": N, "d": _fmt_list(ds), "rho": _fmt_list(rhos),
            "prefactor": prefactor, "smooth_phase": smooth_phase, "tol": tol}
    return FigureDataset("tau_d_data", cols, rows, prov)
