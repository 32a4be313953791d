"""``supergain-lab`` command line front end.

Exit codes: 0 on success, 2 on a domain error, 3 when a numerical
procedure fails to converge or hits the precision floor.
"""
import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from . import datasets
from .array_model import ArrayConfig
from .beams import solve_beam
from .errors import DomainError, NumericalError

EXIT_DOMAIN = 2
EXIT_NUMERICAL = 3

DEFAULT_NAMES = {
    "profile": "supergain_theta_data",
    "eigs": "spectral_concentration_data",
    "bmap": "B_d_data",
    "bounds-n": "G_N_data",
    "bounds-loss": "G_N_loss_data",
    "tau-sweep": "tau_d_data",
}


def _common(p, wkb=False):
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    if wkb:
        p.add_argument("--prefactor", choices=("appendix", "main"), default="appendix")
        p.add_argument("--tol", type=float, default=None,
                       help="relative tolerance of the outer x3p integral")
        p.add_argument("--smooth-phase", action="store_true",
                       help="average the bound integrand over both phase parities")


def build_parser():
    ap = argparse.ArgumentParser(prog="supergain-lab",
                                 description="Maximum-gain ULA excitation and asymptotic bounds.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="optimal beam for one steering angle")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--theta", type=float, default=90.0, help="degrees from broadside")
    p.add_argument("--dps", type=int, default=None, help="extended precision digits")
    p.add_argument("--truncate", action="store_true",
                   help="drop modes below the precision floor instead of failing")
    _common(p)

    p = sub.add_parser("profile", help="supergain versus angle")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--d", type=float, nargs="+", default=[0.25, 1 / 3])
    p.add_argument("--rho", type=float, default=1e-16)
    p.add_argument("--theta-steps", type=int, default=181)
    p.add_argument("--exact-rho", action="store_true",
                   help="keep rho below the floor and flag dropped modes")
    _common(p)

    p = sub.add_parser("eigs", help="normalised coupling eigenvalues")
    p.add_argument("--n", type=int, nargs="+", default=[41, 81, 241])
    p.add_argument("--d", type=float, default=0.125)
    p.add_argument("--rho", type=float, default=1e-16)
    _common(p)

    p = sub.add_parser("bmap", help="B(d, x3p) map")
    p.add_argument("--d", type=float, nargs="+", default=None)
    p.add_argument("--x3p", type=float, nargs="+", default=[0.0, 0.25, 0.5, 0.75, 1.0])
    _common(p)

    p = sub.add_parser("bounds-n", help="lower bound against N")
    p.add_argument("--n", type=int, nargs="+", default=None)
    p.add_argument("--d", type=float, default=0.45)
    p.add_argument("--rho", type=float, nargs="+", default=[1e-8, 1e-12, 1e-16])
    _common(p, wkb=True)

    p = sub.add_parser("bounds-loss", help="upper bound and gap against N")
    p.add_argument("--n", type=int, nargs="+", default=None)
    p.add_argument("--d", type=float, default=0.45)
    p.add_argument("--rho", type=float, nargs="+", default=[1e-1, 1e-2, 1e-3])
    _common(p, wkb=True)

    p = sub.add_parser("tau-sweep", help="tau(d) and lossy slopes against d")
    p.add_argument("--n", type=int, default=41)
    p.add_argument("--d", type=float, nargs="+", default=None)
    p.add_argument("--rho", type=float, nargs="+", default=[1e-8, 1e-16, 1e-24])
    _common(p, wkb=True)
    return ap


def _solve(args):
    cfg = ArrayConfig(args.n, args.d, args.rho)
    if abs(args.theta) > 90:
        raise DomainError("theta must lie in [-90, 90] degrees")
    f = args.d * math.sin(math.radians(args.theta))
    sol = solve_beam(cfg, f, strict=not args.truncate, dps=args.dps)
    coef = np.asarray(sol.coefficients)
    doc = {
        "N": cfg.N, "d": cfg.d, "rho": cfg.rho, "theta_deg": args.theta,
        "f_prime": sol.f_prime, "supergain": sol.supergain, "gain": sol.gain,
        "q_factor": sol.q_factor, "floor_limited": sol.floor_limited,
        "n_truncated": sol.n_truncated,
        "current_re": sol.current.real.tolist(), "current_im": sol.current.imag.tolist(),
        "coefficients_re": coef.real.tolist(), "coefficients_im": np.imag(coef).tolist(),
    }
    if args.format == "json":
        return json.dumps(doc, indent=1) + "\n"
    rows = [f"# supergain-lab {__version__}", "# command: solve",
            f"# N: {cfg.N}", f"# d: {cfg.d!r}", f"# rho: {cfg.rho!r}",
            f"# theta_deg: {args.theta!r}", f"# dps: {args.dps}",
            f"# supergain: {sol.supergain:.12e}", f"# gain: {sol.gain:.12e}",
            f"# q_factor: {sol.q_factor:.12e}", f"# n_truncated: {sol.n_truncated}",
            "n,current_re,current_im,coef_re,coef_im"]
    for i in range(cfg.N):
        rows.append("%d,%.12e,%.12e,%.12e,%.12e" % (
            i, sol.current[i].real, sol.current[i].imag, coef[i].real, np.imag(coef[i])))
    return "\n".join(rows) + "\n"


def _dataset(args):
    c = args.command
    if c == "profile":
        return datasets.profile_dataset(args.n, args.d, args.rho, args.theta_steps,
                                        substitute=not args.exact_rho)
    if c == "eigs":
        return datasets.eigs_dataset(args.d, args.rho, args.n)
    if c == "bmap":
        return datasets.bmap_dataset(args.d, args.x3p)
    kw = {"prefactor": args.prefactor, "smooth_phase": args.smooth_phase, "tol": args.tol}
    if c == "bounds-n":
        return datasets.bounds_n_dataset(args.d, args.rho, args.n, **kw)
    if c == "bounds-loss":
        return datasets.bounds_loss_dataset(args.d, args.rho, args.n, **kw)
    if c == "tau-sweep":
        return datasets.tau_dataset(args.n, args.d, args.rho, **kw)
    raise DomainError(f"unknown command {c!r}")


def run(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "solve":
        text = _solve(args)
    else:
        ds = _dataset(args)
        text = ds.to_csv() if args.format == "csv" else ds.to_json()
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None):
    try:
        return run(argv)
    except DomainError as exc:
        print(f"supergain-lab: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericalError as exc:
        print(f"supergain-lab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
