#!/usr/bin/env python3
"""Pseudospectrum field of the rotated oscillator plus the isolating-c scan.

Writes the sigma_min grid as CSV (plot-ready: re, im, sigma, mask) and prints
the range of c for which the c-analytic pseudospectrum splits into one
component per eigenvalue.
"""

import argparse
import time
from pathlib import Path

import numpy as np

from bargspec.bargmann import assemble_toeplitz
from bargspec.quadratic import ComplexQuadraticForm, exact_quadratic_spectrum
from bargspec.spectral import resolvent_grid, scan_isolating_c


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--hbar", type=float, default=0.05)
    ap.add_argument("--theta", type=float, default=0.45, help="in units of pi")
    ap.add_argument("--n-max", type=int, default=256)
    ap.add_argument("--res", type=int, default=200)
    ap.add_argument("--rect", default="0.02,0.34,0.01,0.30")
    ap.add_argument("--out", default="out/pseudospectrum/field.csv")
    args = ap.parse_args()

    theta = args.theta * np.pi
    form = ComplexQuadraticForm(1.0, np.exp(1j * theta), 0.0)
    m = assemble_toeplitz(form.to_symbol(), args.hbar, args.n_max)
    rect = tuple(float(s) for s in args.rect.split(","))
    t0 = time.perf_counter()
    field = resolvent_grid(m, rect, (args.res, args.res))
    print(f"grid {args.res}x{args.res} at n_max={args.n_max}: {time.perf_counter() - t0:.1f}s")

    lam = exact_quadratic_spectrum(form, args.hbar, 8)
    scan = scan_isolating_c(field, lam, np.linspace(0.05, 0.9, 35), args.hbar)
    print(
        f"isolating c range: [{scan['c_min']}, {scan['c_max']}] "
        f"({scan['n_eigenvalues']} eigenvalues in window)"
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    c_mid = scan["c_min"] if scan["c_min"] is not None else 0.3
    out.write_text(field.to_csv(c=c_mid))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
