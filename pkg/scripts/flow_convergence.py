#!/usr/bin/env python3
"""Implicit Euler error against the closed-form two-point decay.

On the symmetric two-point instance the antisymmetric initial state decays
exactly like e^{-2t}, which makes it the one case with a pencil-and-paper
endpoint. Doubling the step count should halve the error (first order);
the table prints the observed ratios alongside the Richardson estimate
2*u(h/2) - u(h) of the limit.
"""

import argparse
import csv
import math
import sys

import numpy as np

from dirlab import evolve, load_bundled


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t", type=float, default=1.0, help="final time")
    ap.add_argument("--kmax", type=int, default=10,
                    help="finest run uses 2**kmax steps")
    ap.add_argument("--out", default=None, help="optional CSV path")
    args = ap.parse_args(argv)

    inst = load_bundled("two_point_p2")
    u0 = np.array([1.0, -1.0])
    exact = math.exp(-2.0 * args.t)

    rows = []
    prev_err = None
    prev_end = None
    print(f"{'steps':>6}  {'endpoint':>18}  {'abs error':>12}  "
          f"{'ratio':>6}  {'richardson err':>14}")
    for k in range(2, args.kmax + 1):
        steps = 2 ** k
        trace = evolve(inst.form, u0, args.t, steps)
        end = float(trace.states[-1][0])
        err = abs(end - exact)
        ratio = prev_err / err if prev_err else float("nan")
        rich = abs(2.0 * end - prev_end - exact) if prev_end else float("nan")
        print(f"{steps:>6}  {end:>18.12f}  {err:>12.3e}  "
              f"{ratio:>6.3f}  {rich:>14.3e}")
        rows.append((steps, end, err, ratio, rich))
        prev_err, prev_end = err, end

    print(f"exact endpoint e^(-2t) = {exact:.12f}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("steps", "endpoint", "abs_error", "ratio",
                        "richardson_error"))
            w.writerows(rows)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
