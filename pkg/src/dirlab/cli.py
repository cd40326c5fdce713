"""Batch front door.

Every command loads an instance (bundled name or path to a TOML file), runs
one family of checks or experiments, prints a human summary, and optionally
writes a CSV report. Exit codes: 0 all checks passed, 1 a check failed or a
solver gave up, 2 usage or parse errors. Output is deterministic for fixed
instance, flags, and seed; floats are written with repr so reruns are
byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .capacity import capacity, chebyshev_check, capacity_monotonicity_check
from .elliptic import resolve, resolvent_identity_check
from .embed import isocap_scan, linfty_embedding_check, lq_embedding_check, \
    weak_lp_embedding_check
from .flow import dissipation_report, evolve, smoothing_experiment
from .forms import SolverError, check_convexity, check_evenness, \
    submodularity_suite, truncation_suite
from .instances import Instance, InstanceError, bundled_names, load_bundled, \
    load_instance, mask_from_ids, read_fn_file
from .reports import InequalityReport

REPORT_HEADER = ("check_name", "instance", "parameters", "lhs", "rhs",
                 "constant", "margin", "pass")


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _report_row(rep: InequalityReport, instance: str, params: str):
    merged = params if not rep.detail else (f"{params};{rep.detail}" if params else rep.detail)
    return (rep.name, instance, merged, rep.lhs, rep.rhs, rep.constant_used,
            rep.margin, rep.passed)


def _print_report(rep: InequalityReport):
    status = "pass" if rep.passed else "FAIL"
    print(f"[{status}] {rep.name}: lhs={rep.lhs:.12g} rhs={rep.rhs:.12g} "
          f"margin={rep.margin:.3e} samples={rep.samples}")
    if rep.detail:
        print(f"       {rep.detail}")


def _load(ref: str) -> Instance:
    if Path(ref).exists():
        return load_instance(ref)
    if ref in bundled_names():
        return load_bundled(ref)
    raise InstanceError(f"{ref!r} is neither a file nor a bundled instance; "
                        f"bundled: {', '.join(bundled_names())}")


def cmd_check_form(args) -> int:
    inst = _load(args.instance)
    samples = args.samples or inst.samples
    seed = args.seed if args.seed is not None else inst.seed
    reports = [
        submodularity_suite(inst.form, samples=samples, seed=seed),
        truncation_suite(inst.form, samples=samples, seed=seed),
        check_evenness(inst.form, samples=samples, seed=seed),
        check_convexity(inst.form, samples=samples, seed=seed),
    ]
    for rep in reports:
        _print_report(rep)
    if args.out:
        _write_csv(args.out, REPORT_HEADER,
                   [_report_row(r, inst.name, f"samples={samples};seed={seed}")
                    for r in reports])
    return 0 if all(r.passed for r in reports) else 1


def cmd_capacity(args) -> int:
    inst = _load(args.instance)
    mask = mask_from_ids(inst, args.set)
    res = capacity(inst.form, mask, outer_tol=args.tol)
    label = "{" + ",".join(i for i, b in zip(inst.ids, mask) if b) + "}"
    print(f"cap({label}) = {res.value!r}")
    print(f"outer_iters={res.outer_iters} inner_iters={res.inner_iters}")
    if args.out:
        _write_csv(args.out, ("id", "witness"),
                   list(zip(inst.ids, res.witness)))
    return 0


def cmd_scan_isocap(args) -> int:
    inst = _load(args.instance)
    if inst.space.n > args.max_n and not args.approx:
        print(f"error: {inst.space.n} points means {2 ** inst.space.n - 1} subsets; "
              f"pass --approx for a sampled lower bound or raise --max-n",
              file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else inst.seed
    scan = isocap_scan(inst.form, args.q, max_n=args.max_n, seed=seed)
    kind = "approximate lower bound" if scan.approximate else "exact over subsets"
    arg_ids = ",".join(i for i, b in zip(inst.ids, scan.argmax_subset) if b)
    print(f"best_constant = {scan.best_constant!r} ({kind}, "
          f"{scan.subsets_scanned} subsets, q={args.q:g})")
    print(f"argmax subset = {{{arg_ids}}}")
    if args.out:
        rows = []
        for mask, cap_v, mass in zip(scan.masks, scan.capacities, scan.masses):
            ids = "|".join(i for i, b in zip(inst.ids, mask) if b)
            rows.append((ids, mass, cap_v, mass ** (1.0 / args.q) / cap_v))
        _write_csv(args.out, ("subset", "mass", "capacity", "ratio"), rows)
    return 0


def cmd_embed(args) -> int:
    inst = _load(args.instance)
    seed = args.seed if args.seed is not None else inst.seed
    samples = args.samples or inst.samples
    if args.mode == "linf":
        rep = linfty_embedding_check(inst.form, samples=samples, seed=seed)
    elif args.mode == "weak":
        scan = isocap_scan(inst.form, args.p, seed=seed)
        rep = weak_lp_embedding_check(inst.form, args.p, scan,
                                      samples=samples, seed=seed)
    else:
        scan = isocap_scan(inst.form, args.q + args.eps, seed=seed)
        rep = lq_embedding_check(inst.form, args.q, args.p, args.eps, scan,
                                 samples=samples, seed=seed)
    _print_report(rep)
    if args.out:
        params = f"mode={args.mode};samples={samples};seed={seed}"
        if args.mode != "linf":
            params += f";p={args.p!r}"
        if args.mode == "lq":
            params += f";q={args.q!r};eps={args.eps!r}"
        _write_csv(args.out, REPORT_HEADER, [_report_row(rep, inst.name, params)])
    return 0 if rep.passed else 1


def cmd_resolve(args) -> int:
    inst = _load(args.instance)
    f = read_fn_file(args.f, inst)
    sol = resolve(inst.form, args.lam, f)
    for pid, val in zip(inst.ids, sol.u):
        print(f"{pid} {float(val)!r}")
    print(f"residual = {sol.residual:.3e}")
    ident = resolvent_identity_check(inst.form, args.lam, f)
    _print_report(ident)
    if args.out:
        _write_csv(args.out, ("id", "u"), list(zip(inst.ids, sol.u)))
    return 0 if ident.passed else 1


def cmd_flow(args) -> int:
    inst = _load(args.instance)
    u0 = read_fn_file(args.u0, inst)
    trace = evolve(inst.form, u0, args.t, args.steps, policy=args.policy)
    rep = dissipation_report(inst.form, trace)
    _print_report(rep)
    print(f"final energy = {float(trace.energies[-1])!r}")
    if args.out:
        header = ("t", "energy") + tuple(f"u_{pid}" for pid in inst.ids)
        rows = [(t, e) + tuple(state)
                for t, e, state in zip(trace.times, trace.energies, trace.states)]
        _write_csv(args.out, header, rows)
    return 0 if rep.passed else 1


def cmd_smoothing(args) -> int:
    inst = _load(args.instance)
    seed = args.seed if args.seed is not None else inst.seed
    t_grid = None
    if args.tgrid:
        t_grid = np.array([float(tok) for tok in args.tgrid.split(",")])
    result = smoothing_experiment(inst.form, args.p, args.sigma, c1=args.c1,
                                  seed=seed, t_grid=t_grid,
                                  train_samples=args.samples or 20,
                                  holdout_samples=args.samples or 20)
    print(f"C1 = {result.c1!r}  C2 = {result.c2!r}  K_emp = {result.k_emp!r}")
    _print_report(result.hypothesis)
    _print_report(result.holdout)
    if args.out:
        _write_csv(args.out, ("split", "sample", "t", "lp_norm", "l2_initial", "ratio"),
                   result.rows)
    return 0 if result.passed else 1


def cmd_chebyshev(args) -> int:
    inst = _load(args.instance)
    seed = args.seed if args.seed is not None else inst.seed
    samples = args.samples or inst.samples
    rng = np.random.default_rng(seed)
    cache: dict = {}
    reports = []
    from .sampling import sample_fn
    for _ in range(samples):
        f = sample_fn(inst.space, rng)
        lam = float(rng.choice([0.25, 0.5, 1.0, 2.0])) * (1.0 + rng.random())
        reports.append(chebyshev_check(inst.form, f, lam, cache=cache))
    from .reports import merge
    rep = merge("chebyshev_suite", reports)
    mono = capacity_monotonicity_check(inst.form, samples=min(samples, 200),
                                       seed=seed, cache=cache)
    _print_report(rep)
    _print_report(mono)
    if args.out:
        params = f"samples={samples};seed={seed}"
        _write_csv(args.out, REPORT_HEADER,
                   [_report_row(rep, inst.name, params),
                    _report_row(mono, inst.name, params)])
    return 0 if rep.passed and mono.passed else 1


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="dirlab",
                                  description="checks and experiments for "
                                              "nonlinear Dirichlet forms on "
                                              "finite measured graphs")
    top.add_argument("--version", action="version", version=f"dirlab {__version__}")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("instance", help="bundled instance name or path to a TOML file")
        p.add_argument("--out", help="write a CSV report to this path")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--samples", type=int, default=None)

    p = sub.add_parser("check-form", help="Dirichlet structure checks")
    common(p)
    p.set_defaults(fn=cmd_check_form)

    p = sub.add_parser("capacity", help="capacity of a subset with witness")
    common(p)
    p.add_argument("--set", required=True, help='comma-separated point ids, e.g. "a,b"')
    p.add_argument("--tol", type=float, default=1e-6, help="relative bisection width")
    p.set_defaults(fn=cmd_capacity)

    p = sub.add_parser("chebyshev", help="capacity Chebyshev / monotonicity suite")
    common(p)
    p.set_defaults(fn=cmd_chebyshev)

    p = sub.add_parser("scan-isocap", help="isocapacitary constant over subsets")
    common(p)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--max-n", type=int, default=12)
    p.add_argument("--approx", action="store_true",
                   help="allow sampled subsets beyond --max-n")
    p.set_defaults(fn=cmd_scan_isocap)

    p = sub.add_parser("embed", help="embedding checks")
    common(p)
    p.add_argument("--mode", choices=("linf", "weak", "lq"), required=True)
    p.add_argument("--p", type=float, default=3.0)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--eps", type=float, default=0.5)
    p.set_defaults(fn=cmd_embed)

    p = sub.add_parser("resolve", help="solve grad E(u) + lam u = f")
    common(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--f", required=True, help="value file, one number per line")
    p.set_defaults(fn=cmd_resolve)

    p = sub.add_parser("flow", help="implicit Euler gradient flow")
    common(p)
    p.add_argument("--u0", required=True, help="value file, one number per line")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--policy", choices=("uniform", "geometric"), default="uniform")
    p.set_defaults(fn=cmd_flow)

    p = sub.add_parser("smoothing", help="semigroup smoothing experiment")
    common(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--c1", type=float, default=None)
    p.add_argument("--tgrid", help="comma-separated times, default geometric 0.01..10")
    p.set_defaults(fn=cmd_smoothing)

    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except InstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
