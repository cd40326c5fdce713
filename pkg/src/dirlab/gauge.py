"""Minkowski gauges of the energy sublevel sets.

The norm of the Dirichlet space is inf{lam > 0 : E1(u/lam) <= 1} and the
seminorm is the same with E in place of E1. Both maps lam -> E(u/lam) are
nonincreasing (convexity plus E(0) = 0), so a bracketing bisection computes
the gauge to relative accuracy with a certificate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .forms import FormInstance
from .reports import InequalityReport, compare, merge
from .space import Fn, truncate

__all__ = [
    "GaugeResult", "dirichlet_norm", "dirichlet_seminorm",
    "check_lattice_norm_inequalities", "check_norm_equivalence", "check_growth_lemma",
]


@dataclass(frozen=True)
class GaugeResult:
    value: float
    bracket: tuple[float, float]
    evals: int


def _minkowski(energy, u: Fn, l2: float, rel_tol: float) -> GaugeResult:
    """Gauge of {energy <= 1} along the ray through u.

    Bracket policy: start at [atol, max(1, |u|_2)], double hi until feasible,
    report 0 when even lam = atol is feasible (null directions and u = 0).
    """
    atol = 1e-14 * l2
    if l2 == 0.0:
        return GaugeResult(0.0, (0.0, 0.0), 0)
    evals = 0

    def feasible(lam: float) -> bool:
        nonlocal evals
        evals += 1
        return energy(u / lam) <= 1.0

    hi = max(1.0, l2)
    while not feasible(hi):
        hi *= 2.0
        if hi > 1e300:
            raise ArithmeticError("gauge bracket expansion diverged")
    lo = atol
    if feasible(lo):
        return GaugeResult(0.0, (0.0, lo), evals)
    while True:
        mid = 0.5 * (lo + hi)
        if hi - lo <= rel_tol * max(mid, atol):
            return GaugeResult(mid, (lo, hi), evals)
        if feasible(mid):
            hi = mid
        else:
            lo = mid


def dirichlet_norm(form: FormInstance, u: Fn, rel_tol: float = 1e-10) -> GaugeResult:
    u = form.space.check_fn(u)
    return _minkowski(form.eval_e1, u, form.space.l2_norm(u), rel_tol)


def dirichlet_seminorm(form: FormInstance, u: Fn, rel_tol: float = 1e-10) -> GaugeResult:
    u = form.space.check_fn(u)
    return _minkowski(form.eval, u, form.space.l2_norm(u), rel_tol)


def check_lattice_norm_inequalities(form: FormInstance, samples: int = 200, seed: int = 0,
                                    rel_tol: float = 1e-8) -> InequalityReport:
    """|u ^ v| <= |u| + |v| and |(-c) v u ^ c| <= |u| in the space norm."""
    rng = np.random.default_rng(seed)
    n = form.space.n
    reports = []
    for _ in range(samples):
        scale = float(rng.choice([0.1, 1.0, 10.0]))
        u = rng.normal(size=n) * scale
        v = rng.normal(size=n) * scale
        nu = dirichlet_norm(form, u).value
        nv = dirichlet_norm(form, v).value
        nm = dirichlet_norm(form, np.minimum(u, v)).value
        reports.append(compare("lattice_meet_norm", nm, nu + nv, rel_tol=rel_tol))
        c = float(rng.random()) * scale
        nt = dirichlet_norm(form, truncate(u, c)).value
        reports.append(compare("lattice_truncation_norm", nt, nu, rel_tol=rel_tol))
    return merge("lattice_norm_inequalities", reports)


def check_norm_equivalence(form: FormInstance, samples: int = 200, seed: int = 0) -> InequalityReport:
    """Empirical two-sided comparison of |u|_D with |u|_L2 + seminorm(u).

    Reports the smallest and largest sampled ratio; passes when both are
    finite and positive. The lower bound 1/2 holds a priori because the norm
    dominates each of the two summands separately.
    """
    rng = np.random.default_rng(seed)
    n = form.space.n
    lo, hi = math.inf, 0.0
    used = 0
    for _ in range(samples):
        u = rng.normal(size=n) * float(rng.choice([0.1, 1.0, 10.0]))
        denom = form.space.l2_norm(u) + dirichlet_seminorm(form, u).value
        if denom == 0.0:
            continue
        ratio = dirichlet_norm(form, u).value / denom
        lo, hi = min(lo, ratio), max(hi, ratio)
        used += 1
    passed = used > 0 and 0.0 < lo <= hi < math.inf
    return InequalityReport("norm_equivalence", lhs=lo, rhs=hi, margin=lo,
                            constant_used=hi / lo if lo > 0 else math.inf,
                            passed=passed, samples=used,
                            detail=f"ratio range [{lo:.6g}, {hi:.6g}]")


def check_growth_lemma(form: FormInstance, r: float | None = None, samples: int = 200,
                       seed: int = 0, rel_tol: float = 1e-8) -> InequalityReport:
    """|u|_D^r <= E1(u) whenever |u|_D <= 1, with r the growth exponent of E1."""
    if r is None:
        r = max(form.growth_exponent(), 2.0)
    rng = np.random.default_rng(seed)
    n = form.space.n
    reports = []
    for _ in range(samples):
        u = rng.normal(size=n)
        nd = dirichlet_norm(form, u).value
        if nd == 0.0:
            continue
        rho = 1.0 + 3.0 * float(rng.random())
        w = u / (nd * rho)
        nw = dirichlet_norm(form, w).value
        reports.append(compare("growth_lemma", nw ** r, form.eval_e1(w),
                               constant=r, rel_tol=rel_tol))
    return merge("growth_lemma", reports)
