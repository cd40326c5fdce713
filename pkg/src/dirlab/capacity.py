"""Norm capacity of subsets.

cap(A) = inf{ |u|_D : u >= 1 on A }. The gauge level sets are nested, so
cap(A) <= t iff some u >= 1 on A has E1(u/t) <= 1; we bisect on t and decide
feasibility at each level by projected gradient descent on E1(u/t) over the
closed convex set {u >= 1 on A}. Feasible levels terminate early, as soon as
the objective dips under 1; infeasible levels must run to stationarity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .forms import DEFAULT_SOLVER, FormInstance, SolverConfig, SolverError
from .gauge import dirichlet_norm
from .reports import InequalityReport, compare, merge
from .space import Fn, SubsetMask

__all__ = ["CapacityResult", "capacity", "is_polar", "chebyshev_check",
           "capacity_monotonicity_check"]


@dataclass(frozen=True)
class CapacityResult:
    value: float
    witness: np.ndarray
    outer_iters: int
    inner_iters: int


def _feasibility_min(form: FormInstance, floor: np.ndarray, t: float, u0: np.ndarray,
                     cfg: SolverConfig, stop_below: float | None = 1.0,
                     grad_tol: float = 1e-8):
    """Minimize E1(u/t) over {u >= floor}; early exit once below stop_below.

    Spectral projected gradient with a nonmonotone Armijo safeguard. An
    early exit soundly certifies feasibility (the iterate itself is the
    certificate); an exit at stationarity certifies the constrained minimum,
    whose value error at residual 1e-8 is orders below the classification
    margin used by the bisection.
    """
    m = form.space.measure
    u = np.maximum(u0, floor)
    fv = form.eval_e1(u / t)
    hist = [fv]
    g = form.e1_gradient(u / t) / t
    step = 1.0
    it = 0
    stalls = 0
    res = math.inf
    for it in range(1, cfg.max_iter + 1):
        if stop_below is not None and fv <= stop_below:
            return fv, u, it
        probe = np.maximum(u - g, floor)
        res = math.sqrt(float(np.sum(m * (u - probe) ** 2)))
        if res <= grad_tol * (1.0 + math.sqrt(float(np.sum(m * u * u)))):
            return fv, u, it
        fmax = max(hist)
        accepted = False
        while step > 1e-18:
            un = np.maximum(u - step * g, floor)
            fn = form.eval_e1(un / t)
            dec = float(np.sum(m * g * (un - u)))
            if dec < 0.0 and fn <= fmax + cfg.armijo_c * dec:
                accepted = True
                stalls = 0
                break
            if step <= 1e-13 and fn <= fv + 1e-13 * max(1.0, abs(fv)):
                accepted = True
                stalls += 1
                break
            step *= cfg.backtrack_factor
        if not accepted or stalls > 50:
            # stationary up to float granularity
            return fv, u, it
        gn = form.e1_gradient(un / t) / t
        dv = un - u
        dg = gn - g
        curv = float(np.sum(m * dv * dg))
        if curv > 0.0:
            step = min(max(float(np.sum(m * dv * dv)) / curv, 1e-12), 1e12)
        else:
            step = min(step * 2.0, 1e12)
        u, fv, g = un, fn, gn
        hist.append(fv)
        if len(hist) > 10:
            hist.pop(0)
    raise SolverError("capacity feasibility solve did not converge", residual=res)


def capacity(form: FormInstance, subset: SubsetMask, outer_tol: float = 1e-6,
             cfg: SolverConfig | None = None, cache: dict | None = None) -> CapacityResult:
    """Bisection on the level t with witness extraction.

    The returned witness is feasible exactly (it is a projection output) and
    its space norm exceeds the reported value by at most the bracket width.
    A [0,1] truncation post-pass keeps whichever witness has smaller norm.
    """
    subset = form.space.check_mask(subset)
    key = (subset.tobytes(), outer_tol)
    if cache is not None and key in cache:
        return cache[key]
    cfg = cfg or DEFAULT_SOLVER
    n = form.space.n
    if not subset.any():
        res = CapacityResult(0.0, np.zeros(n), 0, 0)
        if cache is not None:
            cache[key] = res
        return res
    floor = np.where(subset, 1.0, -np.inf)
    ones = np.ones(n)
    hi = dirichlet_norm(form, ones).value * (1.0 + 1e-9)
    lo = 0.0
    inner_total = 0
    outer = 0
    witness = ones.copy()
    u_warm = ones.copy()
    # make sure the initial hi really is feasible before trusting the bracket
    val, u, it = _feasibility_min(form, floor, hi, u_warm, cfg)
    inner_total += it
    while val > 1.0 + 1e-12:
        hi *= 2.0
        val, u, it = _feasibility_min(form, floor, hi, u, cfg)
        inner_total += it
        if hi > 1e300:
            raise ArithmeticError("capacity bracket expansion diverged")
    witness, u_warm = u.copy(), u
    while hi - lo > outer_tol * hi:
        outer += 1
        t = 0.5 * (lo + hi)
        val, u, it = _feasibility_min(form, floor, t, u_warm, cfg)
        inner_total += it
        u_warm = u
        if val <= 1.0 + 1e-12:
            hi = t
            witness = u.copy()
        else:
            lo = t
    value = 0.5 * (lo + hi)
    clipped = np.clip(witness, 0.0, 1.0)
    n_clip = dirichlet_norm(form, clipped).value
    n_raw = dirichlet_norm(form, witness).value
    if n_clip <= n_raw:
        witness, best = clipped, n_clip
    else:
        best = n_raw
    value = min(value, best)
    res = CapacityResult(float(value), witness, outer, inner_total)
    if cache is not None:
        cache[key] = res
    return res


def is_polar(form: FormInstance, subset: SubsetMask, tol: float = 1e-9,
             cache: dict | None = None) -> bool:
    """Zero-capacity test. Full support makes every nonempty set non-polar,
    and we treat a violation of that as an internal error, not a result."""
    subset = form.space.check_mask(subset)
    value = capacity(form, subset, cache=cache).value
    polar = value <= tol
    if polar and subset.any():
        raise RuntimeError("nonempty set reported polar on a fully supported space")
    return polar


def chebyshev_check(form: FormInstance, f: Fn, lam: float, rel_tol: float = 1e-5,
                    outer_tol: float = 1e-8, cfg: SolverConfig | None = None,
                    cache: dict | None = None) -> InequalityReport:
    """cap({|f| >= lam}) <= |f|_D / lam."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    f = form.space.check_fn(f)
    mask = np.abs(f) >= lam
    cap = capacity(form, mask, outer_tol=outer_tol, cfg=cfg, cache=cache).value
    rhs = dirichlet_norm(form, f).value / lam
    return compare("chebyshev", cap, rhs, constant=lam, rel_tol=rel_tol,
                   detail=f"level set of mass {form.space.mass(mask):.6g}")


def capacity_monotonicity_check(form: FormInstance, samples: int = 200, seed: int = 0,
                                rel_tol: float = 1e-5, outer_tol: float = 1e-8,
                                cfg: SolverConfig | None = None,
                                cache: dict | None = None) -> InequalityReport:
    """cap(A) <= cap(B) for sampled nested pairs A subset of B."""
    rng = np.random.default_rng(seed)
    n = form.space.n
    if cache is None:
        cache = {}
    reports = []
    for i in range(n):
        a = form.space.subset([i])
        b = np.ones(n, dtype=bool)
        ca = capacity(form, a, outer_tol=outer_tol, cfg=cfg, cache=cache).value
        cb = capacity(form, b, outer_tol=outer_tol, cfg=cfg, cache=cache).value
        reports.append(compare("capacity_monotone", ca, cb, rel_tol=rel_tol))
    for _ in range(samples):
        b = rng.random(n) < rng.uniform(0.2, 0.9)
        if not b.any():
            b[int(rng.integers(n))] = True
        a = b & (rng.random(n) < 0.6)
        if not a.any():
            a[int(rng.choice(np.flatnonzero(b)))] = True
        ca = capacity(form, a, outer_tol=outer_tol, cfg=cfg, cache=cache).value
        cb = capacity(form, b, outer_tol=outer_tol, cfg=cfg, cache=cache).value
        reports.append(compare("capacity_monotone", ca, cb, rel_tol=rel_tol))
    return merge("capacity_monotonicity", reports)
