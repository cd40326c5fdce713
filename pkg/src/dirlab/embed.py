"""Embedding checks for the Dirichlet space.

Three families, each two-sided: sup norm against singleton capacities, weak
Lp norm against the isocapacitary constant over all subsets, and strong Lq
norm via the layer-cake bound with the explicit constant q C^{q_eps}/eps.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .capacity import capacity
from .forms import FormInstance, SolverConfig
from .gauge import dirichlet_norm, dirichlet_seminorm
from .reports import InequalityReport, compare, merge
from .sampling import sample_fns
from .space import (FiniteMeasuredSpace, Fn, SubsetMask, distribution_function,
                    layer_cake_tail, lp_norm, weak_lp_norm)

__all__ = ["PoincareEstimate", "poincare_constant", "linfty_embedding_check",
           "IsocapScanResult", "isocap_scan", "weak_lp_embedding_check",
           "lq_embedding_check", "layer_cake_identity_report"]


@dataclass(frozen=True)
class PoincareEstimate:
    constant: float
    null_direction: np.ndarray | None
    samples: int

    @property
    def has_kernel(self) -> bool:
        return self.null_direction is not None


def _null_direction(form: FormInstance) -> np.ndarray | None:
    """A nonzero direction with vanishing energy, or None.

    Quadratic forms expose their kernel spectrally. For the edge-based kinds
    the kernel is spanned by indicators of connected components that carry no
    killing weight, provided the edge cost vanishes only at zero; the phi
    validator enforces phi > 0 away from 0 up to flat pieces, which we probe.
    """
    n = form.space.n
    if form.spec.kind == "quadratic":
        vals, vecs = np.linalg.eigh(np.asarray(form.spec.quad, dtype=float))
        if vals[0] <= 1e-12 * max(1.0, abs(vals[-1])):
            return vecs[:, 0].copy()
        return None
    if form.spec.kind == "phi_energy":
        phi = form.spec.phi
        for x in (1e-6, 1e-3, 0.1, 1.0):
            if phi.value(x) <= 0.0:
                raise ValueError("edge cost vanishes away from zero; kernel "
                                 "analysis unsupported for this phi")
    kap = form._kap
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in zip(form._ei, form._ej):
        adj[a].append(b)
        adj[b].append(a)
    seen = np.zeros(n, dtype=bool)
    for start in range(n):
        if seen[start]:
            continue
        comp = [start]
        seen[start] = True
        head = 0
        while head < len(comp):
            for nb in adj[comp[head]]:
                if not seen[nb]:
                    seen[nb] = True
                    comp.append(nb)
            head += 1
        if kap is None or not np.any(kap[comp] > 0.0):
            direction = np.zeros(n)
            direction[comp] = 1.0
            return direction
    return None


def poincare_constant(form: FormInstance, samples: int = 500, seed: int = 0,
                      cfg: SolverConfig | None = None) -> PoincareEstimate:
    """Smallest sampled C with ||f||_2 <= C |f|_D, or an infinite flag.

    A nontrivial kernel makes the constant infinite; the offending direction
    is returned instead of a number being fabricated.
    """
    null = _null_direction(form)
    if null is not None:
        return PoincareEstimate(math.inf, null, 0)
    fns = sample_fns(form.space, samples, seed=seed)
    best = 0.0
    used = 0
    for f in fns:
        l2 = form.space.l2_norm(f)
        if l2 == 0.0:
            continue
        semi = dirichlet_seminorm(form, f).value
        used += 1
        best = max(best, l2 / semi)
    return PoincareEstimate(best, None, used)


def linfty_embedding_check(form: FormInstance, samples: int = 500, seed: int = 0,
                           rel_tol: float = 1e-6, outer_tol: float = 1e-9,
                           cfg: SolverConfig | None = None,
                           cache: dict | None = None) -> InequalityReport:
    """Sup-norm embedding with C = 1/min singleton capacity, both directions.

    Forward: ||f||_inf <= C ||f||_D on sampled f including the capacity
    witnesses themselves. Converse: every singleton capacity is at least the
    reciprocal of the best sampled ratio.
    """
    if cache is None:
        cache = {}
    space = form.space
    caps = []
    witnesses = []
    for i in range(space.n):
        res = capacity(form, space.subset([i]), outer_tol=outer_tol, cfg=cfg, cache=cache)
        caps.append(res.value)
        witnesses.append(res.witness)
    c_min = min(caps)
    big_c = 1.0 / c_min
    fns = sample_fns(space, samples, seed=seed, witnesses=tuple(witnesses))
    reports = []
    c_emp = 0.0
    for f in fns:
        sup = lp_norm(space, f, math.inf)
        if sup == 0.0:
            continue
        nd = dirichlet_norm(form, f).value
        c_emp = max(c_emp, sup / nd)
        reports.append(compare("linfty_forward", sup, big_c * nd, constant=big_c,
                               rel_tol=rel_tol))
    for i, cap_i in enumerate(caps):
        reports.append(compare("linfty_converse", 1.0 / c_emp, cap_i, constant=c_emp,
                               rel_tol=rel_tol, detail=f"site {i}"))
    rep = merge("linfty_embedding", reports)
    return InequalityReport(rep.name, rep.lhs, rep.rhs, rep.margin, big_c, rep.passed,
                            rep.samples,
                            f"c_min={c_min:.12g} C={big_c:.12g} C_emp={c_emp:.12g}")


@dataclass(frozen=True)
class IsocapScanResult:
    q: float
    best_constant: float
    argmax_subset: SubsetMask
    subsets_scanned: int
    approximate: bool
    masks: tuple[SubsetMask, ...]
    capacities: tuple[float, ...]
    masses: tuple[float, ...]
    witnesses: tuple[Fn, ...]


def _scan_masks(n: int, max_n: int, seed: int) -> tuple[list[np.ndarray], bool]:
    if n <= max_n:
        masks = []
        for bits in range(1, 2 ** n):
            masks.append(np.array([(bits >> i) & 1 == 1 for i in range(n)]))
        return masks, False
    rng = np.random.default_rng(seed)
    seen = set()
    masks = []
    for _ in range(10_000):
        mask = rng.random(n) < rng.uniform(0.1, 0.9)
        if not mask.any():
            mask[int(rng.integers(n))] = True
        key = mask.tobytes()
        if key not in seen:
            seen.add(key)
            masks.append(mask)
    return masks, True


def isocap_scan(form: FormInstance, q: float, max_n: int = 12,
                outer_tol: float = 1e-8, cfg: SolverConfig | None = None,
                cache: dict | None = None, seed: int = 0) -> IsocapScanResult:
    """Maximize m(A)^{1/q} / cap(A) over subsets.

    Exhaustive for n <= max_n; beyond that a seeded random sample of subsets
    gives a lower bound on the constant, flagged as approximate. Capacities
    may be evaluated concurrently (DIRLAB_THREADS); the reduction is a max
    over the fixed enumeration order, so the result does not depend on
    scheduling.
    """
    if q <= 0:
        raise ValueError("q must be positive")
    if cache is None:
        cache = {}
    space = form.space
    masks, approximate = _scan_masks(space.n, max_n, seed)
    threads = int(os.environ.get("DIRLAB_THREADS", "1"))

    def solve(mask):
        return capacity(form, mask, outer_tol=outer_tol, cfg=cfg, cache=cache)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(solve, masks))
    else:
        results = [solve(mask) for mask in masks]
    best = -math.inf
    best_idx = 0
    caps = []
    masses = []
    for idx, (mask, res) in enumerate(zip(masks, results)):
        mass = space.mass(mask)
        caps.append(res.value)
        masses.append(mass)
        ratio = mass ** (1.0 / q) / res.value
        if ratio > best:
            best = ratio
            best_idx = idx
    return IsocapScanResult(q=float(q), best_constant=float(best),
                            argmax_subset=masks[best_idx],
                            subsets_scanned=len(masks), approximate=approximate,
                            masks=tuple(masks), capacities=tuple(caps),
                            masses=tuple(masses),
                            witnesses=tuple(r.witness for r in results))


def weak_lp_embedding_check(form: FormInstance, p: float, scan: IsocapScanResult,
                            samples: int = 500, seed: int = 0,
                            rel_tol: float = 1e-6) -> InequalityReport:
    """Weak Lp norm vs the isocapacitary constant, both directions.

    Forward on sampled f; converse through each scanned subset's capacity
    witness u_A, which satisfies m(A) <= m_{u_A}(1) <= ||u_A||_{p,w}^p since
    u_A >= 1 on A.
    """
    if p <= 2.0:
        raise ValueError("weak-Lp embedding requires p > 2")
    if abs(scan.q - p) > 1e-12:
        raise ValueError(f"scan was computed at exponent {scan.q}, not {p}")
    space = form.space
    c_iso = scan.best_constant
    fns = sample_fns(space, samples, seed=seed, witnesses=scan.witnesses)
    reports = []
    for f in fns:
        wk = weak_lp_norm(space, f, p)
        nd = dirichlet_norm(form, f).value
        reports.append(compare("weak_lp_forward", wk, c_iso * nd, constant=c_iso,
                               rel_tol=rel_tol))
    for mask, mass, witness in zip(scan.masks, scan.masses, scan.witnesses):
        at_one = distribution_function(space, witness, 1.0)
        reports.append(compare("weak_lp_witness_mass", mass, at_one,
                               rel_tol=rel_tol))
        reports.append(compare("weak_lp_witness_norm", at_one,
                               weak_lp_norm(space, witness, p) ** p,
                               rel_tol=rel_tol))
    rep = merge("weak_lp_embedding", reports)
    return InequalityReport(rep.name, rep.lhs, rep.rhs, rep.margin, c_iso, rep.passed,
                            rep.samples, f"C_iso={c_iso:.12g} p={p:g}")


def layer_cake_identity_report(space: FiniteMeasuredSpace, f: Fn, q: float,
                               rel_tol: float = 1e-12) -> InequalityReport:
    """Exactness of the piecewise tail integral against direct summation.

    q int_1^inf m_f(l) l^{q-1} dl = sum over |f_i| >= 1 of m_i (|f_i|^q - 1)
    under the closed level-set convention; equivalently the direct sum of
    m_i |f_i|^q over the same points equals the tail plus m({|f| >= 1}).
    """
    f = space.check_fn(f)
    tail = layer_cake_tail(space, f, q)
    hit = np.abs(f) >= 1.0
    direct_minus = float(np.sum(space.measure[hit] * (np.abs(f[hit]) ** q - 1.0)))
    scale = 1.0 + abs(tail) + abs(direct_minus)
    err = abs(tail - direct_minus)
    return InequalityReport("layer_cake_identity", err, rel_tol * scale,
                            rel_tol * scale - err, math.nan,
                            err <= rel_tol * scale, 1,
                            f"tail={float(tail)!r} direct={float(direct_minus)!r}")


def lq_embedding_check(form: FormInstance, q: float, p: float, eps: float,
                       scan: IsocapScanResult, samples: int = 500, seed: int = 0,
                       rel_tol: float = 1e-9) -> InequalityReport:
    """Strong Lq bound with the explicit layer-cake constant.

    int |f|^q dm <= ||f||_D^2 + (q C^{q_eps}/eps) ||f||_D^{q_eps} where
    q_eps = q + eps and C is the isocapacitary constant at exponent q_eps.
    The layer-cake identity is re-verified on every sampled f.
    """
    if q < 2.0:
        raise ValueError("lq embedding requires q >= 2")
    if not (p > q and eps > 0.0 and q + eps < p):
        raise ValueError("need p > q and 0 < eps with q + eps < p")
    q_eps = q + eps
    if abs(scan.q - q_eps) > 1e-12:
        raise ValueError(f"scan was computed at exponent {scan.q}, not {q_eps}")
    space = form.space
    c = scan.best_constant
    coef = q * c ** q_eps / eps
    fns = sample_fns(space, samples, seed=seed, witnesses=scan.witnesses)
    reports = []
    for f in fns:
        lhs = float(np.sum(space.measure * np.abs(f) ** q))
        nd = dirichlet_norm(form, f).value
        rhs = nd ** 2 + coef * nd ** q_eps
        reports.append(compare("lq_bound", lhs, rhs, constant=coef, rel_tol=rel_tol))
        reports.append(layer_cake_identity_report(space, f, q))
    rep = merge("lq_embedding", reports)
    return InequalityReport(rep.name, rep.lhs, rep.rhs, rep.margin, coef, rep.passed,
                            rep.samples,
                            f"C_iso={c:.12g} coef={coef:.12g} q={q:g} eps={eps:g}")
