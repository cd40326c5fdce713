"""Energy functionals on finite measured spaces.

Four kinds are supported: graph p-energies with optional killing terms,
phi-energies driven by a validated even convex piecewise polynomial,
nonlocal pairwise kernels, and raw symmetric PSD quadratic forms. The last
kind exists so that convex-but-not-submodular counterexamples can be fed
through the same front door as the honest energies; nothing guarantees a
quadratic form passes the structure checks, and that is the point.

All gradients are taken with respect to the measure-weighted inner product,
so the L2 gradient flow and prox maps below are flows of the weighted space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .reports import InequalityReport, compare, merge
from .space import FiniteMeasuredSpace, Fn, median_combination

__all__ = [
    "FormSpec", "FormInstance", "SolverConfig", "PiecewisePhi", "SolverError",
    "check_submodularity", "check_truncation_property",
    "submodularity_suite", "truncation_suite",
    "check_evenness", "check_convexity", "check_growth_type",
]

KINDS = ("p_energy", "phi_energy", "nonlocal_kernel", "quadratic")


class SolverError(RuntimeError):
    def __init__(self, msg: str, residual: float = math.nan):
        super().__init__(f"{msg} (residual={residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SolverConfig:
    grad_tol: float = 1e-9
    max_iter: int = 100_000
    backtrack_factor: float = 0.5
    armijo_c: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.backtrack_factor < 1):
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.grad_tol <= 0 or self.max_iter < 1 or self.armijo_c <= 0:
            raise ValueError("bad solver configuration")


DEFAULT_SOLVER = SolverConfig()


@dataclass(frozen=True)
class PiecewisePhi:
    """Even convex scalar potential, given as polynomials on [b_i, b_{i+1}).

    Pieces are polynomials in (x - b_i), low order first; the first
    breakpoint must be 0 and the last piece extends to infinity. Values at
    negative arguments use the even extension, derivatives the odd one.
    """

    breakpoints: tuple[float, ...]
    coeffs: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        if not bps or bps[0] != 0.0 or list(bps) != sorted(set(bps)):
            raise ValueError("breakpoints must start at 0 and strictly increase")
        if len(self.coeffs) != len(bps):
            raise ValueError("one coefficient tuple per piece required")
        cfs = tuple(tuple(float(c) for c in piece) for piece in self.coeffs)
        if any(len(piece) == 0 for piece in cfs):
            raise ValueError("empty polynomial piece")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "coeffs", cfs)
        _validate_phi(self)

    def _pieces(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.searchsorted(self.breakpoints, x, side="right") - 1,
                       0, len(self.breakpoints) - 1)

    def value(self, x) -> np.ndarray:
        x = np.abs(np.asarray(x, dtype=float))
        idx = self._pieces(x)
        out = np.zeros_like(x)
        for k, (lo, piece) in enumerate(zip(self.breakpoints, self.coeffs)):
            sel = idx == k
            if not np.any(sel):
                continue
            t = x[sel] - lo
            acc = np.zeros_like(t)
            for c in reversed(piece):
                acc = acc * t + c
            out[sel] = acc
        return out

    def deriv(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        idx = self._pieces(ax)
        out = np.zeros_like(ax)
        for k, (lo, piece) in enumerate(zip(self.breakpoints, self.coeffs)):
            sel = idx == k
            if not np.any(sel):
                continue
            t = ax[sel] - lo
            acc = np.zeros_like(t)
            for j in range(len(piece) - 1, 0, -1):
                acc = acc * t + j * piece[j]
            out[sel] = acc
        return np.sign(x) * out


def _validate_phi(phi: PiecewisePhi) -> None:
    # phi(0) = 0 exactly
    if phi.coeffs[0][0] != 0.0:
        raise ValueError("phi(0) must be 0")
    # C^0 and C^1 matching at interior breakpoints
    for k in range(1, len(phi.breakpoints)):
        b = phi.breakpoints[k]
        left = b - 1e-12 * max(1.0, b)
        for fn, what in ((phi.value, "continuity"), (phi.deriv, "derivative continuity")):
            lo, hi = float(fn(left)), float(fn(b))
            if abs(hi - lo) > 1e-8 * (1.0 + abs(hi) + abs(lo)):
                raise ValueError(f"phi fails {what} at breakpoint {b}")
    # derivative must vanish at the origin for the even extension to be C^1
    if abs(float(phi.deriv(1e-13))) > 1e-10:
        raise ValueError("phi'(0) must be 0")
    # sampled convexity: derivative nondecreasing on a dense grid
    top = phi.breakpoints[-1] + 10.0
    grid = np.linspace(0.0, top, 4001)
    dv = phi.deriv(grid)
    if np.any(np.diff(dv) < -1e-9 * (1.0 + np.abs(dv[:-1]) + np.abs(dv[1:]))):
        raise ValueError("phi derivative decreases somewhere: not convex")
    if np.any(phi.value(grid) < -1e-12):
        raise ValueError("phi must be nonnegative")


@dataclass(frozen=True)
class FormSpec:
    """Declarative description of a form; validated against a space on binding."""

    kind: str
    p: float = 2.0
    edges: tuple[tuple[int, int, float], ...] = ()
    kernel: np.ndarray | None = None
    phi: PiecewisePhi | None = None
    killing: np.ndarray | None = None
    killing_exponent: float | None = None
    quad: np.ndarray | None = None


@dataclass(frozen=True)
class FormInstance:
    """A FormSpec bound to a space, with evaluation and prox machinery."""

    space: FiniteMeasuredSpace
    spec: FormSpec
    _ei: np.ndarray = field(init=False, repr=False, compare=False)
    _ej: np.ndarray = field(init=False, repr=False, compare=False)
    _w: np.ndarray = field(init=False, repr=False, compare=False)
    _kap: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.space.n
        spec = self.spec
        if spec.kind not in KINDS:
            raise ValueError(f"unknown form kind {spec.kind!r}")
        if spec.kind != "quadratic" and not (spec.p >= 2.0):
            raise ValueError("p must be >= 2")
        ei, ej, w = [], [], []
        if spec.kind in ("p_energy", "phi_energy"):
            for (i, j, wt) in spec.edges:
                if not (0 <= i < n and 0 <= j < n) or i == j:
                    raise ValueError(f"bad edge ({i},{j})")
                if wt < 0:
                    raise ValueError("edge weights must be >= 0")
                ei.append(i); ej.append(j); w.append(float(wt))
        elif spec.kind == "nonlocal_kernel":
            K = np.asarray(spec.kernel, dtype=float)
            if K.shape != (n, n):
                raise ValueError("kernel must be n x n")
            if np.any(K < 0):
                raise ValueError("kernel entries must be >= 0")
            if not np.allclose(K, K.T, atol=1e-12):
                raise ValueError("kernel must be symmetric")
            for i in range(n):
                for j in range(i + 1, n):
                    if K[i, j] > 0.0:
                        ei.append(i); ej.append(j); w.append(float(K[i, j]))
        else:  # quadratic
            Q = np.asarray(spec.quad, dtype=float)
            if Q.shape != (n, n) or not np.allclose(Q, Q.T, atol=1e-12):
                raise ValueError("quad must be a symmetric n x n matrix")
            lo = float(np.linalg.eigvalsh(Q).min())
            if lo < -1e-10 * max(1.0, float(np.abs(Q).max())):
                raise ValueError("quad must be positive semidefinite (convexity)")
        if spec.kind == "phi_energy" and spec.phi is None:
            raise ValueError("phi_energy needs a phi")
        if spec.kind != "phi_energy" and spec.phi is not None:
            raise ValueError("phi only makes sense for phi_energy")
        if spec.kind == "quadratic" and (spec.killing is not None or spec.edges):
            raise ValueError("quadratic kind takes the full matrix, nothing else")
        kap = np.zeros(n)
        if spec.killing is not None:
            kap = np.asarray(spec.killing, dtype=float)
            if kap.shape != (n,) or np.any(kap < 0):
                raise ValueError("killing must be a nonnegative vector of length n")
        s = spec.killing_exponent
        if s is not None:
            if spec.kind == "phi_energy":
                raise ValueError("phi_energy applies phi to killed sites; no exponent")
            if not s >= 2.0:
                raise ValueError("killing exponent must be >= 2")
        object.__setattr__(self, "_ei", np.asarray(ei, dtype=int))
        object.__setattr__(self, "_ej", np.asarray(ej, dtype=int))
        object.__setattr__(self, "_w", np.asarray(w, dtype=float))
        object.__setattr__(self, "_kap", kap)

    # -- energy values ----------------------------------------------------

    @property
    def _s(self) -> float:
        return self.spec.killing_exponent if self.spec.killing_exponent is not None else self.spec.p

    def eval(self, u: Fn) -> float:
        u = self.space.check_fn(u)
        spec = self.spec
        if spec.kind == "quadratic":
            return 0.5 * float(u @ np.asarray(spec.quad, dtype=float) @ u)
        d = u[self._ei] - u[self._ej] if self._ei.size else np.zeros(0)
        if spec.kind == "phi_energy":
            val = float(self._w @ spec.phi.value(d)) if d.size else 0.0
            if self._kap.any():
                val += float(self._kap @ spec.phi.value(u))
            return val
        p = spec.p
        val = float(self._w @ np.abs(d) ** p) / p if d.size else 0.0
        if self._kap.any():
            s = self._s
            val += float(self._kap @ np.abs(u) ** s) / s
        return val

    def eval_e1(self, u: Fn) -> float:
        """E(u) plus the squared weighted L2 norm."""
        u = self.space.check_fn(u)
        return self.eval(u) + self.space.inner(u, u)

    # -- gradients (weighted metric) --------------------------------------

    def _euclid_gradient(self, u: Fn) -> np.ndarray:
        spec = self.spec
        n = self.space.n
        if spec.kind == "quadratic":
            return np.asarray(spec.quad, dtype=float) @ u
        g = np.zeros(n)
        if self._ei.size:
            d = u[self._ei] - u[self._ej]
            if spec.kind == "phi_energy":
                t = self._w * spec.phi.deriv(d)
            else:
                t = self._w * np.sign(d) * np.abs(d) ** (spec.p - 1.0)
            g += np.bincount(self._ei, weights=t, minlength=n)
            g -= np.bincount(self._ej, weights=t, minlength=n)
        if self._kap.any():
            if spec.kind == "phi_energy":
                g += self._kap * spec.phi.deriv(u)
            else:
                g += self._kap * np.sign(u) * np.abs(u) ** (self._s - 1.0)
        return g

    def gradient(self, u: Fn) -> np.ndarray:
        """Gradient of eval with respect to the weighted inner product."""
        u = self.space.check_fn(u)
        return self._euclid_gradient(u) / self.space.measure

    def e1_gradient(self, u: Fn) -> np.ndarray:
        return self.gradient(u) + 2.0 * u

    def growth_exponent(self) -> float:
        """Smallest r this package certifies for E(lam*u) <= lam^r E(u), lam >= 1."""
        if self.spec.kind == "quadratic":
            return 2.0
        if self.spec.kind == "phi_energy":
            raise ValueError("no certified growth exponent for phi energies; measure one")
        r = self.spec.p if self._ei.size else 2.0
        if self._kap.any():
            r = max(r, self._s)
        return r

    # -- prox / implicit Euler --------------------------------------------

    def prox(self, tau: float, g: Fn, cfg: SolverConfig | None = None,
             v0: Fn | None = None) -> np.ndarray:
        """argmin_v eval(v) + ||v - g||^2 / (2 tau), weighted norm.

        Spectral gradient descent: Barzilai-Borwein steps with a nonmonotone
        Armijo safeguard (reference value is the max over a short history).
        The quadratic term makes the objective (1/tau)-strongly convex, so
        the curvature quotient is always positive and descent converges.
        """
        if tau <= 0:
            raise ValueError("tau must be positive")
        cfg = cfg or DEFAULT_SOLVER
        m = self.space.measure
        g = self.space.check_fn(g)
        tol = cfg.grad_tol * (1.0 + self.space.l2_norm(g))

        def obj(x):
            d = x - g
            return self.eval(x) + float(np.sum(m * d * d)) / (2.0 * tau)

        v = g.astype(float).copy() if v0 is None else self.space.check_fn(v0).astype(float).copy()
        fv = obj(v)
        hist = [fv]
        grad = self.gradient(v) + (v - g) / tau
        step = tau
        plateau = 0
        res = math.inf
        for _ in range(cfg.max_iter):
            res = math.sqrt(float(np.sum(m * grad * grad)))
            if res <= tol:
                return v
            gsq = res * res
            fmax = max(hist)
            accepted = False
            while step > 1e-18:
                vn = v - step * grad
                fn = obj(vn)
                if fn <= fmax - cfg.armijo_c * step * gsq:
                    accepted = True
                    plateau = 0
                    break
                if step <= 1e-13 * tau and fn <= fv + 1e-13 * max(1.0, abs(fv)):
                    # decrease is below float granularity; accept and let the
                    # residual test decide on the next sweep
                    accepted = True
                    plateau += 1
                    break
                step *= cfg.backtrack_factor
            if not accepted or plateau > 50:
                raise SolverError("prox line search stalled", residual=res)
            gn = self.gradient(vn) + (vn - g) / tau
            dv = vn - v
            dg = gn - grad
            curv = float(np.sum(m * dv * dg))
            if curv > 0.0:
                step = min(max(float(np.sum(m * dv * dv)) / curv, 1e-12), 1e12)
            else:
                step = min(step * 2.0, 1e12)
            v, fv, grad = vn, fn, gn
            hist.append(fv)
            if len(hist) > 10:
                hist.pop(0)
        raise SolverError("prox did not converge", residual=res)


# -- structure checks ------------------------------------------------------

def _energy_fn(form: FormInstance, energy: str):
    if energy == "e":
        return form.eval
    if energy == "e1":
        return form.eval_e1
    raise ValueError("energy must be 'e' or 'e1'")


def check_submodularity(form: FormInstance, u: Fn, v: Fn, rel_tol: float = 1e-9,
                        energy: str = "e") -> InequalityReport:
    """E(u ^ v) + E(u v v) <= E(u) + E(v) for one pair."""
    E = _energy_fn(form, energy)
    lhs = E(np.minimum(u, v)) + E(np.maximum(u, v))
    rhs = E(u) + E(v)
    return compare("submodularity", lhs, rhs, rel_tol=rel_tol)


def check_truncation_property(form: FormInstance, u: Fn, v: Fn, alpha: float,
                              rel_tol: float = 1e-9, energy: str = "e") -> InequalityReport:
    """Median combination inequality for one (u, v, alpha) triple."""
    E = _energy_fn(form, energy)
    a, b = median_combination(u, v, alpha)
    lhs = E(a) + E(b)
    rhs = E(u) + E(v)
    return compare("truncation_property", lhs, rhs, rel_tol=rel_tol)


def _suite_pairs(form: FormInstance, samples: int, seed: int):
    """Deterministic pair stream: canonical basis pairs first, then noise."""
    n = form.space.n
    rng = np.random.default_rng(seed)
    eye = np.eye(n)
    for i in range(n):
        for j in range(n):
            if i != j:
                yield eye[i], eye[j]
    for _ in range(samples):
        scale = float(rng.choice([0.1, 1.0, 10.0]))
        yield rng.normal(size=n) * scale, rng.normal(size=n) * scale


def submodularity_suite(form: FormInstance, samples: int = 1000, seed: int = 0,
                        rel_tol: float = 1e-9, energy: str = "e") -> InequalityReport:
    reports = []
    for u, v in _suite_pairs(form, samples, seed):
        r = check_submodularity(form, u, v, rel_tol=rel_tol, energy=energy)
        if not r.passed:
            r = InequalityReport(r.name, r.lhs, r.rhs, r.margin, r.constant_used,
                                 r.passed, r.samples,
                                 detail=f"u={np.array2string(u, precision=4)} v={np.array2string(v, precision=4)}")
        reports.append(r)
    return merge("submodularity_suite", reports)


def truncation_suite(form: FormInstance, samples: int = 1000, seed: int = 0,
                     rel_tol: float = 1e-9, energy: str = "e") -> InequalityReport:
    rng = np.random.default_rng(seed ^ 0x5EED)
    reports = []
    for u, v in _suite_pairs(form, samples, seed):
        alpha = float(rng.choice([1e-3, 0.1, 1.0, 10.0]) * (1.0 + rng.random()))
        r = check_truncation_property(form, u, v, alpha, rel_tol=rel_tol, energy=energy)
        if not r.passed:
            r = InequalityReport(r.name, r.lhs, r.rhs, r.margin, r.constant_used,
                                 r.passed, r.samples,
                                 detail=f"alpha={alpha:.4g} u={np.array2string(u, precision=4)} "
                                        f"v={np.array2string(v, precision=4)}")
        reports.append(r)
    return merge("truncation_suite", reports)


def check_evenness(form: FormInstance, samples: int = 200, seed: int = 0,
                   rel_tol: float = 1e-12) -> InequalityReport:
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(samples):
        u = rng.normal(size=form.space.n) * float(rng.choice([0.1, 1.0, 10.0]))
        a, b = form.eval(u), form.eval(-u)
        reports.append(compare("evenness", abs(a - b), 0.0, rel_tol=rel_tol))
    return merge("evenness", reports)


def check_convexity(form: FormInstance, samples: int = 200, seed: int = 0,
                    rel_tol: float = 1e-9) -> InequalityReport:
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(samples):
        u = rng.normal(size=form.space.n) * float(rng.choice([0.1, 1.0, 10.0]))
        v = rng.normal(size=form.space.n) * float(rng.choice([0.1, 1.0, 10.0]))
        t = float(rng.random())
        lhs = form.eval(t * u + (1 - t) * v)
        rhs = t * form.eval(u) + (1 - t) * form.eval(v)
        reports.append(compare("convexity", lhs, rhs, rel_tol=rel_tol))
    return merge("convexity", reports)


def check_growth_type(form: FormInstance, r: float,
                      lambdas: tuple[float, ...] = (1.0, 1.5, 2.0, 4.0, 10.0),
                      samples: int = 200, seed: int = 0, rel_tol: float = 1e-9,
                      energy: str = "e") -> InequalityReport:
    """E(lam u) <= lam^r E(u) over sampled u and the given lam >= 1 grid."""
    if any(l < 1.0 for l in lambdas):
        raise ValueError("growth type only constrains lam >= 1")
    E = _energy_fn(form, energy)
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(samples):
        u = rng.normal(size=form.space.n) * float(rng.choice([0.1, 1.0, 10.0]))
        base = E(u)
        for lam in lambdas:
            reports.append(compare("growth_type", E(lam * u), lam ** r * base,
                                   constant=r, rel_tol=rel_tol))
    return merge("growth_type", reports)
