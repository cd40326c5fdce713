import math

import numpy as np
import pytest

from dirlab.elliptic import (boundedness_certificate, decay_chain,
                             energy_truncation_check, level_decay_check,
                             level_mask, level_set_trace, resolve,
                             resolvent_identity_check,
                             stampacchia_vanishing_level, truncation_tail)
from dirlab.flow import lp_embedding_constant
from dirlab.gauge import dirichlet_norm
from dirlab.space import lp_norm

mpmath = pytest.importorskip("mpmath")


def linear_solve(form, lam, f):
    """Independent route for 2-homogeneous energies: (A + lam M) u = M f."""
    n = form.space.n
    A = np.zeros((n, n))
    for i, j, w in form.spec.edges:
        A[i, i] += w; A[j, j] += w
        A[i, j] -= w; A[j, i] -= w
    if form.spec.killing is not None:
        A += np.diag(np.asarray(form.spec.killing, dtype=float))
    M = np.diag(form.space.measure)
    return np.linalg.solve(A + lam * M, M @ f)


# -- resolvent --------------------------------------------------------------

def test_resolve_two_point_hand_oracle(bundle):
    # [[3,-1],[-1,3]] u = (1,0) gives u = (3/8, 1/8)
    form = bundle["two_point_p2"].form
    sol = resolve(form, 2.0, np.array([1.0, 0.0]))
    np.testing.assert_allclose(sol.u, [3.0 / 8.0, 1.0 / 8.0], atol=1e-9)
    assert sol.lam == 2.0
    assert sol.residual <= 1e-8


@pytest.mark.parametrize("name", ["path3_p2", "grounded_path5_p2", "ring8_p2"])
def test_resolve_linear_oracle(bundle, name):
    form = bundle[name].form
    rng = np.random.default_rng(13)
    for lam in (0.5, 2.0, 7.0):
        f = rng.normal(size=form.space.n) * 2.0
        expect = linear_solve(form, lam, f)
        sol = resolve(form, lam, f)
        np.testing.assert_allclose(sol.u, expect, atol=1e-7)
        assert sol.residual <= 1e-7 * (1 + np.linalg.norm(f))


def test_resolve_sup_bound(bundle, dirichlet_names):
    # comparison principle: ||u||_inf <= ||f||_inf / lam
    rng = np.random.default_rng(19)
    for name in dirichlet_names:
        form = bundle[name].form
        f = rng.normal(size=form.space.n) * 3.0
        for lam in (1.0, 2.0):
            sol = resolve(form, lam, f)
            sup_u = lp_norm(form.space, sol.u, math.inf)
            sup_f = lp_norm(form.space, f, math.inf)
            assert sup_u <= sup_f / lam * (1 + 1e-7), name


def test_resolve_contraction_and_order(bundle):
    form = bundle["ring6_p3"].form
    rng = np.random.default_rng(29)
    for _ in range(10):
        f = rng.normal(size=6)
        g = rng.normal(size=6)
        for lam in (0.5, 2.0):
            uf = resolve(form, lam, f).u
            ug = resolve(form, lam, g).u
            # the solution map is (1/lam)-Lipschitz in L2
            assert form.space.l2_norm(uf - ug) <= \
                form.space.l2_norm(f - g) / lam * (1 + 1e-6)
        h = f + np.abs(g)
        uh = resolve(form, 2.0, h).u
        u2 = resolve(form, 2.0, f).u
        assert np.min(uh - u2) >= -1e-7


def test_resolve_validation(bundle):
    form = bundle["two_point_p2"].form
    with pytest.raises(ValueError):
        resolve(form, 0.0, np.zeros(2))
    with pytest.raises(ValueError):
        resolve(form, 2.0, np.zeros(3))


def test_resolvent_identity(bundle):
    rng = np.random.default_rng(37)
    for name in ("two_point_p2", "path6_p3", "grounded_ring6_p3"):
        form = bundle[name].form
        f = rng.normal(size=form.space.n) * 2.0
        for lam in (1.0, 2.0, 3.0):
            rep = resolvent_identity_check(form, lam, f)
            assert rep.passed, f"{name} lam={lam}: {rep.detail}"
    with pytest.raises(ValueError):
        resolvent_identity_check(bundle["two_point_p2"].form, -1.0, np.zeros(2))


# -- level sets and truncation tails ----------------------------------------

def test_truncation_tail_and_masks():
    u = np.array([3.0, -2.0, 0.5])
    z = truncation_tail(u, 1.0)
    np.testing.assert_allclose(z, [2.0, -1.0, 0.0])
    np.testing.assert_allclose(level_mask(u, 1.0, "abs"), [True, True, False])
    np.testing.assert_allclose(level_mask(u, 1.0, "upper"), [True, False, False])
    with pytest.raises(ValueError):
        level_mask(u, 1.0, "closed")


def test_level_set_trace_invariants(bundle):
    form = bundle["path5_p2"].form
    u = resolve(form, 2.0, np.array([3.0, -1.0, 2.0, 0.0, -2.0])).u
    ks = np.linspace(0.0, 0.9 * np.max(np.abs(u)), 5)
    trace = level_set_trace(form, u, ks, with_norms=True)
    assert np.all(np.diff(trace.masses) <= 1e-12)
    assert np.all(np.diff(trace.zeta_l2) <= 1e-12)
    assert np.all(np.diff(trace.zeta_dnorm) <= 1e-9)
    assert trace.convention == "abs"
    bare = level_set_trace(form, u, ks)
    assert np.all(np.isnan(bare.zeta_dnorm))
    with pytest.raises(ValueError):
        level_set_trace(form, u, [1.0, 1.0])
    with pytest.raises(ValueError):
        level_set_trace(form, u, [2.0, 1.0])


def test_energy_truncation_hand_oracle(bundle):
    # k=0 on the worked two-point solve: E1(u) = 3/16 <= <u,f> = 3/8
    form = bundle["two_point_p2"].form
    f = np.array([1.0, 0.0])
    u = resolve(form, 2.0, f).u
    rep = energy_truncation_check(form, u, f, 0.0)
    assert rep.passed
    np.testing.assert_allclose(rep.lhs, 3.0 / 16.0, atol=1e-8)
    np.testing.assert_allclose(rep.rhs, 3.0 / 8.0, atol=1e-8)
    with pytest.raises(ValueError):
        energy_truncation_check(form, u, f, -0.5)


def test_upper_convention_breaks_energy_step(bundle):
    # solution forced negative: the one-sided level set misses the support
    # of the truncation tail and the energy inequality fails against it
    form = bundle["two_point_p2"].form
    f = np.array([-10.0, 0.1])
    u = resolve(form, 2.0, f).u
    np.testing.assert_allclose(u, linear_solve(form, 2.0, f), atol=1e-8)
    assert np.all(u < 0)
    k = 1.0
    z = truncation_tail(u, k)
    e1 = form.eval_e1(z)
    m = form.space.measure
    abs_mask = level_mask(u, k, "abs")
    up_mask = level_mask(u, k, "upper")
    assert e1 <= float(np.sum(m[abs_mask] * f[abs_mask] ** 2))
    assert not up_mask.any()
    assert e1 > float(np.sum(m[up_mask] * f[up_mask] ** 2))


# -- decay chain ------------------------------------------------------------

def two_point_embedding_constant(bundle, cap_caches, p):
    return lp_embedding_constant(bundle["two_point_p2"].form, p,
                                 cache=cap_caches["two_point_p2"])


def test_decay_chain_two_point(bundle, cap_caches):
    form = bundle["two_point_p2"].form
    f = np.array([1.0, 0.0])
    u = resolve(form, 2.0, f).u
    q, p_emb, r = 4.0, 4.0, 2.0
    c_emb = two_point_embedding_constant(bundle, cap_caches, p_emb)
    chain = decay_chain(form, u, f, q, p_emb, r, c_emb, h=0.2, k=0.0)
    assert not isinstance(chain, str)
    names = [rep.name for rep in chain]
    assert names == ["energy_truncation", "decay_energy_vs_f2", "decay_hoelder",
                     "decay_growth_lemma", "decay_embedding", "decay_tail",
                     "decay_display"]
    for rep in chain:
        assert rep.passed, f"{rep.name}: lhs={rep.lhs} rhs={rep.rhs}"
    # recompute the display bound from scratch
    display = chain[-1]
    m_k = form.space.mass(level_mask(u, 0.0))
    fq = lp_norm(form.space, f, q)
    c_hat = (2.0 * c_emb ** r) ** (p_emb / r)
    rhs = c_hat / 0.2 ** p_emb * m_k ** ((1 - 2 / q) * p_emb / r) \
        * fq ** (2 * p_emb / r)
    np.testing.assert_allclose(display.rhs, rhs, rtol=1e-12)
    np.testing.assert_allclose(display.lhs, form.space.mass(level_mask(u, 0.2)),
                               rtol=1e-12)


def test_decay_chain_skip_note(bundle, cap_caches):
    # a large datum pushes ||zeta_k||_D past 1 and the pair reports a skip
    form = bundle["two_point_p2"].form
    f = np.array([100.0, 0.0])
    u = resolve(form, 2.0, f).u
    assert dirichlet_norm(form, u).value > 1
    c_emb = two_point_embedding_constant(bundle, cap_caches, 4.0)
    note = decay_chain(form, u, f, 4.0, 4.0, 2.0, c_emb, h=1e-6, k=0.0)
    assert isinstance(note, str) and "skipped" in note


def test_decay_chain_validation(bundle, cap_caches):
    form = bundle["two_point_p2"].form
    u = np.zeros(2)
    with pytest.raises(ValueError):
        decay_chain(form, u, u, 4.0, 4.0, 2.0, 1.0, h=0.0, k=0.0)
    with pytest.raises(ValueError):
        decay_chain(form, u, u, 4.0, 4.0, 2.0, 1.0, h=0.5, k=0.7)


def test_level_decay_check_passes(bundle, cap_caches):
    form = bundle["two_point_p2"].form
    c_emb = two_point_embedding_constant(bundle, cap_caches, 4.0)
    rep = level_decay_check(form, np.array([1.0, 0.0]), q=4.0, p_emb=4.0,
                            r=2.0, c_emb=c_emb)
    assert rep.passed, rep.detail
    assert rep.samples > 0
    with pytest.raises(ValueError):
        level_decay_check(form, np.array([1.0, 0.0]), q=1.0, p_emb=4.0,
                          r=2.0, c_emb=c_emb)


def test_level_decay_check_honest_failure(bundle, cap_caches):
    # every pair inadmissible: the report says so instead of passing silently
    form = bundle["two_point_p2"].form
    c_emb = two_point_embedding_constant(bundle, cap_caches, 4.0)
    rep = level_decay_check(form, np.array([100.0, 0.0]), q=4.0, p_emb=4.0,
                            r=2.0, c_emb=c_emb, ks=np.array([0.0, 1e-6]))
    assert not rep.passed
    assert "no admissible pairs" in rep.detail
    assert rep.samples == 0


# -- vanishing-level lemma --------------------------------------------------

def test_stampacchia_plugin_value():
    # c=1, alpha=1, beta=2, phi0=1: d = 2^{2} = 4
    np.testing.assert_allclose(stampacchia_vanishing_level(1.0, 1.0, 2.0, 1.0),
                               4.0, rtol=1e-14)


def test_stampacchia_scaling_law():
    base = stampacchia_vanishing_level(0.7, 3.0, 2.5, 1.3)
    doubled = stampacchia_vanishing_level(0.7, 3.0, 2.5, 2.6)
    np.testing.assert_allclose(doubled / base, 2.0 ** ((2.5 - 1.0) / 3.0),
                               rtol=1e-12)


def test_stampacchia_validation():
    with pytest.raises(ValueError):
        stampacchia_vanishing_level(1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        stampacchia_vanishing_level(1.0, 0.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        stampacchia_vanishing_level(0.0, 1.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        stampacchia_vanishing_level(1.0, 1.0, 2.0, -1.0)
    assert stampacchia_vanishing_level(1.0, 1.0, 2.0, 0.0) == 0.0


def test_stampacchia_saturating_recursion_oracle():
    """High-precision simulation of the worst case the lemma allows.

    phi_{i+1} = c phi_i^beta / dk_i^alpha with dk_i = d 2^{-(i+1)} saturates
    the decay hypothesis along the classical level ladder; the closed-form d
    must force phi_i <= phi0 2^{-i alpha/(beta-1)}, hence phi -> 0 at k0 + d.
    The recursion amplifies float error by beta each step, so it runs in
    150-digit arithmetic with each increment computed directly.
    """
    mpmath.mp.dps = 150
    rng = np.random.default_rng(2024)
    for _ in range(100):
        beta = float(rng.uniform(1.05, 3.0))
        alpha = float(rng.uniform(0.5, 4.0))
        c = float(rng.uniform(0.1, 10.0))
        phi0 = float(rng.uniform(0.01, 100.0))
        mc, malpha, mbeta = mpmath.mpf(c), mpmath.mpf(alpha), mpmath.mpf(beta)
        mphi0 = mpmath.mpf(phi0)
        # d to 150 digits: any slack in d is amplified by beta each step,
        # so the double-precision value cannot seed the simulation itself
        md = mpmath.power(
            mc * mpmath.power(mphi0, mbeta - 1)
            * mpmath.power(2, malpha * mbeta / (mbeta - 1)), 1 / malpha)
        d = stampacchia_vanishing_level(c, alpha, beta, phi0)
        assert abs(d - float(md)) <= 1e-12 * float(md)
        phi = mphi0
        mu = malpha / (mbeta - 1)
        for i in range(80):
            dk = md * mpmath.power(2, -(i + 1))
            phi = mc * mpmath.power(phi, mbeta) / mpmath.power(dk, malpha)
            bound = mphi0 * mpmath.power(2, -(i + 1) * mu)
            assert phi <= bound * (1 + mpmath.mpf("1e-100")), \
                (beta, alpha, c, phi0, i)


# -- full certificate -------------------------------------------------------

def test_boundedness_certificate_two_point(bundle, cap_caches):
    form = bundle["two_point_p2"].form
    f = np.array([1.0, 0.0])
    c_emb = two_point_embedding_constant(bundle, cap_caches, 6.0)
    cert = boundedness_certificate(form, f, q=8.0, p_emb=6.0, r=2.0,
                                   c_emb=c_emb)
    assert cert.passed
    np.testing.assert_allclose(cert.sup_u, 3.0 / 8.0, atol=1e-8)
    np.testing.assert_allclose(cert.beta, (1 - 2 / 8) * 6 / 2, rtol=1e-14)
    assert cert.alpha == 6.0
    assert cert.k_start == 0.0  # ||u||_D < 1 from the start
    assert cert.phi0 == form.space.total_mass
    assert cert.predicted_level >= cert.sup_u
    assert cert.mass_at_predicted == 0.0
    assert cert.decay.passed
    assert cert.d > 0
    # the prediction is the vanishing level for the fitted recursion data
    np.testing.assert_allclose(
        cert.d, stampacchia_vanishing_level(cert.c_hat, cert.alpha, cert.beta,
                                            cert.phi0), rtol=1e-12)


def test_boundedness_certificate_rejects_weak_hypothesis(bundle):
    form = bundle["two_point_p2"].form
    with pytest.raises(ValueError):
        # (1 - 2/4) * 2 / 2 = 0.5 <= 1
        boundedness_certificate(form, np.array([1.0, 0.0]), q=4.0, p_emb=2.0,
                                r=2.0, c_emb=1.0)


def test_boundedness_certificate_zero_datum(bundle):
    form = bundle["two_point_p2"].form
    cert = boundedness_certificate(form, np.zeros(2), q=8.0, p_emb=6.0, r=2.0,
                                   c_emb=1.0)
    assert cert.sup_u == 0.0 and cert.d == 0.0 and cert.passed
