import math

import numpy as np
import pytest

from dirlab.forms import FormInstance, FormSpec
from dirlab.gauge import (check_growth_lemma, check_lattice_norm_inequalities,
                          check_norm_equivalence, dirichlet_norm,
                          dirichlet_seminorm)
from dirlab.space import FiniteMeasuredSpace


def test_two_point_norm_closed_form(bundle):
    # E1(u/lam) = 3/lam^2 at u = (1,0): gauge is sqrt(3/2)... solved exactly:
    # (1/2)(1/lam)^2 + (1/lam)^2 = 1  =>  lam = sqrt(3/2)
    form = bundle["two_point_p2"].form
    res = dirichlet_norm(form, np.array([1.0, 0.0]))
    np.testing.assert_allclose(res.value, math.sqrt(1.5), rtol=1e-9)
    lo, hi = res.bracket
    assert lo <= res.value <= hi
    assert form.eval_e1(np.array([1.0, 0.0]) / hi) <= 1.0
    assert form.eval_e1(np.array([1.0, 0.0]) / lo) > 1.0
    assert res.evals > 0


def test_norm_scales_on_unit_sphere(bundle, dirichlet_names):
    # E1(u / |u|_D) = 1 for every nonzero u: gauge of a strictly monotone ray
    rng = np.random.default_rng(42)
    for name in dirichlet_names:
        form = bundle[name].form
        u = rng.normal(size=form.space.n) * 3.0
        nd = dirichlet_norm(form, u).value
        assert nd > 0
        np.testing.assert_allclose(form.eval_e1(u / nd), 1.0, rtol=1e-8)


def test_positive_homogeneity(bundle):
    form = bundle["path6_p3"].form
    rng = np.random.default_rng(1)
    u = rng.normal(size=6)
    base = dirichlet_norm(form, u).value
    for c in (0.01, 0.5, 3.0, 250.0):
        np.testing.assert_allclose(dirichlet_norm(form, c * u).value, c * base,
                                   rtol=1e-8)
    np.testing.assert_allclose(dirichlet_norm(form, -u).value, base, rtol=1e-9)


def test_norm_dominates_l2_and_seminorm(bundle, dirichlet_names):
    rng = np.random.default_rng(9)
    for name in dirichlet_names:
        form = bundle[name].form
        for _ in range(20):
            u = rng.normal(size=form.space.n) * float(rng.choice([0.1, 1, 10]))
            nd = dirichlet_norm(form, u).value
            assert nd >= form.space.l2_norm(u) * (1 - 1e-9)
            assert nd >= dirichlet_seminorm(form, u).value * (1 - 1e-9)


def test_seminorm_kills_constants(bundle):
    # no killing term: constants have zero energy, so zero seminorm
    form = bundle["ring6_p3"].form
    res = dirichlet_seminorm(form, np.full(6, 7.0))
    assert res.value == 0.0
    # grounded instance: constants cost energy
    gform = bundle["grounded_ring6_p3"].form
    assert dirichlet_seminorm(gform, np.full(6, 7.0)).value > 0.0


def test_zero_function_gauge():
    space = FiniteMeasuredSpace(np.ones(2))
    form = FormInstance(space, FormSpec(kind="p_energy", p=2.0, edges=((0, 1, 1.0),)))
    res = dirichlet_norm(form, np.zeros(2))
    assert res.value == 0.0 and res.evals == 0


def test_quadratic_norm_matches_exact_formula(bundle):
    # 2-homogeneous energies admit the closed form |u|_D = sqrt(E1(u))
    for name in ("two_point_p2", "path3_p2", "ring8_p2", "grounded_path5_p2"):
        form = bundle[name].form
        rng = np.random.default_rng(4)
        for _ in range(10):
            u = rng.normal(size=form.space.n)
            np.testing.assert_allclose(dirichlet_norm(form, u).value,
                                       math.sqrt(form.eval_e1(u)), rtol=1e-9)
            np.testing.assert_allclose(dirichlet_seminorm(form, u).value,
                                       math.sqrt(form.eval(u)), rtol=1e-9,
                                       atol=1e-12)


def test_p3_norm_against_scalar_root(bundle):
    # for pure p-energy E1(u/lam) = A/lam^p + B/lam^2: root findable 1-d
    scipy = pytest.importorskip("scipy")
    form = bundle["path6_p3"].form
    rng = np.random.default_rng(17)
    for _ in range(5):
        u = rng.normal(size=6) * 2.0
        A = form.eval(u)
        B = form.space.inner(u, u)
        root = scipy.optimize.brentq(lambda lam: A / lam ** 3 + B / lam ** 2 - 1.0,
                                     1e-9, 1e9)
        np.testing.assert_allclose(dirichlet_norm(form, u).value, root, rtol=1e-9)


def test_lattice_and_equivalence_suites(bundle, dirichlet_names):
    for name in dirichlet_names:
        form = bundle[name].form
        rep = check_lattice_norm_inequalities(form, samples=40, seed=3)
        assert rep.passed, name
        eq = check_norm_equivalence(form, samples=40, seed=3)
        assert eq.passed, name
        assert eq.lhs >= 0.5 - 1e-9  # a priori lower bound on the ratio


def test_growth_lemma_suite(bundle):
    for name in ("two_point_p2", "path6_p3", "mixed_path4_p3", "grounded_ring6_p3"):
        rep = check_growth_lemma(bundle[name].form, samples=60, seed=5)
        assert rep.passed, name


def test_growth_lemma_explicit_point(bundle):
    # r = 2: |u|_D^2 = E1(u) exactly on the unit ball boundary and below
    form = bundle["two_point_p2"].form
    u = np.array([0.3, -0.1])
    nd = dirichlet_norm(form, u).value
    assert nd <= 1.0
    assert nd ** 2 <= form.eval_e1(u) + 1e-10
