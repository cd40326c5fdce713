import math

import numpy as np
import pytest

from dirlab.capacity import (CapacityResult, capacity,
                             capacity_monotonicity_check, chebyshev_check,
                             is_polar)
from dirlab.gauge import dirichlet_norm

scipy_opt = pytest.importorskip("scipy.optimize")

SMALL_QUADRATIC = ["two_point_p2", "two_point_p2_grounded", "path3_p2"]


def brute_capacity(form, mask):
    """Independent route for 2-homogeneous energies: cap = sqrt(min E1)
    over the half-space constraint, solved by box-constrained quasi-Newton
    with numerical derivatives."""
    n = form.space.n
    bounds = [(1.0, None) if mask[i] else (None, None) for i in range(n)]
    best = math.inf
    for start in (np.ones(n), np.where(mask, 1.0, 0.0), np.full(n, 2.0)):
        r = scipy_opt.minimize(form.eval_e1, start, method="L-BFGS-B",
                               bounds=bounds, options={"ftol": 1e-14,
                                                       "gtol": 1e-12,
                                                       "maxiter": 5000})
        best = min(best, float(r.fun))
    return math.sqrt(best)


def test_two_point_singleton_closed_form(bundle, cap_caches):
    # min over u1 of (1-u1)^2/2 + 1 + u1^2 is 4/3 at u1 = 1/3
    form = bundle["two_point_p2"].form
    res = capacity(form, form.space.subset([0]), outer_tol=1e-8,
                   cache=cap_caches["two_point_p2"])
    np.testing.assert_allclose(res.value, math.sqrt(4.0 / 3.0), rtol=1e-7)
    np.testing.assert_allclose(res.witness, [1.0, 1.0 / 3.0], atol=1e-4)
    assert res.outer_iters > 0 and res.inner_iters > 0


def test_two_point_singleton_scalar_oracle(bundle):
    # same value from a 1-d minimization over the free coordinate
    form = bundle["two_point_p2"].form
    r = scipy_opt.minimize_scalar(
        lambda u1: (1.0 - u1) ** 2 / 2.0 + 1.0 + u1 ** 2, bounds=(-5, 5),
        method="bounded", options={"xatol": 1e-12})
    cap = capacity(form, form.space.subset([0]), outer_tol=1e-8).value
    np.testing.assert_allclose(cap, math.sqrt(r.fun), rtol=1e-7)


def test_two_point_grounded_singleton_closed_form(bundle, cap_caches):
    # with unit killing on both points: min (1-u1)^2/2 + (1+u1^2)/2 + 1 + u1^2
    # gives u1 = 1/4 and value 15/8
    form = bundle["two_point_p2_grounded"].form
    res = capacity(form, form.space.subset([0]), outer_tol=1e-8,
                   cache=cap_caches["two_point_p2_grounded"])
    np.testing.assert_allclose(res.value, math.sqrt(15.0 / 8.0), rtol=1e-7)


def test_full_set_capacity_is_norm_of_one(bundle, dirichlet_names, cap_caches):
    # constants are optimal on the whole space: cap(X) = |1|_D, and without
    # killing that is sqrt(m(X))
    for name in dirichlet_names:
        form = bundle[name].form
        full = np.ones(form.space.n, dtype=bool)
        cap = capacity(form, full, outer_tol=1e-7, cache=cap_caches[name]).value
        norm_one = dirichlet_norm(form, np.ones(form.space.n)).value
        assert cap <= norm_one * (1 + 1e-6), name
        if not form._kap.any():
            np.testing.assert_allclose(cap, math.sqrt(form.space.total_mass),
                                       rtol=1e-6, err_msg=name)


@pytest.mark.parametrize("name", SMALL_QUADRATIC)
def test_all_subsets_against_brute_force(bundle, cap_caches, name):
    form = bundle[name].form
    n = form.space.n
    for bits in range(1, 2 ** n):
        mask = np.array([(bits >> i) & 1 == 1 for i in range(n)])
        got = capacity(form, mask, outer_tol=1e-6, cache=cap_caches[name]).value
        want = brute_capacity(form, mask)
        np.testing.assert_allclose(got, want, rtol=1e-3,
                                   err_msg=f"{name} subset {bits:b}")


def test_empty_set_and_polarity(bundle):
    form = bundle["path3_p2"].form
    empty = np.zeros(3, dtype=bool)
    res = capacity(form, empty)
    assert res.value == 0.0
    assert is_polar(form, empty)
    assert not is_polar(form, form.space.subset([1]))


def test_witness_is_feasible_and_tight(bundle, cap_caches):
    form = bundle["ring6_p3"].form
    mask = form.space.subset([0, 3])
    res = capacity(form, mask, outer_tol=1e-7, cache=cap_caches["ring6_p3"])
    assert np.all(res.witness[mask] >= 1.0 - 1e-12)
    wnorm = dirichlet_norm(form, res.witness).value
    assert res.value <= wnorm <= res.value * (1 + 1e-5)


def test_capacity_monotone_under_inclusion(bundle, cap_caches):
    form = bundle["path5_p2"].form
    sub = form.space.subset([2])
    sup = form.space.subset([1, 2, 3])
    c1 = capacity(form, sub, outer_tol=1e-7, cache=cap_caches["path5_p2"]).value
    c2 = capacity(form, sup, outer_tol=1e-7, cache=cap_caches["path5_p2"]).value
    assert c1 <= c2 * (1 + 1e-6)


def test_monotonicity_suite(bundle, cap_caches):
    rep = capacity_monotonicity_check(bundle["path3_p2"].form, samples=25, seed=1,
                                      outer_tol=1e-7,
                                      cache=cap_caches["path3_p2"])
    assert rep.passed
    assert rep.samples >= 25


def test_cache_returns_identical_result(bundle):
    form = bundle["two_point_p2"].form
    cache = {}
    mask = form.space.subset([1])
    first = capacity(form, mask, outer_tol=1e-6, cache=cache)
    second = capacity(form, mask, outer_tol=1e-6, cache=cache)
    assert first is second
    third = capacity(form, mask, outer_tol=1e-7, cache=cache)
    assert third is not first  # tighter tolerance is a different cache row
    assert len(cache) == 2


def test_chebyshev_inequality_sampled(bundle, cap_caches):
    form = bundle["path6_p3"].form
    rng = np.random.default_rng(23)
    for _ in range(10):
        f = rng.normal(size=6) * float(rng.choice([0.5, 2.0]))
        lam = float(rng.uniform(0.1, 1.5))
        if not np.any(np.abs(f) >= lam):
            continue
        rep = chebyshev_check(form, f, lam, outer_tol=1e-7,
                              cache=cap_caches["path6_p3"])
        assert rep.passed, rep.detail


def test_chebyshev_rejects_bad_level(bundle):
    form = bundle["two_point_p2"].form
    with pytest.raises(ValueError):
        chebyshev_check(form, np.ones(2), 0.0)


def test_capacity_result_shape():
    res = CapacityResult(1.0, np.zeros(2), 3, 17)
    assert res.value == 1.0 and res.outer_iters == 3 and res.inner_iters == 17
