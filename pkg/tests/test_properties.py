"""Randomised invariants over generated profiles and polynomials"""

import numpy as np
import pytest

from weightlab.convexity import (
    convex_minorant, evaluate_minorant, is_log_convex, minorant_profile, monomial_log_norms,
)
from weightlab.models import PolyFunction
from weightlab.operators import apply_D, apply_I

CASES = 200


def test_minorant_is_idempotent(rng, make_profile):
    for _ in range(CASES):
        p = make_profile(convex=bool(rng.integers(2)))
        once = minorant_profile(p)
        twice = minorant_profile(once)
        np.testing.assert_allclose(twice.phis, once.phis, rtol=0, atol=1e-9)


def test_minorant_lies_below_and_touches(make_profile):
    for _ in range(CASES):
        p = make_profile(convex=False)
        q = convex_minorant(p)
        hull = evaluate_minorant(q, p.xs)
        assert np.all(hull <= p.phis + 1e-9)
        assert hull[0] == p.phis[0] and hull[-1] == p.phis[-1]
        assert np.all(np.diff(q.slopes) > -1e-9)
        assert is_log_convex(minorant_profile(p), tol=1e-7)[0]


def test_convex_profiles_pass_the_convexity_test(make_profile):
    for _ in range(CASES):
        assert is_log_convex(make_profile(convex=True))[0]


def test_norms_are_convex_in_n(rng, make_profile):
    for _ in range(CASES):
        p = make_profile(convex=bool(rng.integers(2)))
        m = monomial_log_norms(p, 12, refine=False, on_boundary='flag')
        second = m.A[2:] - 2.0 * m.A[1:-1] + m.A[:-2]
        assert np.all(second >= -1e-9 * np.maximum(1.0, np.abs(m.A[1:-1])))
        # A_n dominates every grid candidate
        n = np.arange(13)[:, None]
        assert np.all(m.A[:, None] >= n * p.xs[None, :] - p.phis[None, :] - 1e-9)


def test_norms_see_only_the_minorant(make_profile):
    for _ in range(CASES):
        p = make_profile(convex=False)
        raw = monomial_log_norms(p, 12, refine=False, on_boundary='flag')
        hull = monomial_log_norms(minorant_profile(p), 12, refine=False, on_boundary='flag')
        np.testing.assert_allclose(hull.A, raw.A, rtol=0, atol=1e-9)


@pytest.mark.parametrize("degree", [0, 1, 5, 17])
def test_differentiation_inverts_integration(rng, degree):
    for _ in range(CASES // 4):
        f = PolyFunction(tuple(rng.uniform(0.0, 5.0, degree + 1)))
        np.testing.assert_allclose(apply_D(apply_I(f)).coeffs, f.coeffs, rtol=1e-14)
        assert apply_I(f).coeffs[0] == 0.0
        assert apply_I(f).degree == f.degree + 1
