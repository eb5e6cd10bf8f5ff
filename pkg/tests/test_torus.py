import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maryland.errors import EmptyCoefficients, InsufficientConvergents, RationalInput, SingularPhase
from maryland.torus import (beta_estimate, check_phase_guard, expand_cf, frequency_from_coeffs, golden,
                            silver, singular_phase_distance, torus_norm)
from oracles import GOLDEN


@pytest.mark.parametrize("x, want", [(0.0, 0.0), (0.7, 0.3), (-1.5, 0.5), (3.25, 0.25)])
def test_torus_norm_values(x, want):
    assert torus_norm(x) == pytest.approx(want, abs=1e-15)


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_torus_norm_periodic_even_bounded(x):
    d = torus_norm(x)
    assert 0.0 <= d <= 0.5
    assert torus_norm(-x) == pytest.approx(d, abs=1e-9)
    assert torus_norm(x + 1.0) == pytest.approx(d, abs=1e-9)


def test_golden_expansion_is_all_ones():
    f = expand_cf(GOLDEN, 100)
    assert set(f.cf_coeffs) == {1}
    assert f.q == [1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89]


def test_silver_expansion_is_all_twos():
    f = expand_cf(math.sqrt(2.0) - 1.0, 100)
    assert set(f.cf_coeffs) == {2}
    assert f.q == [1, 2, 5, 12, 29, 70]


def test_rational_input_is_rejected():
    with pytest.raises(RationalInput):
        expand_cf(0.375, 10**6)


def test_expansion_stops_at_float_resolution():
    f = expand_cf(GOLDEN, 10**30)
    assert set(f.cf_coeffs) == {1}
    p, q = f.convergents[-1]
    assert abs(GOLDEN - p / q) < 2.0 ** -40
    assert 10**5 < q < 10**7


def test_rounded_decimal_keeps_only_resolved_quotients():
    f = expand_cf(0.1, 10**9)
    assert f.cf_coeffs == (9, 1)


def test_prescribed_coefficients_give_exact_denominators():
    f = frequency_from_coeffs([1, 50, 100], tail=[1], max_q=10**6)
    assert f.q[:4] == [1, 1, 51, 5101]
    assert f.cf_coeffs[:3] == (1, 50, 100)
    assert set(f.cf_coeffs[3:]) == {1}


def test_periodic_continuations_converge_to_quadratic_surds():
    assert golden().value == pytest.approx(GOLDEN, abs=1e-15)
    assert silver().value == pytest.approx(math.sqrt(2.0) - 1.0, abs=1e-15)
    # fixed points of x = 1/(a + x)
    for f, a in ((golden(), 1), (silver(), 2)):
        assert f.value == pytest.approx(1.0 / (a + f.value), abs=1e-15)


def test_empty_coefficients():
    with pytest.raises(EmptyCoefficients):
        frequency_from_coeffs([])


def test_convergent_bounds_hold_for_every_stored_n():
    for f in (golden(10**7), silver(10**7), frequency_from_coeffs([1, 50, 100], tail=[1], max_q=10**7)):
        for n, q, d, lo, hi in f.approximation_bounds():
            if n == 0 and f.cf_coeffs[0] == 1:
                continue  # p_0 = 0 is not the nearest integer to alpha > 1/2
            assert lo * (1 - 1e-6) <= d <= hi * (1 + 1e-6), (n, q)


@pytest.mark.parametrize("freq", [golden(10**4), silver(10**4)])
def test_best_approximation_by_brute_force(freq):
    qs = freq.q
    ks = np.arange(1, 10**4)
    norms = np.abs(ks * freq.value - np.round(ks * freq.value))
    for n in range(len(qs) - 1):
        if qs[n + 1] < 2:
            continue
        below = norms[: qs[n + 1] - 1]
        assert below.min() >= torus_norm(qs[n] * freq.value) * (1 - 1e-9)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=3, max_size=8))
def test_coefficients_roundtrip_through_gauss_map(coeffs):
    f = frequency_from_coeffs(coeffs, max_q=10**6)
    g = expand_cf(f.value, 10**4)
    m = len(g.cf_coeffs)
    assert g.cf_coeffs == f.cf_coeffs[:m]


def test_beta_estimate_golden_ratio_at_55():
    f = golden(10**5)
    rep = beta_estimate(f, 5)
    n55 = f.q.index(55, 2)
    assert rep.per_n_ratios[n55] == pytest.approx(math.log(89) / 55, rel=1e-12)
    assert rep.per_n_ratios[n55] == pytest.approx(0.0816, abs=1e-4)
    assert rep.beta_estimate == max(rep.per_n_ratios[5:])


def test_beta_estimate_silver_decreasing():
    f = silver(10**6)
    rep = beta_estimate(f, 4)
    n29 = f.q.index(29)
    assert rep.per_n_ratios[n29] == pytest.approx(math.log(70) / 29, rel=1e-12)
    tail = rep.per_n_ratios[n29:]
    assert all(a > b for a, b in zip(tail, tail[1:]))


def test_beta_estimate_flags_large_partial_quotient():
    f = frequency_from_coeffs([10, 10**6], tail=[1], max_q=10**9)
    rep = beta_estimate(f, 1)
    n10 = f.q.index(10)
    assert rep.per_n_ratios[n10] == pytest.approx(math.log(10**7 + 1) / 10, rel=1e-12)
    assert rep.beta_estimate > 1.6


def test_beta_estimate_margin_and_errors():
    f = golden(1000)
    rep = beta_estimate(f, 2, epsilon=0.1)
    assert len(rep.qnalpha_margin) == len(f)
    with pytest.raises(InsufficientConvergents):
        beta_estimate(f, len(f))


def test_singular_phase_distance_examples():
    g = golden()
    assert singular_phase_distance(0.5, g, (0, 3)) == 0.0
    assert singular_phase_distance(0.0, g, (0, 0)) == 0.5
    brute = min(abs((0.2 + n * GOLDEN - 0.5) - round(0.2 + n * GOLDEN - 0.5)) for n in range(11))
    assert singular_phase_distance(0.2, g, (0, 10)) == pytest.approx(brute, abs=1e-14)


def test_guard_names_offending_site():
    g = golden()
    theta = 0.5 - 7 * g.value
    with pytest.raises(SingularPhase) as info:
        check_phase_guard(theta, g, (-5, 20))
    assert info.value.site == 7
    check_phase_guard(0.2, g, (0, 100))
