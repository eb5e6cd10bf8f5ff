import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maryland.cocycle import (ScaledMatrix2, avg_log_ptilde, cos_product, d_sequence, ftilde_assembly, lyapunov,
                              lyapunov_birkhoff, lyapunov_closed_form, step_D, step_F, transfer_product, x2_root)
from maryland.determinants import ModelParams, ptilde_value
from maryland.errors import SingularPhase
from maryland.torus import golden
from oracles import GOLDEN, closed_form_lyapunov, largest_quadratic_root

G = golden()


def P(E=0.0, lam=1.5, theta=0.2):
    return ModelParams(lam, G, theta, E)


def test_step_matrices():
    np.testing.assert_array_equal(step_D(P(0.0, 1.0), 0.0), [[0.0, -1.0], [1.0, 0.0]])
    D = step_D(P(2.0), 0.2)
    assert D[0, 0] == pytest.approx(2 - 1.5 * math.tan(0.2 * math.pi), rel=1e-15)
    assert D[0, 0] == pytest.approx(0.9101, abs=1e-4)
    with pytest.raises(SingularPhase):
        step_D(P(), 0.5)
    np.testing.assert_allclose(step_F(P(0.7), 0.5), [[-1.5, 0.0], [0.0, 0.0]], atol=1e-15)
    np.testing.assert_allclose(step_F(P(0.7), 0.0), [[0.7, -1.0], [1.0, 0.0]], atol=1e-15)


@given(st.floats(0.0, 1.0).filter(lambda t: abs(t - 0.5) > 1e-3), st.floats(-4, 4))
def test_step_determinants(t, E):
    assert np.linalg.det(step_D(P(E), t)) == pytest.approx(1.0, rel=1e-12)
    assert np.linalg.det(step_F(P(E), t)) == pytest.approx(math.cos(math.pi * t) ** 2, abs=1e-12)


def test_identity_and_inverse_products():
    I = transfer_product(P(0.3), 0)
    np.testing.assert_array_equal(I.matrix(), np.eye(2))
    assert I.log_scale == 0.0
    back = transfer_product(P(0.3), -5)
    fwd = transfer_product(P(0.3, theta=0.2 - 5 * G.value), 5)
    np.testing.assert_allclose((fwd @ back).matrix(), np.eye(2), atol=1e-9)


def test_long_products_keep_unit_determinant():
    M = transfer_product(P(0.4), 10_000)
    d = M.det()
    assert d.sign == 1 and abs(d.log_mag) <= 1e-8


def test_scaled_matrix_product_matches_dense():
    a = ScaledMatrix2.from_matrix(np.array([[3.0, 1.0], [2.0, -5.0]]))
    b = ScaledMatrix2.from_matrix(np.array([[0.5, -1.0], [4.0, 1.0]]))
    np.testing.assert_allclose((a @ b).matrix(), a.matrix() @ b.matrix(), rtol=1e-14)
    assert float((a @ b).det()) == pytest.approx(np.linalg.det(a.matrix() @ b.matrix()), rel=1e-13)


def test_f_product_top_left_is_ptilde():
    for k in (5, 40):
        F = transfer_product(P(0.5), k, "F")
        pt = ptilde_value(P(0.5), k)
        assert abs(F.entries[0, 0]) * math.exp(F.log_scale) == pytest.approx(math.exp(pt.log_mag), rel=1e-9)


@pytest.mark.parametrize("k", [2, 10, 100, 500])
def test_f_product_matches_assembly_up_to_sign(k):
    params = P(0.5, theta=0.37)
    F = transfer_product(params, k, "F")
    A = ftilde_assembly(params, k)
    sign = None
    for i in range(2):
        for j in range(2):
            got_log = math.log(abs(F.entries[i, j])) + F.log_scale
            assert got_log == pytest.approx(A[i, j].log_mag, abs=1e-8)
            s = int(np.sign(F.entries[i, j])) * A[i, j].sign
            sign = s if sign is None else sign
            assert s == sign


def test_closed_form_values():
    assert lyapunov(0.0, 1.5) == pytest.approx(math.log(2.0), abs=1e-15)
    assert lyapunov_closed_form(0.0, 1.5).method == "closed_form"
    assert lyapunov(0.0, 1e-9) < 1e-4
    for E in (0.3, 1.7, 5.0):
        assert lyapunov(E, 2.0) == lyapunov(-E, 2.0)
    with pytest.raises(ValueError):
        lyapunov(0.0, 0.0)


@given(st.floats(-6, 6), st.floats(0.05, 10))
def test_closed_form_against_arbitrary_precision(E, lam):
    assert lyapunov(E, lam) == pytest.approx(closed_form_lyapunov(E, lam), abs=1e-13)


@given(st.floats(-6, 6), st.floats(0.05, 10))
def test_root_identity(E, lam):
    x2, lx = x2_root(E, lam)
    ref = largest_quadratic_root(E, lam)
    assert abs(x2 - ref) <= 1e-10 * abs(ref)
    assert lx == pytest.approx(lyapunov(E, lam), abs=1e-12)
    assert abs(x2 * (1 / x2)) == pytest.approx(1.0)


def test_root_example():
    x2, lx = x2_root(0.0, 1.5)
    assert x2 == pytest.approx(2j)
    assert lx == pytest.approx(math.log(2))


def test_d_sequence_values():
    d = d_sequence(0.0, 1.5, 200)
    assert d.value(1) == pytest.approx(1.5j)
    assert d.value(2) == pytest.approx(-3.25)
    assert d.f0(2) == -0.8125
    assert d.ratio(200) == pytest.approx(2.0, abs=1e-6)


def test_birkhoff_estimates():
    params = P(0.0)
    d = lyapunov_birkhoff(params, 10_000, 64, "D")
    f = lyapunov_birkhoff(params, 10_000, 64, "F")
    assert abs(d.value - math.log(2)) <= 1e-2
    assert abs(f.value - d.value) <= 2e-2
    assert f.method == "birkhoff_F_plus_ln2" and d.k_used == 10_000


def test_birkhoff_is_thread_independent():
    params = P(0.5)
    a = lyapunov_birkhoff(params, 2000, 64, "D", threads=1).value
    b = lyapunov_birkhoff(params, 2000, 64, "D", threads=4).value
    assert a == b


def test_birkhoff_upper_averages_decrease_along_doubling():
    params = P(0.5)
    vals = [lyapunov_birkhoff(params, 2**m, 256, "D").value for m in range(0, 11)]
    assert all(b <= a + 1e-3 for a, b in zip(vals, vals[1:]))


def test_average_log_ptilde():
    rep = avg_log_ptilde(P(0.0), 1, 4096)
    assert rep.value == pytest.approx(math.log(1.5) - math.log(2), abs=1e-3)
    rep = avg_log_ptilde(P(0.0), 200, 8192)
    assert rep.lower_bound - 0.05 <= rep.value <= rep.upper_envelope + 0.05
    shifted = avg_log_ptilde(P(0.0, theta=0.2 + GOLDEN), 200, 8192)
    assert shifted.value == pytest.approx(rep.value, abs=1e-3)


def test_cos_product():
    one = cos_product(0.0, G, 0, 0)
    assert one.value.sign == 1 and one.value.log_mag == 0.0
    long = cos_product(0.2, G, 0, 9_999)
    assert abs(long.excess) <= 1e-2
    c = np.cos(np.pi * (0.2 + np.arange(0, 30) * GOLDEN))
    short = cos_product(0.2, G, 0, 29)
    assert short.value.sign == (-1) ** int(np.sum(c < 0))
    assert short.value.log_mag == pytest.approx(np.sum(np.log(np.abs(c))), rel=1e-12)
