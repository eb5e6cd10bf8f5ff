"""Acceptance checks, one per criterion, each printing a single PASS/FAIL line.

Run standalone with ``python tests/test_acceptance.py`` or through pytest.
"""
from __future__ import annotations

import math
import os
import sys
import tempfile
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from oracles import GOLDEN, dense_char_det, dense_eigenvalues  # noqa: E402

from maryland import cli  # noqa: E402
from maryland.cocycle import (d_sequence, ftilde_assembly, lyapunov, lyapunov_birkhoff,  # noqa: E402
                              lyapunov_closed_form, avg_log_ptilde, transfer_product, x2_root)
from maryland.determinants import (ModelParams, p_sequence, ptilde_sequence, solution_sequence,  # noqa: E402
                                   sturm_count)
from maryland.errors import SingularDenominator  # noqa: E402
from maryland.interpolation import (check_3eps_uniform, interval_scheme, lagrange_reconstruct,  # noqa: E402
                                    lana_deviation, ptilde_samples)
from maryland.localization import decay_pipeline, expand_identity_check, green_cramer, green_direct  # noqa: E402
from maryland.torus import frequency_from_coeffs, golden  # noqa: E402

G = golden()


def _P(E, lam=1.5, theta=0.2, freq=G):
    return ModelParams(lam, freq, theta, E)


def closed_form_vs_root():
    worst = 0.0
    for lam in (0.5, 1.5, 3.0):
        for E in np.linspace(-3, 3, 21):
            worst = max(worst, abs(lyapunov_closed_form(float(E), lam).value - x2_root(float(E), lam)[1]))
    return worst <= 1e-12, f"max |L_closed - ln|x2|| = {worst:.3g} (tol 1e-12)"


def birkhoff_convergence():
    ok, parts = True, []
    for E in (0.0, 0.5, 1.0):
        p = _P(E)
        L = lyapunov(E, 1.5)
        d = abs(lyapunov_birkhoff(p, 100_000, 64, "D").value - L)
        f = abs(lyapunov_birkhoff(p, 100_000, 64, "F").value - L)
        ok &= d <= 1e-2 and f <= 2e-2
        parts.append(f"E={E}: D {d:.2e}, F+ln2 {f:.2e}")
    return ok, "; ".join(parts) + " (tol 1e-2 / 2e-2)"


def d_growth():
    d = d_sequence(0.0, 1.5, 200)
    g = d.growth(200)
    f2 = d.f0(2)
    ok = abs(g - 2.0) <= 1e-6 and f2 == -0.8125
    return ok, f"|d_200|^(1/199) = {g:.9f} (want 2 +- 1e-6); f_2(0) = {f2.real!r}{'' if f2.imag == 0 else ' + i*' + repr(f2.imag)}"


def determinant_oracles():
    worst_p = worst_pt = worst_asm = 0.0
    for k in range(1, 13):
        got = float(p_sequence(_P(0.5), k)[k])
        want = dense_char_det(1.5, GOLDEN, 0.2, 0.5, k)
        worst_p = max(worst_p, abs(got - want) / abs(want))
    for theta in (0.2, 0.37, 0.81):
        p = _P(0.5, theta=theta)
        P = p_sequence(p, 50)
        Pt = ptilde_sequence(p, 50)
        logc = np.cumsum(np.log(np.abs(np.cos(np.pi * (theta + np.arange(50) * GOLDEN)))))
        sgnc = np.cumprod(np.sign(np.cos(np.pi * (theta + np.arange(50) * GOLDEN))))
        for k in range(1, 51):
            a, b = Pt[k], P[k]
            if b.sign == 0:
                continue
            lm = b.log_mag + logc[k - 1]
            rel = abs(a.sign * math.exp(a.log_mag - lm) - b.sign * sgnc[k - 1])
            worst_pt = max(worst_pt, rel)
    for k in (2, 10, 100, 500):
        p = _P(0.5, theta=0.37)
        F = transfer_product(p, k, "F")
        A = ftilde_assembly(p, k)
        for i in range(2):
            for j in range(2):
                got = math.log(abs(F.entries[i, j])) + F.log_scale
                worst_asm = max(worst_asm, abs(math.expm1(got - A[i, j].log_mag)))
    ok = max(worst_p, worst_pt, worst_asm) <= 1e-8
    return ok, f"P vs dense {worst_p:.1e}, P~ vs cos*P {worst_pt:.1e}, assembly vs product {worst_asm:.1e} (tol 1e-8)"


def average_log_ptilde():
    rep = avg_log_ptilde(_P(0.0), 200, 8192)
    ok = rep.lower_bound - 0.05 <= rep.value <= rep.upper_envelope + 0.05
    return ok, (f"(1/200) int log|P~| = {rep.value:.5f} in [{rep.lower_bound - 0.05:.5f}, "
                f"{rep.upper_envelope + 0.05:.5f}]")


def lagrange_reconstruction():
    sch = interval_scheme(30, G)
    S = ptilde_samples(_P(0.5), sch.sites("I2")[:31], 30)
    worst = 0.0
    for th in np.random.default_rng(1).random(100):
        got = lagrange_reconstruct(S, float(th))
        want = ptilde_sequence(_P(0.5, theta=float(th)), 30)[30]
        worst = max(worst, abs(got.sign * math.exp(got.log_mag - want.log_mag) - want.sign))
    return worst <= 1e-7, f"max relative error {worst:.2e} over 100 phases (tol 1e-7)"


def uniformity_and_case_two():
    p = _P(0.0)
    eps = lyapunov(0.0, 1.5) / 601
    ok, parts = True, []
    for k in (34, 55, 89, 144, 233):
        e = check_3eps_uniform(p, k, eps).epsilon_effective
        ok &= e <= 3 * eps
        parts.append(f"k={k}: {e:.2e}")
    spiky = frequency_from_coeffs([1, 50, 100], tail=[1])
    sch = interval_scheme(60, spiky)
    shape = (tuple(sch.I1), tuple(sch.I2), sch.h)
    ok &= shape == ((-100, -50), (9, 59), 102)
    return ok, f"eps_eff {', '.join(parts)} (3eps = {3 * eps:.2e}); spiky k=60 -> I1={shape[0]} I2={shape[1]} h={shape[2]}"


def green_oracles():
    rng = np.random.default_rng(7)
    worst, done = 0.0, 0
    while done < 200:
        n = int(rng.integers(1, 201))
        x1 = int(rng.integers(-500, 500))
        y = x1 + int(rng.integers(0, n))
        p = _P(float(rng.uniform(-4, 4)), float(rng.uniform(0.5, 3)), float(rng.random()))
        try:
            c = green_cramer(p, x1, x1 + n - 1, y, floor=-20.0)
        except SingularDenominator:
            continue
        for a, b in zip(c, green_direct(p, x1, x1 + n - 1, y)):
            worst = max(worst, abs(a.value.sign * math.exp(a.value.log_mag - b.value.log_mag) - b.value.sign))
        done += 1
    res = 0.0
    for _ in range(100):
        p = _P(float(rng.uniform(-3, 3)), 1.5, float(rng.random()))
        x1 = int(rng.integers(-100, 100))
        n = int(rng.integers(1, 51))
        phi = solution_sequence(p, tuple(rng.normal(size=2)), (x1 - 1, x1 + n))
        res = max(res, expand_identity_check(p, phi, x1, x1 + n - 1, x1 + int(rng.integers(0, n))))
    return worst <= 1e-6 and res <= 1e-8, f"Cramer vs direct {worst:.1e} (tol 1e-6); expansion residual {res:.1e} (tol 1e-8)"


def _pipeline_line(res, target_L):
    fit = res.fit
    ok = (res.regular_fraction >= 0.95 and abs(-fit.slope / target_L - 1) <= 0.15
          and fit.r_squared >= 0.98 and fit.theorem_bound_pass)
    return ok, (f"E={res.energy:.5g} regular {res.regular_fraction:.3f}, slope {fit.slope:.4f} vs "
                f"-{target_L:.4f}, r2 {fit.r_squared:.4f}, sitewise bound {'ok' if fit.theorem_bound_pass else 'violated'}")


def localization_pipeline():
    ok, parts = True, []
    a = decay_pipeline(_P(0.0), 2000, 0.0, (30, 400))
    r, s = _pipeline_line(a, math.log(2))
    ok &= r
    parts.append(f"lam=1.5 {s}")
    b = decay_pipeline(_P(0.0, 3.0), 2000, 0.0, (30, 400))
    r, s = _pipeline_line(b, b.lyapunov)
    ok &= r
    parts.append(f"lam=3 {s}")
    g = decay_pipeline(_P(0.0), 2000, 0.0, (30, 400), which="ground")
    r, s = _pipeline_line(g, g.lyapunov)
    parts.append(f"[ground state, not gated: {'pass' if r else 'fail'} {s}]")
    return ok, "; ".join(parts)


def sturm_correctness():
    rng = np.random.default_rng(3)
    bad = 0
    for N in range(1, 13):
        theta = float(rng.random())
        p = _P(0.0, 1.5, theta)
        ev = dense_eigenvalues(1.5, GOLDEN, theta, 0, N - 1)
        for E in rng.uniform(ev.min() - 1, ev.max() + 1, 50):
            bad += sturm_count(p, N, float(E)) != int(np.sum(ev < E))
    return bad == 0, f"{bad} mismatches over 12 boxes x 50 energies"


def trig_product_stability():
    rng = np.random.default_rng(4)
    thetas = rng.random(100)
    consts = {}
    for q in (55, 89, 144, 233, 377):
        n = list(G.q).index(q)
        consts[q] = max(abs(lana_deviation(float(t), G, n)[0]) for t in thetas) / math.log(q)
    spread = max(consts.values()) / min(consts.values())
    shown = ", ".join(f"{q}: {c:.3f}" for q, c in consts.items())
    return spread <= 2.0, f"max|dev|/ln q_n = {shown}; spread {spread:.3f} (tol 2)"


def cli_determinism():
    with tempfile.TemporaryDirectory() as tmp:
        outs = []
        for threads in ("1", "8"):
            d = os.path.join(tmp, threads)
            code = cli.main(["lemma-suite", "--threads", threads, "--out", d])
            with open(os.path.join(d, "lemma-suite.csv"), "rb") as fh:
                outs.append((code, fh.read()))
    same = outs[0][1] == outs[1][1]
    return same and outs[0][0] == 0, f"threads 1 vs 8: CSVs {'identical' if same else 'differ'}, exit codes {outs[0][0]}/{outs[1][0]}"


CRITERIA = [
    (1, "closed form equals root identity", closed_form_vs_root),
    (2, "Birkhoff averages converge", birkhoff_convergence),
    (3, "d_k growth and f_2", d_growth),
    (4, "determinant oracles", determinant_oracles),
    (5, "phase average of log|P~_200|", average_log_ptilde),
    (6, "Lagrange reconstruction", lagrange_reconstruction),
    (7, "uniformity and second-case scheme", uniformity_and_case_two),
    (8, "Green's function oracles", green_oracles),
    (9, "localization pipeline", localization_pipeline),
    (10, "Sturm counts", sturm_correctness),
    (11, "trigonometric product diagnostic", trig_product_stability),
    (12, "lemma-suite determinism", cli_determinism),
]


def _report(num, title, fn):
    t = time.perf_counter()
    ok, detail = fn()
    line = f"criterion {num:2d} {'PASS' if ok else 'FAIL'} [{time.perf_counter() - t:6.1f}s] {title}: {detail}"
    return ok, line


@pytest.mark.parametrize("num,title,fn", CRITERIA, ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_criterion(num, title, fn, capsys):
    ok, line = _report(num, title, fn)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [_report(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
